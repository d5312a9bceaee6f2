#pragma once

// HLAC / MUCHLAC product-sum features.
//
// For a mask at distance m the response is the sum, over every reference
// position r whose full (2m+1)x(2m+1) window lies inside the patch, of the
// product of intensities at r + offset for each mask point. A mask class can
// sit in the window in more than one way (e.g. {0,(m,0)} and {(-m,0),0}); the
// response is the mean over those placements, which makes orbit sums exactly
// rotation/reflection invariant.

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "muchlac/common.hpp"
#include "muchlac/feature_matrix.hpp"
#include "muchlac/masks.hpp"
#include "muchlac/raster.hpp"

namespace muchlac {

enum class Invariance { none, rotation_reflection };

inline const char* to_string(Invariance inv) { return inv == Invariance::none ? "none" : "d4"; }

struct ExtractConfig {
  std::vector<std::size_t> bands;  // empty = every channel of the raster, in order
  std::vector<int> distances{1, 2, 3, 4};
  bool use_cross_channel = true;
  Invariance invariance = Invariance::rotation_reflection;
  unsigned threads = 1;
};

inline nlohmann::ordered_json to_json(const ExtractConfig& c) {
  nlohmann::ordered_json j;
  j["feature"] = c.use_cross_channel ? "muchlac" : "hlac";
  j["bands"] = c.bands;
  j["distances"] = c.distances;
  j["invariance"] = to_string(c.invariance);
  return j;
}

// Masks of one kind at one distance, with precomputed placements.
struct MaskSet {
  MaskKind kind = MaskKind::hlac;
  int m = 1;
  std::vector<MaskPattern> masks;
  std::vector<MaskGroup> groups;
  std::vector<std::vector<MaskPoints>> placements;                     // per mask
  std::vector<std::vector<std::vector<MaskPoints>>> term_placements;  // per group, per term

  static MaskSet build(MaskKind kind, int m) { return from_masks(enumerate_masks(kind, m)); }

  static MaskSet from_masks(std::vector<MaskPattern> masks) {
    MaskSet s;
    if (!masks.empty()) {
      s.kind = masks.front().kind;
      s.m = masks.front().m;
    }
    s.masks = std::move(masks);
    s.groups = d4_orbits(s.masks);
    for (const auto& mk : s.masks) s.placements.push_back(mask_placements(mk.points, mk.m));
    for (const auto& g : s.groups) {
      std::vector<std::vector<MaskPoints>> per_term;
      for (const auto& t : g.terms) per_term.push_back(mask_placements(t, s.m));
      s.term_placements.push_back(std::move(per_term));
    }
    return s;
  }

  std::size_t components(Invariance inv) const { return inv == Invariance::none ? masks.size() : groups.size(); }
};

struct MaskBank {
  std::vector<int> distances;
  std::vector<MaskSet> hlac;     // per distance
  std::vector<MaskSet> muchlac;  // per distance; empty when cross-channel is off

  static MaskBank build(const ExtractConfig& config) {
    if (config.distances.empty()) throw std::invalid_argument("at least one displacement distance is required");
    MaskBank bank;
    bank.distances = config.distances;
    for (int m : config.distances) {
      if (m < 1) throw std::invalid_argument("displacement distances must be >= 1");
      bank.hlac.push_back(MaskSet::build(MaskKind::hlac, m));
      if (config.use_cross_channel) bank.muchlac.push_back(MaskSet::build(MaskKind::muchlac, m));
    }
    return bank;
  }
};

namespace features_detail {

inline void check_window(std::size_t width, std::size_t height, int m) {
  const auto side = static_cast<std::size_t>(2 * m + 1);
  if (width < side || height < side)
    throw std::invalid_argument("patch too small for distance m=" + std::to_string(m));
}

// Sum over the valid region of the product at one placement. Summation is
// row-major so results are reproducible.
inline double placement_sum(std::span<const Plane> slots, const MaskPoints& pts, int m) {
  const Plane& base = slots[0];
  const auto w = static_cast<std::ptrdiff_t>(base.width);
  const auto h = static_cast<std::ptrdiff_t>(base.height);
  std::array<const double*, 3> ptr{};
  const std::size_t n = pts.size();
  if (n > ptr.size()) throw std::invalid_argument("masks above second order are not supported");
  std::array<std::ptrdiff_t, 3> shift{};
  for (std::size_t k = 0; k < n; ++k) {
    ptr[k] = slots[static_cast<std::size_t>(pts[k].slot)].data.data();
    shift[k] = pts[k].dy * w + pts[k].dx;
  }
  double total = 0.0;
  for (std::ptrdiff_t y = m; y < h - m; ++y) {
    for (std::ptrdiff_t x = m; x < w - m; ++x) {
      const std::ptrdiff_t r = y * w + x;
      double prod = ptr[0][r + shift[0]];
      for (std::size_t k = 1; k < n; ++k) prod *= ptr[k][r + shift[k]];
      total += prod;
    }
  }
  return total;
}

inline double response(std::span<const Plane> slots, const std::vector<MaskPoints>& placements, int m) {
  double sum = 0.0;
  for (const auto& p : placements) sum += placement_sum(slots, p, m);
  return sum / static_cast<double>(placements.size());
}

inline std::vector<double> responses(std::span<const Plane> slots, const MaskSet& set, Invariance inv) {
  check_window(slots[0].width, slots[0].height, set.m);
  std::vector<double> out;
  if (inv == Invariance::none) {
    out.reserve(set.masks.size());
    for (const auto& pl : set.placements) out.push_back(response(slots, pl, set.m));
  } else {
    out.reserve(set.groups.size());
    for (const auto& terms : set.term_placements) {
      double sum = 0.0;
      for (const auto& pl : terms) sum += response(slots, pl, set.m);
      out.push_back(sum);
    }
  }
  return out;
}

}  // namespace features_detail

// Per-mask responses of a single channel.
inline std::vector<double> extract_hlac(const Plane& channel, const MaskSet& set,
                                        Invariance inv = Invariance::none) {
  if (set.kind != MaskKind::hlac) throw std::invalid_argument("extract_hlac needs single-channel masks");
  const std::array<Plane, 1> slots{channel};
  return features_detail::responses(slots, set, inv);
}

inline std::vector<double> extract_hlac(const Plane& channel, const std::vector<MaskPattern>& masks, int m) {
  for (const auto& mk : masks)
    if (mk.m != m) throw std::invalid_argument("mask distance differs from m");
  return extract_hlac(channel, MaskSet::from_masks(masks));
}

// Slot 0 reads band_a, slot 1 reads band_b.
inline std::vector<double> extract_muchlac_pair(const MultibandRaster& patch, std::size_t band_a, std::size_t band_b,
                                                const MaskSet& set, Invariance inv = Invariance::none) {
  if (set.kind != MaskKind::muchlac) throw std::invalid_argument("extract_muchlac_pair needs cross-channel masks");
  if (band_a >= patch.channels() || band_b >= patch.channels()) throw std::out_of_range("band index outside raster");
  const std::array<Plane, 2> slots{patch.plane(band_a), patch.plane(band_b)};
  return features_detail::responses(slots, set, inv);
}

inline std::vector<double> extract_muchlac_pair(const MultibandRaster& patch, std::size_t band_a, std::size_t band_b,
                                                const std::vector<MaskPattern>& masks, int m) {
  for (const auto& mk : masks)
    if (mk.m != m) throw std::invalid_argument("mask distance differs from m");
  return extract_muchlac_pair(patch, band_a, band_b, MaskSet::from_masks(masks));
}

inline std::vector<std::size_t> resolve_bands(const ExtractConfig& config, std::size_t channels) {
  std::vector<std::size_t> bands = config.bands;
  if (bands.empty()) {
    for (std::size_t c = 0; c < channels; ++c) bands.push_back(c);
  }
  for (auto b : bands)
    if (b >= channels) throw std::out_of_range("band index " + std::to_string(b) + " outside raster");
  return bands;
}

// All ordered pairs of positions in the band list, lexicographic.
inline std::vector<std::pair<std::size_t, std::size_t>> ordered_pairs(const std::vector<std::size_t>& bands) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (auto a : bands)
    for (auto b : bands)
      if (a != b) pairs.emplace_back(a, b);
  return pairs;
}

inline std::vector<std::string> component_names(const ExtractConfig& config, const std::vector<std::string>& band_names,
                                                const MaskBank& bank) {
  const auto bands = resolve_bands(config, band_names.size());
  const char* unit = config.invariance == Invariance::none ? "k" : "g";
  std::vector<std::string> names;
  char buf[32];
  for (std::size_t d = 0; d < bank.distances.size(); ++d) {
    const std::string m = "/m" + std::to_string(bank.distances[d]) + "/";
    for (auto b : bands) {
      for (std::size_t i = 0; i < bank.hlac[d].components(config.invariance); ++i) {
        std::snprintf(buf, sizeof buf, "%s%02zu", unit, i);
        names.push_back("hlac/" + band_names[b] + m + buf);
      }
    }
    if (!config.use_cross_channel) continue;
    for (auto [a, b] : ordered_pairs(bands)) {
      for (std::size_t i = 0; i < bank.muchlac[d].components(config.invariance); ++i) {
        std::snprintf(buf, sizeof buf, "%s%02zu", unit, i);
        names.push_back("muchlac/" + band_names[a] + "+" + band_names[b] + m + buf);
      }
    }
  }
  return names;
}

inline bool is_cross_channel(const std::string& component_name) { return component_name.rfind("muchlac/", 0) == 0; }

// Per distance: HLAC per band, then MUCHLAC per ordered band pair.
inline std::vector<double> extract_values(const MultibandRaster& patch, const ExtractConfig& config,
                                          const MaskBank& bank) {
  const auto bands = resolve_bands(config, patch.channels());
  if (config.use_cross_channel && bank.muchlac.size() != bank.distances.size())
    throw std::invalid_argument("mask bank was built without cross-channel masks");
  std::vector<double> values;
  for (std::size_t d = 0; d < bank.distances.size(); ++d) {
    for (auto b : bands) {
      const auto v = extract_hlac(patch.plane(b), bank.hlac[d], config.invariance);
      values.insert(values.end(), v.begin(), v.end());
    }
    if (!config.use_cross_channel) continue;
    for (auto [a, b] : ordered_pairs(bands)) {
      const auto v = extract_muchlac_pair(patch, a, b, bank.muchlac[d], config.invariance);
      values.insert(values.end(), v.begin(), v.end());
    }
  }
  return values;
}

inline FeatureVector extract_full(const MultibandRaster& patch, const ExtractConfig& config, const MaskBank& bank) {
  return FeatureVector{extract_values(patch, config, bank), component_names(config, patch.band_names, bank)};
}

inline FeatureVector extract_full(const MultibandRaster& patch, const ExtractConfig& config) {
  return extract_full(patch, config, MaskBank::build(config));
}

// One row per patch, computed by `extract` on the cut-out patch. Rows are
// independent, so they are filled in parallel by index.
inline FeatureMatrix extract_rows(const LabeledPatchSet& patches, const MultibandRaster& raster,
                                  std::vector<std::string> names, unsigned threads,
                                  const std::function<std::vector<double>(const MultibandRaster&)>& extract) {
  FeatureMatrix x;
  x.component_names = std::move(names);
  x.rows = patches.patches.size();
  x.values.assign(x.rows * x.cols(), 0.0);
  parallel_for(x.rows, threads, [&](std::size_t i) {
    const auto& p = patches.patches[i];
    std::vector<double> row;
    try {
      row = extract(extract_patch(raster, p.x, p.y, patches.patch_size));
    } catch (const std::exception& e) {
      throw DataError("patch at (" + std::to_string(p.x) + "," + std::to_string(p.y) + "): " + e.what());
    }
    if (row.size() != x.cols()) throw std::logic_error("extractor produced a row of unexpected length");
    std::copy(row.begin(), row.end(), x.values.begin() + static_cast<std::ptrdiff_t>(i * x.cols()));
  });
  for (const auto& p : patches.patches) x.labels.push_back(static_cast<int>(p.label));
  return x;
}

inline FeatureMatrix extract_dataset(const LabeledPatchSet& patches, const MultibandRaster& raster,
                                     const ExtractConfig& config) {
  const auto bank = MaskBank::build(config);
  auto names = component_names(config, raster.band_names, bank);
  auto x = extract_rows(patches, raster, std::move(names), config.threads,
                        [&](const MultibandRaster& patch) { return extract_values(patch, config, bank); });
  x.config = to_json(config);
  x.config["patch_size"] = patches.patch_size;
  return x;
}

}  // namespace muchlac
