#pragma once

// Gray-level co-occurrence matrices and five Haralick statistics.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "muchlac/feature_matrix.hpp"
#include "muchlac/features.hpp"
#include "muchlac/raster.hpp"

namespace muchlac {

struct GlcmConfig {
  std::size_t levels = 32;
  std::vector<int> angles{0, 45, 90, 135};  // degrees
  int distance = 1;
  bool symmetric = true;
  std::vector<std::size_t> bands;  // empty = all channels
  unsigned threads = 1;
};

inline nlohmann::ordered_json to_json(const GlcmConfig& c) {
  nlohmann::ordered_json j;
  j["feature"] = "glcm";
  j["bands"] = c.bands;
  j["levels"] = c.levels;
  j["angles"] = c.angles;
  j["glcm_distance"] = c.distance;
  j["symmetric"] = c.symmetric;
  j["log_base"] = 2;
  return j;
}

struct Glcm {
  std::size_t levels = 0;
  std::vector<double> p;  // levels x levels, row = reference level

  double operator()(std::size_t i, std::size_t j) const { return p[i * levels + j]; }
};

// Equal-width bins over [0, 1]; 1.0 falls in the top bin.
inline std::size_t quantize(double v, std::size_t levels) {
  const auto q = static_cast<std::size_t>(std::floor(v * static_cast<double>(levels)));
  return std::min(q, levels - 1);
}

// Pixel step (dx, dy) for an angle; image rows grow downward, so 45 degrees
// points up and to the right.
inline std::pair<int, int> glcm_offset(int angle, int distance) {
  switch (angle) {
    case 0: return {distance, 0};
    case 45: return {distance, -distance};
    case 90: return {0, -distance};
    case 135: return {-distance, -distance};
    default: throw std::invalid_argument("GLCM angle must be 0, 45, 90 or 135");
  }
}

inline Glcm compute_glcm(const Plane& channel, int angle, int distance, std::size_t levels, bool symmetric) {
  if (levels < 2) throw std::invalid_argument("GLCM needs at least 2 levels");
  if (distance < 1) throw std::invalid_argument("GLCM distance must be >= 1");
  const auto [dx, dy] = glcm_offset(angle, distance);
  Glcm g{levels, std::vector<double>(levels * levels, 0.0)};
  const auto w = static_cast<long>(channel.width), h = static_cast<long>(channel.height);
  double pairs = 0.0;
  for (long y = 0; y < h; ++y) {
    const long y2 = y + dy;
    if (y2 < 0 || y2 >= h) continue;
    for (long x = 0; x < w; ++x) {
      const long x2 = x + dx;
      if (x2 < 0 || x2 >= w) continue;
      const auto i = quantize(channel(static_cast<std::size_t>(x), static_cast<std::size_t>(y)), levels);
      const auto j = quantize(channel(static_cast<std::size_t>(x2), static_cast<std::size_t>(y2)), levels);
      g.p[i * levels + j] += 1.0;
      if (symmetric) g.p[j * levels + i] += 1.0;
      pairs += symmetric ? 2.0 : 1.0;
    }
  }
  if (pairs == 0.0) throw std::invalid_argument("degenerate patch: no pixel pairs at this offset");
  for (auto& v : g.p) v /= pairs;
  return g;
}

struct Haralick {
  double asm_ = 0.0;  // angular second moment
  double contrast = 0.0;
  double idm = 0.0;  // inverse difference moment
  double entropy = 0.0;
  double correlation = 0.0;

  std::array<double, 5> values() const { return {asm_, contrast, idm, entropy, correlation}; }
};

inline constexpr std::array<const char*, 5> kHaralickNames{"asm", "contrast", "idm", "entropy", "correlation"};

inline Haralick haralick5(const Glcm& g) {
  const std::size_t n = g.levels;
  if (g.p.size() != n * n) throw std::invalid_argument("GLCM shape mismatch");
  double total = 0.0;
  for (double v : g.p) {
    if (v < 0.0) throw std::invalid_argument("GLCM has negative entries");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("GLCM is not normalized");

  double mu_i = 0.0, mu_j = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      mu_i += static_cast<double>(i) * g(i, j);
      mu_j += static_cast<double>(j) * g(i, j);
    }
  double var_i = 0.0, var_j = 0.0, cov = 0.0;
  Haralick h;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double p = g(i, j);
      const double di = static_cast<double>(i) - mu_i;
      const double dj = static_cast<double>(j) - mu_j;
      const double d = static_cast<double>(i) - static_cast<double>(j);
      h.asm_ += p * p;
      h.contrast += d * d * p;
      h.idm += p / (1.0 + d * d);
      if (p > 0.0) h.entropy -= p * std::log2(p);
      var_i += di * di * p;
      var_j += dj * dj * p;
      cov += di * dj * p;
    }
  }
  const double sigma = std::sqrt(var_i) * std::sqrt(var_j);
  h.correlation = sigma > 0.0 ? cov / sigma : 0.0;
  return h;
}

inline std::vector<std::string> glcm_component_names(const GlcmConfig& config, const std::vector<std::string>& band_names) {
  std::vector<std::string> names;
  for (auto b : resolve_bands(ExtractConfig{config.bands}, band_names.size()))
    for (int angle : config.angles)
      for (const char* q : kHaralickNames)
        names.push_back("glcm/" + band_names[b] + "/a" + std::to_string(angle) + "/" + q);
  return names;
}

// bands x angles x 5 quantities, in that nesting order.
inline FeatureVector extract_glcm_features(const MultibandRaster& patch, const GlcmConfig& config) {
  FeatureVector fv;
  for (auto b : resolve_bands(ExtractConfig{config.bands}, patch.channels())) {
    for (int angle : config.angles) {
      const auto h = haralick5(compute_glcm(patch.plane(b), angle, config.distance, config.levels, config.symmetric));
      for (double v : h.values()) fv.values.push_back(v);
    }
  }
  fv.component_names = glcm_component_names(config, patch.band_names);
  return fv;
}

inline FeatureMatrix extract_glcm_dataset(const LabeledPatchSet& patches, const MultibandRaster& raster,
                                          const GlcmConfig& config) {
  auto x = extract_rows(patches, raster, glcm_component_names(config, raster.band_names), config.threads,
                        [&](const MultibandRaster& patch) { return extract_glcm_features(patch, config).values; });
  x.config = to_json(config);
  x.config["patch_size"] = patches.patch_size;
  return x;
}

}  // namespace muchlac
