#pragma once

// Multiband raster container ("MBR1"), label masks, and the patch grid.
//
// On disk: one UTF-8 JSON header line terminated by '\n'
//   {"magic":"MBR1","width":W,"height":H,"channels":M,"dtype":"u16le",
//    "full_scale":S,"band_names":[...]}   (optional "nodata": raw sentinel)
// followed by M*H*W little-endian uint16 values, band-sequential, row-major.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "muchlac/common.hpp"

namespace muchlac {

inline constexpr const char* kRasterMagic = "MBR1";

// Read-only view of one channel.
struct Plane {
  std::span<const double> data;
  std::size_t width = 0;
  std::size_t height = 0;

  double operator()(std::size_t x, std::size_t y) const { return data[y * width + x]; }
};

struct MultibandRaster {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::string> band_names;
  std::vector<std::vector<double>> bands;  // bands[c][y * width + x], scaled to [0, 1]
  std::vector<std::uint8_t> nodata_mask;   // empty when the source declares no nodata
  double full_scale = 65535.0;

  std::size_t channels() const { return bands.size(); }
  std::size_t pixel_count() const { return width * height; }

  Plane plane(std::size_t c) const { return Plane{bands.at(c), width, height}; }
  double at(std::size_t c, std::size_t x, std::size_t y) const { return bands[c][y * width + x]; }
  double& at(std::size_t c, std::size_t x, std::size_t y) { return bands[c][y * width + x]; }

  // Zero-filled raster with default band names "band1".."bandM".
  static MultibandRaster zeros(std::size_t width, std::size_t height, std::size_t channels) {
    MultibandRaster r;
    r.width = width;
    r.height = height;
    for (std::size_t c = 0; c < channels; ++c) {
      r.band_names.push_back("band" + std::to_string(c + 1));
      r.bands.emplace_back(width * height, 0.0);
    }
    return r;
  }
};

// Throws std::invalid_argument when an invariant does not hold.
inline void validate(const MultibandRaster& r) {
  if (r.channels() == 0) throw std::invalid_argument("raster has no channels");
  if (r.band_names.size() != r.channels()) throw std::invalid_argument("band_names length differs from channel count");
  std::set<std::string> unique(r.band_names.begin(), r.band_names.end());
  if (unique.size() != r.band_names.size()) throw std::invalid_argument("band_names are not unique");
  for (const auto& band : r.bands) {
    if (band.size() != r.pixel_count()) throw std::invalid_argument("channel size mismatch");
    for (double v : band) {
      if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("intensities must be finite and non-negative");
    }
  }
  if (!r.nodata_mask.empty() && r.nodata_mask.size() != r.pixel_count())
    throw std::invalid_argument("nodata mask size mismatch");
}

namespace detail {

inline nlohmann::json read_header_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("malformed header: empty file");
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed header: ") + e.what());
  }
}

template <typename T>
T header_field(const nlohmann::json& h, const char* key) {
  if (!h.contains(key)) throw DataError(std::string("malformed header: missing '") + key + "'");
  try {
    return h.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw DataError(std::string("malformed header: bad '") + key + "'");
  }
}

}  // namespace detail

inline MultibandRaster read_raster(std::istream& in) {
  const auto header = detail::read_header_line(in);
  if (!header.is_object() || header.value("magic", "") != kRasterMagic) throw DataError("malformed header: bad magic");
  if (header.value("dtype", "") != "u16le") throw DataError("malformed header: unsupported dtype");
  const auto width = detail::header_field<std::size_t>(header, "width");
  const auto height = detail::header_field<std::size_t>(header, "height");
  const auto channels = detail::header_field<std::size_t>(header, "channels");
  const auto full_scale = detail::header_field<double>(header, "full_scale");
  auto names = detail::header_field<std::vector<std::string>>(header, "band_names");
  if (width == 0 || height == 0 || channels == 0) throw DataError("malformed header: empty dimensions");
  if (!(full_scale > 0.0) || !std::isfinite(full_scale)) throw DataError("full-scale value must be positive");
  if (names.size() != channels) throw DataError("channel size mismatch: band_names vs channels");
  std::optional<std::uint16_t> nodata;
  if (header.contains("nodata") && !header["nodata"].is_null()) nodata = detail::header_field<std::uint16_t>(header, "nodata");

  MultibandRaster r;
  r.width = width;
  r.height = height;
  r.full_scale = full_scale;
  r.band_names = std::move(names);
  const std::size_t n = width * height;
  if (nodata) r.nodata_mask.assign(n, 0);
  std::vector<unsigned char> buf(n * 2);
  for (std::size_t c = 0; c < channels; ++c) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw DataError("truncated payload");
    std::vector<double> band(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto raw = static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
      if (nodata && raw == *nodata) {
        band[i] = 0.0;
        r.nodata_mask[i] = 1;
      } else {
        band[i] = raw / full_scale;
      }
    }
    r.bands.push_back(std::move(band));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("payload larger than header declares");
  try {
    validate(r);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return r;
}

inline MultibandRaster load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open raster: " + path.string());
  return read_raster(in);
}

// Raw value for a scaled intensity; exact inverse of the load-time scaling.
inline std::uint16_t raw_value(double v, double full_scale) {
  const double raw = std::round(v * full_scale);
  if (raw < 0.0 || raw > 65535.0) throw std::invalid_argument("intensity does not fit the u16 container");
  return static_cast<std::uint16_t>(raw);
}

inline void write_raster(std::ostream& out, const MultibandRaster& r) {
  validate(r);
  nlohmann::ordered_json header;
  header["magic"] = kRasterMagic;
  header["width"] = r.width;
  header["height"] = r.height;
  header["channels"] = r.channels();
  header["dtype"] = "u16le";
  header["full_scale"] = r.full_scale;
  header["band_names"] = r.band_names;
  out << header.dump() << '\n';
  std::vector<unsigned char> buf(r.pixel_count() * 2);
  for (const auto& band : r.bands) {
    for (std::size_t i = 0; i < band.size(); ++i) {
      const auto raw = raw_value(band[i], r.full_scale);
      buf[2 * i] = static_cast<unsigned char>(raw & 0xff);
      buf[2 * i + 1] = static_cast<unsigned char>(raw >> 8);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
}

inline void save_raster(const std::filesystem::path& path, const MultibandRaster& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write raster: " + path.string());
  write_raster(out, r);
}

// Label masks are single-channel containers with values in {0, 1}.
inline MultibandRaster load_label_mask(const std::filesystem::path& path) {
  auto mask = load_raster(path);
  if (mask.channels() != 1) throw DataError("label mask must have exactly one channel");
  for (double v : mask.bands[0]) {
    const double raw = v * mask.full_scale;
    if (raw != 0.0 && raw != 1.0) throw DataError("label mask values must be 0 or 1");
  }
  return mask;
}

enum class PatchLabel { negative = -1, positive = 1 };

struct Patch {
  std::size_t x = 0;
  std::size_t y = 0;
  PatchLabel label = PatchLabel::negative;
  std::string source;
};

struct LabeledPatchSet {
  std::size_t patch_size = 0;
  std::vector<Patch> patches;

  std::size_t positives() const {
    return static_cast<std::size_t>(std::count_if(patches.begin(), patches.end(),
                                                  [](const Patch& p) { return p.label == PatchLabel::positive; }));
  }
};

// Non-overlapping grid of patch_size squares, row-major; partial cells at the
// right and bottom edges are dropped. A cell is positive iff any mask pixel
// inside it is nonzero.
inline LabeledPatchSet build_patch_grid(const MultibandRaster& raster, const MultibandRaster& label_mask,
                                        std::size_t patch_size, const std::string& source = "") {
  if (label_mask.channels() != 1) throw std::invalid_argument("label mask must have one channel");
  if (label_mask.width != raster.width || label_mask.height != raster.height)
    throw std::invalid_argument("label mask dimensions differ from raster");
  if (patch_size == 0) throw std::invalid_argument("patch_size must be at least 1");
  if (patch_size > raster.width || patch_size > raster.height)
    throw std::invalid_argument("patch_size larger than raster dimension");

  LabeledPatchSet set;
  set.patch_size = patch_size;
  const auto& mask = label_mask.bands[0];
  for (std::size_t gy = 0; gy + patch_size <= raster.height; gy += patch_size) {
    for (std::size_t gx = 0; gx + patch_size <= raster.width; gx += patch_size) {
      bool hit = false;
      for (std::size_t y = gy; y < gy + patch_size && !hit; ++y) {
        for (std::size_t x = gx; x < gx + patch_size; ++x) {
          if (mask[y * raster.width + x] != 0.0) {
            hit = true;
            break;
          }
        }
      }
      set.patches.push_back({gx, gy, hit ? PatchLabel::positive : PatchLabel::negative, source});
    }
  }
  return set;
}

inline MultibandRaster extract_patch(const MultibandRaster& raster, std::size_t x0, std::size_t y0, std::size_t size) {
  if (size == 0 || x0 + size > raster.width || y0 + size > raster.height)
    throw std::out_of_range("patch (" + std::to_string(x0) + "," + std::to_string(y0) + ") size " +
                            std::to_string(size) + " outside raster");
  MultibandRaster out;
  out.width = size;
  out.height = size;
  out.band_names = raster.band_names;
  out.full_scale = raster.full_scale;
  for (const auto& band : raster.bands) {
    std::vector<double> sub(size * size);
    for (std::size_t y = 0; y < size; ++y) {
      std::copy_n(band.begin() + static_cast<std::ptrdiff_t>((y0 + y) * raster.width + x0), size,
                  sub.begin() + static_cast<std::ptrdiff_t>(y * size));
    }
    out.bands.push_back(std::move(sub));
  }
  if (!raster.nodata_mask.empty()) {
    out.nodata_mask.resize(size * size);
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x)
        out.nodata_mask[y * size + x] = raster.nodata_mask[(y0 + y) * raster.width + x0 + x];
  }
  return out;
}

// patches.json
inline nlohmann::ordered_json patch_set_to_json(const LabeledPatchSet& set) {
  nlohmann::ordered_json j;
  j["magic"] = "PATCH1";
  j["patch_size"] = set.patch_size;
  j["count"] = set.patches.size();
  j["positives"] = set.positives();
  auto& arr = j["patches"] = nlohmann::ordered_json::array();
  for (const auto& p : set.patches) {
    nlohmann::ordered_json e;
    e["x"] = p.x;
    e["y"] = p.y;
    e["label"] = p.label == PatchLabel::positive ? "positive" : "negative";
    e["source"] = p.source;
    arr.push_back(std::move(e));
  }
  return j;
}

inline LabeledPatchSet patch_set_from_json(const nlohmann::json& j) {
  try {
    if (j.value("magic", "") != "PATCH1") throw DataError("not a patch set (magic)");
    LabeledPatchSet set;
    set.patch_size = j.at("patch_size").get<std::size_t>();
    for (const auto& e : j.at("patches")) {
      Patch p;
      p.x = e.at("x").get<std::size_t>();
      p.y = e.at("y").get<std::size_t>();
      const auto label = e.at("label").get<std::string>();
      if (label != "positive" && label != "negative") throw DataError("bad patch label: " + label);
      p.label = label == "positive" ? PatchLabel::positive : PatchLabel::negative;
      p.source = e.value("source", "");
      set.patches.push_back(std::move(p));
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed patch set: ") + e.what());
  }
}

}  // namespace muchlac
