#pragma once

// FeatureMatrix and its "FMX1" container: a JSON header line
//   {"magic":"FMX1","rows":R,"cols":C,"component_names":[...],"labels":[...],"config":{...}}
// terminated by '\n', then R*C little-endian IEEE-754 doubles, row-major.

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "muchlac/common.hpp"

namespace muchlac {

inline constexpr const char* kFeatureMagic = "FMX1";

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> component_names;
};

struct FeatureMatrix {
  std::vector<std::string> component_names;
  std::size_t rows = 0;
  std::vector<double> values;  // row-major
  std::vector<int> labels;     // empty, or one of {+1, -1} per row
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  std::size_t cols() const { return component_names.size(); }
  bool has_labels() const { return !labels.empty(); }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values).subspan(i * cols(), cols());
  }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }

  void append(std::span<const double> row_values) {
    if (row_values.size() != cols()) throw std::invalid_argument("row length differs from column count");
    values.insert(values.end(), row_values.begin(), row_values.end());
    ++rows;
  }
};

inline void validate(const FeatureMatrix& x) {
  if (x.values.size() != x.rows * x.cols()) throw std::invalid_argument("feature matrix is not rectangular");
  if (!x.labels.empty() && x.labels.size() != x.rows) throw std::invalid_argument("label count differs from rows");
  for (int l : x.labels)
    if (l != 1 && l != -1) throw std::invalid_argument("labels must be +1 or -1");
}

inline void require_finite(const FeatureMatrix& x) {
  for (double v : x.values)
    if (!std::isfinite(v)) throw std::invalid_argument("feature matrix contains non-finite values");
}

// New matrix holding the given columns in the given order.
inline FeatureMatrix select_columns(const FeatureMatrix& x, std::span<const std::size_t> columns) {
  FeatureMatrix out;
  for (auto c : columns) out.component_names.push_back(x.component_names.at(c));
  out.labels = x.labels;
  out.config = x.config;
  out.values.reserve(x.rows * columns.size());
  for (std::size_t i = 0; i < x.rows; ++i)
    for (auto c : columns) out.values.push_back(x.at(i, c));
  out.rows = x.rows;
  return out;
}

inline FeatureMatrix select_rows(const FeatureMatrix& x, std::span<const std::size_t> rows) {
  FeatureMatrix out;
  out.component_names = x.component_names;
  out.config = x.config;
  for (auto r : rows) {
    out.append(x.row(r));
    if (x.has_labels()) out.labels.push_back(x.labels.at(r));
  }
  return out;
}

inline void write_feature_matrix(std::ostream& out, const FeatureMatrix& x) {
  validate(x);
  nlohmann::ordered_json header;
  header["magic"] = kFeatureMagic;
  header["rows"] = x.rows;
  header["cols"] = x.cols();
  header["component_names"] = x.component_names;
  if (x.has_labels()) header["labels"] = x.labels;
  header["config"] = x.config;
  out << header.dump() << '\n';
  std::vector<unsigned char> buf(x.values.size() * 8);
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(x.values[i]);
    for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline FeatureMatrix read_feature_matrix(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("malformed feature matrix header: empty file");
  FeatureMatrix x;
  std::size_t cols = 0;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.value("magic", "") != kFeatureMagic) throw DataError("malformed feature matrix header: bad magic");
    x.rows = header.at("rows").get<std::size_t>();
    cols = header.at("cols").get<std::size_t>();
    x.component_names = header.at("component_names").get<std::vector<std::string>>();
    if (header.contains("labels")) x.labels = header["labels"].get<std::vector<int>>();
    if (header.contains("config")) x.config = header["config"];
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed feature matrix header: ") + e.what());
  }
  if (cols != x.component_names.size()) throw DataError("cols differs from component_names length");
  std::vector<unsigned char> buf(x.rows * cols * 8);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size()) throw DataError("truncated feature payload");
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("feature payload larger than header declares");
  x.values.resize(x.rows * cols);
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[i * 8 + b]) << (8 * b);
    x.values[i] = std::bit_cast<double>(bits);
  }
  try {
    validate(x);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return x;
}

inline void save_feature_matrix(const std::filesystem::path& path, const FeatureMatrix& x) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write feature matrix: " + path.string());
  write_feature_matrix(out, x);
}

inline FeatureMatrix load_feature_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open feature matrix: " + path.string());
  return read_feature_matrix(in);
}

}  // namespace muchlac
