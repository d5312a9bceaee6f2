#pragma once

// Real AdaBoost with domain-partitioning stumps. Each candidate feature is cut
// into up to B equal-frequency bins (cut points from training quantiles); a
// stump outputs 1/2 ln((W+ + e)/(W- + e)) per bin, where W+/W- are the sample
// weights of each class falling in the bin. Each round keeps the stump with
// the smallest normalizer Z = sum_i D(i) exp(-y_i h(x_i)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "muchlac/common.hpp"
#include "muchlac/feature_matrix.hpp"

namespace muchlac {

struct Stump {
  std::size_t feature = 0;
  std::string name;
  std::vector<double> edges;    // strictly increasing interior cut points
  std::vector<double> outputs;  // edges.size() + 1 values
  double z = 1.0;               // normalizer of the round that chose this stump

  std::size_t bin(double v) const {
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
  }
  double operator()(std::span<const double> x) const { return outputs[bin(x[feature])]; }
};

struct AdaBoostParams {
  std::size_t rounds = 500;
  std::size_t bins = 16;
  std::optional<double> epsilon;  // default 1 / (2 n)
  std::uint64_t seed = 0;         // recorded only; training is deterministic
};

struct StumpEnsembleModel {
  std::size_t rounds = 0;
  std::size_t bins = 0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::size_t dimension = 0;
  std::vector<Stump> stumps;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  double score(std::span<const double> x, std::size_t prefix) const {
    if (x.size() != dimension) throw std::invalid_argument("feature vector dimension differs from model");
    double s = 0.0;
    for (std::size_t t = 0; t < std::min(prefix, stumps.size()); ++t) s += stumps[t](x);
    return s;
  }
};

inline double predict_score(const StumpEnsembleModel& model, std::span<const double> x) {
  return model.score(x, model.stumps.size());
}

// Sign of the score; zero counts as negative.
inline int predict_label(const StumpEnsembleModel& model, std::span<const double> x) {
  return predict_score(model, x) > 0.0 ? 1 : -1;
}

// Interior cut points for up to `bins` equal-frequency bins. A cut between
// two distinct neighbours sits at their midpoint.
inline std::vector<double> quantile_edges(std::vector<double> values, std::size_t bins) {
  std::sort(values.begin(), values.end());
  std::vector<double> edges;
  const std::size_t n = values.size();
  for (std::size_t b = 1; b < bins; ++b) {
    const std::size_t k = b * n / bins;
    if (k == 0) continue;
    const double cut = values[k - 1] < values[k] ? values[k - 1] + (values[k] - values[k - 1]) / 2.0 : values[k];
    if (cut <= values.front()) continue;
    if (edges.empty() || cut > edges.back()) edges.push_back(cut);
  }
  return edges;
}

inline StumpEnsembleModel train_real_adaboost(const FeatureMatrix& x, std::span<const int> y,
                                              const AdaBoostParams& params = {}) {
  validate(x);
  require_finite(x);
  const std::size_t n = x.rows, d = x.cols();
  if (y.size() != n) throw std::invalid_argument("label count differs from rows");
  if (params.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
  if (params.bins < 1 || params.bins > 255) throw std::invalid_argument("bins must be in 1..255");
  if (d == 0) throw std::invalid_argument("feature matrix has no columns");
  std::size_t n_pos = 0;
  for (int l : y) {
    if (l != 1 && l != -1) throw std::invalid_argument("labels must be +1 or -1");
    n_pos += l == 1;
  }
  if (n_pos == 0 || n_pos == n) throw std::invalid_argument("training data must contain both classes");

  StumpEnsembleModel model;
  model.rounds = params.rounds;
  model.bins = params.bins;
  model.epsilon = params.epsilon.value_or(1.0 / (2.0 * static_cast<double>(n)));
  model.seed = params.seed;
  model.dimension = d;
  const double eps = model.epsilon;

  // Bin index per (feature, sample), column-major.
  std::vector<std::vector<double>> edges(d);
  std::vector<std::uint8_t> bin_of(n * d);
  std::vector<double> column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = x.at(i, j);
    edges[j] = quantile_edges(column, params.bins);
    for (std::size_t i = 0; i < n; ++i) {
      bin_of[j * n + i] = static_cast<std::uint8_t>(
          std::upper_bound(edges[j].begin(), edges[j].end(), column[i]) - edges[j].begin());
    }
  }

  std::vector<double> weight(n, 1.0 / static_cast<double>(n));
  std::vector<double> w_pos(params.bins), w_neg(params.bins);
  for (std::size_t t = 0; t < params.rounds; ++t) {
    std::size_t best = 0;
    double best_z = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t nb = edges[j].size() + 1;
      std::fill_n(w_pos.begin(), nb, 0.0);
      std::fill_n(w_neg.begin(), nb, 0.0);
      const std::uint8_t* bj = &bin_of[j * n];
      for (std::size_t i = 0; i < n; ++i) (y[i] > 0 ? w_pos : w_neg)[bj[i]] += weight[i];
      double z = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        const double ratio = std::sqrt((w_neg[b] + eps) / (w_pos[b] + eps));
        z += w_pos[b] * ratio + w_neg[b] / ratio;
      }
      if (z < best_z) {
        best_z = z;
        best = j;
      }
    }

    Stump s;
    s.feature = best;
    s.name = x.component_names[best];
    s.edges = edges[best];
    const std::size_t nb = s.edges.size() + 1;
    std::fill_n(w_pos.begin(), nb, 0.0);
    std::fill_n(w_neg.begin(), nb, 0.0);
    const std::uint8_t* bj = &bin_of[best * n];
    for (std::size_t i = 0; i < n; ++i) (y[i] > 0 ? w_pos : w_neg)[bj[i]] += weight[i];
    for (std::size_t b = 0; b < nb; ++b) s.outputs.push_back(0.5 * std::log((w_pos[b] + eps) / (w_neg[b] + eps)));

    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      weight[i] *= std::exp(-static_cast<double>(y[i]) * s.outputs[bj[i]]);
      z += weight[i];
    }
    for (auto& w : weight) w /= z;
    s.z = z;
    model.stumps.push_back(std::move(s));
  }
  return model;
}

inline StumpEnsembleModel train_real_adaboost(const FeatureMatrix& x, const AdaBoostParams& params = {}) {
  if (!x.has_labels()) throw std::invalid_argument("feature matrix carries no labels");
  return train_real_adaboost(x, x.labels, params);
}

// Training error of every round prefix next to the product of normalizers,
// which bounds it from above.
struct BoostingBoundStep {
  std::size_t rounds = 0;
  double training_error = 0.0;
  double z_product = 1.0;
};

inline std::vector<BoostingBoundStep> boosting_bound_trace(const StumpEnsembleModel& model, const FeatureMatrix& x,
                                                           std::span<const int> y) {
  std::vector<double> scores(x.rows, 0.0);
  std::vector<BoostingBoundStep> trace;
  double z_product = 1.0;
  for (std::size_t t = 0; t < model.stumps.size(); ++t) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      scores[i] += model.stumps[t](x.row(i));
      wrong += (scores[i] > 0.0 ? 1 : -1) != y[i];
    }
    z_product *= model.stumps[t].z;
    trace.push_back({t + 1, static_cast<double>(wrong) / static_cast<double>(x.rows), z_product});
  }
  return trace;
}

inline nlohmann::ordered_json model_to_json(const StumpEnsembleModel& model) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["T"] = model.rounds;
  j["B"] = model.bins;
  j["epsilon"] = model.epsilon;
  j["seed"] = model.seed;
  j["dimension"] = model.dimension;
  j["config"] = model.config;
  auto& arr = j["stumps"] = nlohmann::ordered_json::array();
  for (const auto& s : model.stumps) {
    nlohmann::ordered_json e;
    e["feature"] = s.feature;
    e["name"] = s.name;
    e["edges"] = s.edges;
    e["outputs"] = s.outputs;
    e["z"] = s.z;
    arr.push_back(std::move(e));
  }
  return j;
}

inline StumpEnsembleModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw DataError("unsupported model version");
    StumpEnsembleModel m;
    m.rounds = j.at("T").get<std::size_t>();
    m.bins = j.at("B").get<std::size_t>();
    m.epsilon = j.at("epsilon").get<double>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.dimension = j.at("dimension").get<std::size_t>();
    if (j.contains("config")) m.config = j["config"];
    for (const auto& e : j.at("stumps")) {
      Stump s;
      s.feature = e.at("feature").get<std::size_t>();
      s.name = e.value("name", "");
      s.edges = e.at("edges").get<std::vector<double>>();
      s.outputs = e.at("outputs").get<std::vector<double>>();
      s.z = e.value("z", 1.0);
      if (s.outputs.size() != s.edges.size() + 1 || s.feature >= m.dimension ||
          !std::is_sorted(s.edges.begin(), s.edges.end()))
        throw DataError("malformed stump");
      m.stumps.push_back(std::move(s));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  }
}

}  // namespace muchlac
