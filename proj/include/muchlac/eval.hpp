#pragma once

// Confusion counts, precision / recall / F-measure, stratified k-fold
// cross-validation of the Real AdaBoost detector, and the training-size
// sensitivity protocol.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "muchlac/adaboost.hpp"
#include "muchlac/common.hpp"
#include "muchlac/feature_matrix.hpp"

namespace muchlac {

struct ConfusionCounts {
  double tp = 0.0;
  double fp = 0.0;
  double tn = 0.0;
  double fn = 0.0;

  double total() const { return tp + fp + tn + fn; }
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_measure = 0.0;
};

// Degenerate denominators give 0.
inline Metrics metrics(const ConfusionCounts& c, double beta = 1.0) {
  if (c.tp < 0 || c.fp < 0 || c.tn < 0 || c.fn < 0) throw std::invalid_argument("confusion counts must be non-negative");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be non-negative");
  Metrics m;
  m.precision = c.tp + c.fp > 0 ? c.tp / (c.tp + c.fp) : 0.0;
  m.recall = c.tp + c.fn > 0 ? c.tp / (c.tp + c.fn) : 0.0;
  const double b2 = beta * beta;
  const double denom = b2 * m.precision + m.recall;
  m.f_measure = denom > 0 ? (b2 + 1.0) * m.precision * m.recall / denom : 0.0;
  return m;
}

inline ConfusionCounts confusion(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("label vectors differ in length");
  ConfusionCounts c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] > 0) (predicted[i] > 0 ? c.tp : c.fn) += 1.0;
    else (predicted[i] > 0 ? c.fp : c.tn) += 1.0;
  }
  return c;
}

// Stratified folds: each class is shuffled and dealt round-robin, negatives
// continuing where positives stopped so fold sizes stay balanced. Each fold
// holds its indices in ascending order.
inline std::vector<std::vector<std::size_t>> kfold_split(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] > 0 ? pos : neg).push_back(i);
  if (pos.size() < k || neg.size() < k) throw std::invalid_argument("each class needs at least k members");
  Rng rng(mix_seed(seed, 0xf01d));
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t i = 0; i < pos.size(); ++i) folds[i % k].push_back(pos[i]);
  for (std::size_t i = 0; i < neg.size(); ++i) folds[(pos.size() + i) % k].push_back(neg[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

// Keeps round(fraction * count) members of each class.
inline std::vector<std::size_t> stratified_subsample(std::span<const std::size_t> indices, std::span<const int> labels,
                                                     double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1]");
  std::vector<std::size_t> pos, neg;
  for (auto i : indices) (labels[i] > 0 ? pos : neg).push_back(i);
  if (fraction == 1.0) {
    std::vector<std::size_t> all(indices.begin(), indices.end());
    return all;
  }
  Rng rng(mix_seed(seed, 0x5ab));
  rng.shuffle(pos);
  rng.shuffle(neg);
  const auto keep_pos = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pos.size())));
  const auto keep_neg = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(neg.size())));
  if (keep_pos == 0 || keep_neg == 0) throw std::invalid_argument("subsample eliminates a class");
  std::vector<std::size_t> out(pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(keep_pos));
  out.insert(out.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(keep_neg));
  std::sort(out.begin(), out.end());
  return out;
}

struct FoldResult {
  std::size_t train_size = 0;
  std::size_t train_positives = 0;
  ConfusionCounts counts;
  Metrics metrics;
};

struct DetectionReport {
  std::size_t folds = 0;
  double train_fraction = 1.0;
  std::uint64_t seed = 0;
  std::vector<FoldResult> per_fold;
  ConfusionCounts mean_counts;
  Metrics mean_metrics;   // mean of per-fold metrics
  Metrics pooled_metrics; // metrics of the mean counts
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

struct CrossValidationParams {
  std::size_t folds = 5;
  double train_fraction = 1.0;
  std::uint64_t seed = 7;
  AdaBoostParams boost;
  double beta = 1.0;
  unsigned threads = 1;
  // Called with each fold's model and training data; must be thread-safe
  // when threads > 1.
  std::function<void(const StumpEnsembleModel&, const FeatureMatrix&, std::span<const int>)> on_model;
};

inline DetectionReport cross_validate(const FeatureMatrix& x, std::span<const int> y, const CrossValidationParams& p) {
  validate(x);
  if (y.size() != x.rows) throw std::invalid_argument("label count differs from rows");
  if (!(p.train_fraction > 0.0 && p.train_fraction <= 1.0)) throw std::invalid_argument("train_fraction must be in (0, 1]");
  const auto folds = kfold_split(y, p.folds, p.seed);

  DetectionReport report;
  report.folds = p.folds;
  report.train_fraction = p.train_fraction;
  report.seed = p.seed;
  report.per_fold.resize(p.folds);
  parallel_for(p.folds, p.threads, [&](std::size_t f) {
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < p.folds; ++g)
      if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
    std::sort(train.begin(), train.end());
    train = stratified_subsample(train, y, p.train_fraction, mix_seed(p.seed, f));

    const auto x_train = select_rows(x, train);
    std::vector<int> y_train;
    for (auto i : train) y_train.push_back(y[i]);
    const auto model = train_real_adaboost(x_train, y_train, p.boost);
    if (p.on_model) p.on_model(model, x_train, y_train);

    std::vector<int> truth, predicted;
    for (auto i : folds[f]) {
      truth.push_back(y[i]);
      predicted.push_back(predict_label(model, x.row(i)));
    }
    auto& r = report.per_fold[f];
    r.train_size = train.size();
    r.train_positives = static_cast<std::size_t>(std::count(y_train.begin(), y_train.end(), 1));
    r.counts = confusion(truth, predicted);
    r.metrics = metrics(r.counts, p.beta);
  });

  const double k = static_cast<double>(p.folds);
  for (const auto& r : report.per_fold) {
    report.mean_counts.tp += r.counts.tp / k;
    report.mean_counts.fp += r.counts.fp / k;
    report.mean_counts.tn += r.counts.tn / k;
    report.mean_counts.fn += r.counts.fn / k;
    report.mean_metrics.precision += r.metrics.precision / k;
    report.mean_metrics.recall += r.metrics.recall / k;
    report.mean_metrics.f_measure += r.metrics.f_measure / k;
  }
  report.pooled_metrics = metrics(report.mean_counts, p.beta);
  report.config["folds"] = p.folds;
  report.config["train_fraction"] = p.train_fraction;
  report.config["seed"] = p.seed;
  report.config["rounds"] = p.boost.rounds;
  report.config["bins"] = p.boost.bins;
  if (p.boost.epsilon) report.config["epsilon"] = *p.boost.epsilon;
  report.config["beta"] = p.beta;
  return report;
}

inline DetectionReport cross_validate(const FeatureMatrix& x, const CrossValidationParams& p) {
  if (!x.has_labels()) throw std::invalid_argument("feature matrix carries no labels");
  return cross_validate(x, x.labels, p);
}

// Training-set ratios of the sensitivity protocol, ascending.
inline constexpr std::array<double, 9> kSensitivityFractions{0.02, 0.04, 0.06, 0.08, 0.10, 0.20, 0.40, 0.60, 0.80};

inline std::vector<DetectionReport> sensitivity_protocol(const FeatureMatrix& x, std::span<const int> y,
                                                         CrossValidationParams p) {
  std::vector<DetectionReport> out;
  for (double fraction : kSensitivityFractions) {
    p.train_fraction = fraction;
    out.push_back(cross_validate(x, y, p));
  }
  return out;
}

inline nlohmann::ordered_json to_json(const ConfusionCounts& c, const Metrics& m) {
  nlohmann::ordered_json j;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["tn"] = c.tn;
  j["fn"] = c.fn;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  j["f_measure"] = m.f_measure;
  return j;
}

inline nlohmann::ordered_json report_to_json(const DetectionReport& r) {
  nlohmann::ordered_json j;
  j["magic"] = "REPORT1";
  j["config"] = r.config;
  auto& folds = j["per_fold"] = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < r.per_fold.size(); ++f) {
    auto e = to_json(r.per_fold[f].counts, r.per_fold[f].metrics);
    e["fold"] = f;
    e["train_size"] = r.per_fold[f].train_size;
    e["train_positives"] = r.per_fold[f].train_positives;
    folds.push_back(std::move(e));
  }
  j["mean"] = to_json(r.mean_counts, r.mean_metrics);
  j["mean"]["pooled_precision"] = r.pooled_metrics.precision;
  j["mean"]["pooled_recall"] = r.pooled_metrics.recall;
  j["mean"]["pooled_f_measure"] = r.pooled_metrics.f_measure;
  return j;
}

}  // namespace muchlac
