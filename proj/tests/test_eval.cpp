#include <gtest/gtest.h>

#include <cmath>

#include "muchlac/eval.hpp"

using namespace muchlac;

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

FeatureMatrix separable(std::size_t n) {
  FeatureMatrix x;
  x.component_names = {"signal", "noise"};
  Rng rng(1);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2 == 0 ? 1 : -1;
    x.append(std::vector<double>{label > 0 ? 1.0 + rng.uniform() : rng.uniform() - 1.0, rng.uniform()});
    x.labels.push_back(label);
  }
  return x;
}

}  // namespace

TEST(Metrics, PublishedRows) {
  struct Row {
    double tp, fp, fn, p, r, f;
  };
  for (const auto& row : {Row{516.8, 62.2, 172.2, 0.89, 0.75, 0.82}, Row{479.2, 90.4, 209.8, 0.84, 0.70, 0.76},
                          Row{478.2, 90.6, 210.8, 0.84, 0.69, 0.76}}) {
    const auto m = metrics(ConfusionCounts{row.tp, row.fp, 0.0, row.fn});
    EXPECT_DOUBLE_EQ(round2(m.precision), row.p);
    EXPECT_DOUBLE_EQ(round2(m.recall), row.r);
    EXPECT_DOUBLE_EQ(round2(m.f_measure), row.f);
  }
}

TEST(Metrics, Conventions) {
  const auto zero = metrics(ConfusionCounts{});
  EXPECT_EQ(zero.precision, 0.0);
  EXPECT_EQ(zero.recall, 0.0);
  EXPECT_EQ(zero.f_measure, 0.0);
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const ConfusionCounts c{1.0 + rng.below(100), static_cast<double>(rng.below(100)), 0.0,
                            static_cast<double>(rng.below(100))};
    const auto m = metrics(c);
    EXPECT_GE(m.f_measure, std::min(m.precision, m.recall) - 1e-15);
    EXPECT_LE(m.f_measure, std::max(m.precision, m.recall) + 1e-15);
  }
  const auto equal = metrics(ConfusionCounts{30, 10, 5, 10});
  EXPECT_NEAR(equal.f_measure, equal.precision, 1e-15);
  EXPECT_THROW(metrics(ConfusionCounts{-1, 0, 0, 0}), std::invalid_argument);
}

TEST(KFold, TenSamplesFiveFolds) {
  const std::vector<int> labels{1, 1, 1, 1, 1, -1, -1, -1, -1, -1};
  const auto folds = kfold_split(labels, 5, 3);
  ASSERT_EQ(folds.size(), 5u);
  for (const auto& f : folds) {
    ASSERT_EQ(f.size(), 2u);
    EXPECT_EQ(labels[f[0]] + labels[f[1]], 0);
  }
}

TEST(KFold, PartitionAndDeterminism) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 2 + rng.below(9);
    std::vector<int> labels(k * 2 + rng.below(200), -1);
    for (std::size_t i = 0; i < k; ++i) labels[i] = 1;
    for (std::size_t i = k; i < labels.size(); ++i) labels[i] = rng.below(4) == 0 ? 1 : -1;
    for (std::size_t i = 0; i < k; ++i) labels[labels.size() - 1 - i] = -1;
    const auto folds = kfold_split(labels, k, trial);
    EXPECT_EQ(folds, kfold_split(labels, k, trial));
    std::vector<int> seen(labels.size(), 0);
    std::size_t largest = 0, smallest = labels.size();
    for (const auto& f : folds) {
      for (auto i : f) ++seen[i];
      largest = std::max(largest, f.size());
      smallest = std::min(smallest, f.size());
    }
    for (int s : seen) EXPECT_EQ(s, 1);
    EXPECT_LE(largest - smallest, 1u);
  }
}

TEST(KFold, ClassTooSmall) {
  EXPECT_THROW(kfold_split(std::vector<int>{1, 1, -1, -1, -1, -1}, 3, 0), std::invalid_argument);
  EXPECT_THROW(kfold_split(std::vector<int>{1, -1}, 1, 0), std::invalid_argument);
}

TEST(Subsample, ProportionsAndErrors) {
  std::vector<int> labels(100, -1);
  for (int i = 0; i < 20; ++i) labels[i * 5] = 1;
  std::vector<std::size_t> all(100);
  for (std::size_t i = 0; i < 100; ++i) all[i] = i;
  const auto half = stratified_subsample(all, labels, 0.5, 1);
  std::size_t pos = 0;
  for (auto i : half) pos += labels[i] > 0;
  EXPECT_EQ(pos, 10u);
  EXPECT_EQ(half.size(), 50u);
  EXPECT_THROW(stratified_subsample(all, labels, 0.02, 1), std::invalid_argument);
  EXPECT_THROW(stratified_subsample(all, labels, 0.0, 1), std::invalid_argument);
}

TEST(CrossValidate, SeparableData) {
  // Balanced classes put the median quantile cut on the class boundary.
  const auto x = separable(100);
  CrossValidationParams p;
  p.boost.rounds = 10;
  const auto r = cross_validate(x, p);
  EXPECT_DOUBLE_EQ(r.pooled_metrics.f_measure, 1.0);
  EXPECT_DOUBLE_EQ(r.mean_metrics.f_measure, 1.0);
}

TEST(CrossValidate, MeanCountsAndFoldTotals) {
  Rng rng(5);
  FeatureMatrix x;
  x.component_names = {"a", "b"};
  for (int i = 0; i < 120; ++i) {
    const int label = rng.below(3) == 0 ? 1 : -1;
    x.append(std::vector<double>{label * 0.2 + rng.uniform(), rng.uniform()});
    x.labels.push_back(label);
  }
  CrossValidationParams p;
  p.boost.rounds = 15;
  const auto r = cross_validate(x, p);
  const auto folds = kfold_split(x.labels, 5, p.seed);
  double tp = 0;
  for (std::size_t f = 0; f < 5; ++f) {
    std::size_t positives = 0;
    for (auto i : folds[f]) positives += x.labels[i] > 0;
    EXPECT_EQ(r.per_fold[f].counts.tp + r.per_fold[f].counts.fn, static_cast<double>(positives));
    EXPECT_EQ(r.per_fold[f].counts.total(), static_cast<double>(folds[f].size()));
    tp += r.per_fold[f].counts.tp;
  }
  EXPECT_NEAR(r.mean_counts.tp, tp / 5.0, 1e-12);
  EXPECT_EQ(report_to_json(r).dump(), report_to_json(cross_validate(x, p)).dump());
}

TEST(CrossValidate, SubsampleThatEliminatesAClass) {
  auto x = separable(60);
  CrossValidationParams p;
  p.train_fraction = 0.02;
  EXPECT_THROW(cross_validate(x, p), std::invalid_argument);
}
