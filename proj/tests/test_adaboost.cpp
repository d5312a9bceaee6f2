#include <gtest/gtest.h>

#include <cmath>

#include "muchlac/adaboost.hpp"

using namespace muchlac;

namespace {

FeatureMatrix make(std::size_t cols, const std::vector<std::vector<double>>& rows, std::vector<int> labels = {}) {
  FeatureMatrix x;
  for (std::size_t j = 0; j < cols; ++j) x.component_names.push_back("f" + std::to_string(j));
  for (const auto& r : rows) x.append(r);
  x.labels = std::move(labels);
  return x;
}

FeatureMatrix random_problem(Rng& rng, std::size_t n, std::size_t d) {
  FeatureMatrix x;
  for (std::size_t j = 0; j < d; ++j) x.component_names.push_back("f" + std::to_string(j));
  std::vector<double> row(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : row) v = rng.uniform();
    const int label = row[0] + 0.5 * row[1] + 0.3 * rng.uniform() > 0.9 ? 1 : -1;
    x.append(row);
    x.labels.push_back(label);
  }
  x.labels[0] = 1;
  x.labels[1] = -1;
  return x;
}

}  // namespace

TEST(AdaBoost, SeparableOneRound) {
  const auto x = make(1, {{-0.9}, {-0.5}, {-0.2}, {0.0}, {0.4}, {0.8}, {1.3}}, {-1, -1, -1, 1, 1, 1, 1});
  AdaBoostParams p;
  p.rounds = 1;
  const auto model = train_real_adaboost(x, p);
  const auto trace = boosting_bound_trace(model, x, x.labels);
  EXPECT_EQ(trace.back().training_error, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) EXPECT_EQ(predict_label(model, x.row(i)), x.labels[i]);
}

TEST(AdaBoost, ConstantFeatureNeverChosen) {
  Rng rng(5);
  auto base = random_problem(rng, 60, 2);
  FeatureMatrix x;
  x.component_names = {"const", "f0", "f1"};
  for (std::size_t i = 0; i < base.rows; ++i) x.append(std::vector<double>{3.0, base.at(i, 0), base.at(i, 1)});
  x.labels = base.labels;
  AdaBoostParams p;
  p.rounds = 20;
  const auto model = train_real_adaboost(x, p);
  for (const auto& s : model.stumps) EXPECT_NE(s.feature, 0u);
}

TEST(AdaBoost, TrainingErrorBoundedByNormalizerProduct) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_problem(rng, 20 + rng.below(60), 1 + rng.below(5));
    AdaBoostParams p;
    p.rounds = 1 + rng.below(30);
    p.bins = 2 + rng.below(15);
    p.seed = trial;
    const auto model = train_real_adaboost(x, p);
    for (const auto& step : boosting_bound_trace(model, x, x.labels)) {
      EXPECT_LE(step.training_error, step.z_product + 1e-12);
    }
    for (const auto& s : model.stumps) EXPECT_GT(s.z, 0.0);
  }
}

TEST(AdaBoost, NormalizerMatchesReweighting) {
  // Replays the weights from the stored stumps; each round's Z must equal the
  // mass the update divides by.
  Rng rng(21);
  const auto x = random_problem(rng, 40, 3);
  AdaBoostParams p;
  p.rounds = 8;
  const auto model = train_real_adaboost(x, p);
  std::vector<double> w(x.rows, 1.0 / static_cast<double>(x.rows));
  for (const auto& s : model.stumps) {
    double z = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) z += w[i] * std::exp(-x.labels[i] * s(x.row(i)));
    EXPECT_NEAR(z, s.z, 1e-12);
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      w[i] *= std::exp(-x.labels[i] * s(x.row(i))) / z;
      total += w[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(AdaBoost, ScoreSumsStumpOutputs) {
  StumpEnsembleModel model;
  model.dimension = 1;
  model.stumps.push_back(Stump{0, "a", {0.5}, {-0.1, 0.4}, 1.0});
  model.stumps.push_back(Stump{0, "a", {0.5}, {0.0, 0.3}, 1.0});
  const std::vector<double> x{0.9};
  EXPECT_NEAR(predict_score(model, x), 0.7, 1e-15);
  EXPECT_EQ(predict_label(model, x), 1);
  model.stumps[1].outputs[1] = -0.4;
  EXPECT_EQ(predict_score(model, x), 0.0);
  EXPECT_EQ(predict_label(model, x), -1);
}

TEST(AdaBoost, Deterministic) {
  Rng rng(8);
  const auto x = random_problem(rng, 80, 4);
  AdaBoostParams p;
  p.rounds = 15;
  EXPECT_EQ(model_to_json(train_real_adaboost(x, p)).dump(), model_to_json(train_real_adaboost(x, p)).dump());
}

TEST(AdaBoost, MonotoneTransformKeepsPredictions) {
  Rng rng(13);
  const auto x = random_problem(rng, 70, 3);
  auto y = x;
  for (auto& v : y.values) v = std::exp(3.0 * v) - 2.0;
  AdaBoostParams p;
  p.rounds = 12;
  const auto a = train_real_adaboost(x, p);
  const auto b = train_real_adaboost(y, p);
  for (std::size_t i = 0; i < x.rows; ++i) EXPECT_EQ(predict_label(a, x.row(i)), predict_label(b, y.row(i)));
  for (std::size_t t = 0; t < a.stumps.size(); ++t) EXPECT_EQ(a.stumps[t].feature, b.stumps[t].feature);
}

TEST(AdaBoost, Errors) {
  const auto one_class = make(1, {{0.1}, {0.2}}, {1, 1});
  EXPECT_THROW(train_real_adaboost(one_class), std::invalid_argument);
  const auto x = make(1, {{0.1}, {0.2}}, {1, -1});
  AdaBoostParams p;
  p.rounds = 0;
  EXPECT_THROW(train_real_adaboost(x, p), std::invalid_argument);
  const auto model = train_real_adaboost(x, AdaBoostParams{3, 2, {}, 1});
  const std::vector<double> wrong{0.1, 0.2};
  EXPECT_THROW(predict_score(model, wrong), std::invalid_argument);
  auto nan = x;
  nan.values[0] = std::nan("");
  EXPECT_THROW(train_real_adaboost(nan), std::invalid_argument);
}

TEST(AdaBoost, QuantileEdges) {
  EXPECT_TRUE(quantile_edges({1, 1, 1, 1}, 16).empty());
  const auto e = quantile_edges({0, 1, 2, 3, 4, 5, 6, 7}, 4);
  EXPECT_LE(e.size(), 3u);
  for (std::size_t i = 1; i < e.size(); ++i) EXPECT_LT(e[i - 1], e[i]);
}

TEST(AdaBoost, JsonRoundTrip) {
  Rng rng(3);
  const auto x = random_problem(rng, 50, 3);
  AdaBoostParams p;
  p.rounds = 6;
  const auto model = train_real_adaboost(x, p);
  const auto back = model_from_json(nlohmann::json::parse(model_to_json(model).dump()));
  EXPECT_EQ(model_to_json(back).dump(), model_to_json(model).dump());
  for (std::size_t i = 0; i < x.rows; ++i) EXPECT_EQ(predict_score(back, x.row(i)), predict_score(model, x.row(i)));
}
