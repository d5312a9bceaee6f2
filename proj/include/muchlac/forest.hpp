#pragma once

// Random forest (bootstrap CART, Gini) and out-of-bag permutation importance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "muchlac/common.hpp"
#include "muchlac/feature_matrix.hpp"
#include "muchlac/features.hpp"

namespace muchlac {

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;           // 0 = grow until pure
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(d))
  std::uint64_t seed = 7;
  unsigned threads = 1;
};

struct TreeNode {
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;  // 0 marks a leaf (the root is never a child)
  std::size_t right = 0;
  int label = -1;
  std::size_t samples = 0;

  bool is_leaf() const { return left == 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;
  std::vector<std::size_t> bootstrap;  // drawn sample indices, with repeats
  std::vector<std::size_t> oob;        // indices never drawn, ascending
  std::vector<std::size_t> split_features;  // distinct, ascending

  // Goes left when x[feature] <= threshold. `override_feature` replaces one
  // component without copying the row.
  int predict(std::span<const double> x, std::size_t override_feature = SIZE_MAX, double override_value = 0.0) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      const double v = n.feature == override_feature ? override_value : x[n.feature];
      i = v <= n.threshold ? n.left : n.right;
    }
    return nodes[i].label;
  }
};

struct Forest {
  ForestParams params;
  std::size_t dimension = 0;
  std::vector<DecisionTree> trees;

  int predict(std::span<const double> x) const {
    long votes = 0;
    for (const auto& t : trees) votes += t.predict(x);
    return votes > 0 ? 1 : -1;
  }
};

namespace forest_detail {

struct Split {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = 0.0;  // sum of child size * child Gini
};

inline double gini_mass(double pos, double neg) {
  const double n = pos + neg;
  return n == 0.0 ? 0.0 : n - (pos * pos + neg * neg) / n;
}

class TreeBuilder {
public:
  TreeBuilder(const FeatureMatrix& x, std::span<const int> y, const ForestParams& params, std::size_t per_split,
              Rng& rng)
      : x_(x), y_(y), params_(params), per_split_(per_split), rng_(rng) {}

  void grow(DecisionTree& tree, std::vector<std::size_t> samples) {
    tree.nodes.clear();
    tree.nodes.emplace_back();
    build(tree, 0, std::move(samples), 0);
    std::sort(used_.begin(), used_.end());
    used_.erase(std::unique(used_.begin(), used_.end()), used_.end());
    tree.split_features = used_;
  }

private:
  Split best_split(const std::vector<std::size_t>& samples) {
    const std::size_t d = x_.cols();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    rng_.shuffle(order);

    double total_pos = 0.0;
    for (auto i : samples) total_pos += y_[i] > 0;
    const double total = static_cast<double>(samples.size());

    Split best;
    std::vector<std::pair<double, int>> column(samples.size());
    for (std::size_t c = 0; c < d; ++c) {
      if (c >= per_split_ && best.found) break;
      const std::size_t f = order[c];
      for (std::size_t k = 0; k < samples.size(); ++k) column[k] = {x_.at(samples[k], f), y_[samples[k]]};
      std::sort(column.begin(), column.end());
      double left_pos = 0.0;
      for (std::size_t k = 0; k + 1 < column.size(); ++k) {
        left_pos += column[k].second > 0;
        if (!(column[k].first < column[k + 1].first)) continue;
        const double left_n = static_cast<double>(k + 1);
        const double impurity = gini_mass(left_pos, left_n - left_pos) +
                                gini_mass(total_pos - left_pos, (total - left_n) - (total_pos - left_pos));
        if (!best.found || impurity < best.impurity) {
          const double lo = column[k].first, hi = column[k + 1].first;
          double mid = lo + (hi - lo) / 2.0;
          if (!(mid < hi)) mid = lo;
          best = {true, f, mid, impurity};
        }
      }
    }
    return best;
  }

  void build(DecisionTree& tree, std::size_t node, std::vector<std::size_t> samples, std::size_t depth) {
    std::size_t pos = 0;
    for (auto i : samples) pos += y_[i] > 0;
    auto& n = tree.nodes[node];
    n.samples = samples.size();
    n.label = 2 * pos > samples.size() ? 1 : -1;
    const bool pure = pos == 0 || pos == samples.size();
    if (pure || (params_.max_depth != 0 && depth >= params_.max_depth)) return;

    const Split split = best_split(samples);
    if (!split.found) return;  // identical rows with mixed labels

    std::vector<std::size_t> left, right;
    for (auto i : samples) (x_.at(i, split.feature) <= split.threshold ? left : right).push_back(i);
    samples.clear();
    samples.shrink_to_fit();
    used_.push_back(split.feature);

    const std::size_t l = tree.nodes.size();
    tree.nodes.emplace_back();
    const std::size_t r = tree.nodes.size();
    tree.nodes.emplace_back();
    tree.nodes[node].feature = split.feature;
    tree.nodes[node].threshold = split.threshold;
    tree.nodes[node].left = l;
    tree.nodes[node].right = r;
    build(tree, l, std::move(left), depth + 1);
    build(tree, r, std::move(right), depth + 1);
  }

  const FeatureMatrix& x_;
  std::span<const int> y_;
  const ForestParams& params_;
  std::size_t per_split_;
  Rng& rng_;
  std::vector<std::size_t> used_;
};

inline void check_training_input(const FeatureMatrix& x, std::span<const int> y) {
  validate(x);
  require_finite(x);
  if (y.size() != x.rows) throw std::invalid_argument("label count differs from rows");
  if (x.cols() == 0) throw std::invalid_argument("feature matrix has no columns");
  bool pos = false, neg = false;
  for (int l : y) {
    if (l != 1 && l != -1) throw std::invalid_argument("labels must be +1 or -1");
    (l > 0 ? pos : neg) = true;
  }
  if (!pos || !neg) throw std::invalid_argument("training data must contain both classes");
}

}  // namespace forest_detail

inline Forest train_forest(const FeatureMatrix& x, std::span<const int> y, const ForestParams& params = {}) {
  forest_detail::check_training_input(x, y);
  if (params.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  if (x.rows < 2) throw std::invalid_argument("need at least 2 samples for out-of-bag sets");
  const std::size_t d = x.cols(), n = x.rows;
  const std::size_t per_split =
      params.features_per_split != 0
          ? std::min(params.features_per_split, d)
          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));

  Forest forest;
  forest.params = params;
  forest.dimension = d;
  forest.trees.resize(params.n_trees);
  parallel_for(params.n_trees, params.threads, [&](std::size_t t) {
    Rng rng(mix_seed(params.seed, 0x7ee5, t));
    auto& tree = forest.trees[t];
    std::vector<char> drawn;
    do {
      tree.bootstrap.clear();
      drawn.assign(n, 0);
      for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(rng.below(n));
        tree.bootstrap.push_back(i);
        drawn[i] = 1;
      }
    } while (std::all_of(drawn.begin(), drawn.end(), [](char c) { return c != 0; }));
    tree.oob.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (!drawn[i]) tree.oob.push_back(i);
    forest_detail::TreeBuilder builder(x, y, params, per_split, rng);
    builder.grow(tree, tree.bootstrap);
  });
  return forest;
}

inline Forest train_forest(const FeatureMatrix& x, const ForestParams& params = {}) {
  return train_forest(x, x.labels, params);
}

inline double tree_oob_accuracy(const DecisionTree& tree, const FeatureMatrix& x, std::span<const int> y) {
  std::size_t correct = 0;
  for (auto i : tree.oob) correct += tree.predict(x.row(i)) == y[i];
  return static_cast<double>(correct) / static_cast<double>(tree.oob.size());
}

// Majority vote of the trees for which each sample is out of bag; samples
// that are in every bootstrap are skipped.
inline double forest_oob_accuracy(const Forest& forest, const FeatureMatrix& x, std::span<const int> y) {
  std::vector<long> votes(x.rows, 0);
  std::vector<std::size_t> seen(x.rows, 0);
  for (const auto& t : forest.trees)
    for (auto i : t.oob) {
      votes[i] += t.predict(x.row(i));
      ++seen[i];
    }
  std::size_t counted = 0, correct = 0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (seen[i] == 0) continue;
    ++counted;
    correct += (votes[i] > 0 ? 1 : -1) == y[i];
  }
  return counted == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(counted);
}

struct ImportanceReport {
  std::vector<std::string> names;
  std::vector<double> scores;
  std::vector<std::size_t> ranking;  // descending score, ties by lower index
  nlohmann::ordered_json config = nlohmann::ordered_json::object();

  // Fraction of the top-`top` ranked components that are cross-channel.
  double cross_channel_share(std::size_t top = 100) const {
    const std::size_t k = std::min(top, ranking.size());
    if (k == 0) return 0.0;
    std::size_t cross = 0;
    for (std::size_t r = 0; r < k; ++r) cross += is_cross_channel(names.at(ranking[r]));
    return static_cast<double>(cross) / static_cast<double>(k);
  }
};

inline std::vector<std::size_t> rank_descending(const std::vector<double>& scores) {
  std::vector<std::size_t> ranking(scores.size());
  std::iota(ranking.begin(), ranking.end(), 0);
  std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return ranking;
}

// Per tree and component: OOB accuracy minus OOB accuracy with that
// component's values shuffled among the OOB samples. Averaged over trees.
inline ImportanceReport oob_permutation_importance(const Forest& forest, const FeatureMatrix& x, std::span<const int> y,
                                                   std::uint64_t seed, unsigned threads = 1) {
  forest_detail::check_training_input(x, y);
  if (x.cols() != forest.dimension) throw std::invalid_argument("feature matrix dimension differs from forest");
  const std::size_t d = x.cols();
  std::vector<std::vector<double>> drops(forest.trees.size(), std::vector<double>(d, 0.0));
  parallel_for(forest.trees.size(), threads, [&](std::size_t t) {
    const auto& tree = forest.trees[t];
    if (tree.oob.empty()) throw std::logic_error("tree has an empty out-of-bag set");
    const double n_oob = static_cast<double>(tree.oob.size());
    std::size_t base_correct = 0;
    for (auto i : tree.oob) base_correct += tree.predict(x.row(i)) == y[i];
    std::vector<double> shuffled(tree.oob.size());
    for (auto j : tree.split_features) {
      for (std::size_t k = 0; k < tree.oob.size(); ++k) shuffled[k] = x.at(tree.oob[k], j);
      Rng rng(mix_seed(seed, t, j));
      rng.shuffle(shuffled);
      std::size_t correct = 0;
      for (std::size_t k = 0; k < tree.oob.size(); ++k) {
        const auto i = tree.oob[k];
        correct += tree.predict(x.row(i), j, shuffled[k]) == y[i];
      }
      drops[t][j] = (static_cast<double>(base_correct) - static_cast<double>(correct)) / n_oob;
    }
  });

  ImportanceReport report;
  report.names = x.component_names;
  report.scores.assign(d, 0.0);
  for (const auto& per_tree : drops)
    for (std::size_t j = 0; j < d; ++j) report.scores[j] += per_tree[j];
  for (auto& s : report.scores) s /= static_cast<double>(forest.trees.size());
  report.ranking = rank_descending(report.scores);
  report.config["trees"] = forest.params.n_trees;
  report.config["max_depth"] = forest.params.max_depth;
  report.config["features_per_split"] = forest.params.features_per_split;
  report.config["forest_seed"] = forest.params.seed;
  report.config["seed"] = seed;
  return report;
}

inline FeatureMatrix select_top_k(const FeatureMatrix& x, const ImportanceReport& report, std::size_t k) {
  if (report.ranking.size() != x.cols()) throw std::invalid_argument("importance report dimension differs from matrix");
  if (!report.names.empty() && report.names != x.component_names)
    throw std::invalid_argument("importance report names differ from matrix component names");
  if (k < 1 || k > x.cols()) throw std::out_of_range("k must be in 1..cols");
  auto out = select_columns(x, std::span<const std::size_t>(report.ranking).first(k));
  out.config["selected_top_k"] = k;
  return out;
}

inline nlohmann::ordered_json importance_to_json(const ImportanceReport& r) {
  nlohmann::ordered_json j;
  j["magic"] = "IMP1";
  j["config"] = r.config;
  j["names"] = r.names;
  j["scores"] = r.scores;
  j["ranking"] = r.ranking;
  j["cross_channel_share_top100"] = r.cross_channel_share(100);
  return j;
}

inline ImportanceReport importance_from_json(const nlohmann::json& j) {
  try {
    if (j.value("magic", "") != "IMP1") throw DataError("not an importance report (magic)");
    ImportanceReport r;
    r.names = j.at("names").get<std::vector<std::string>>();
    r.scores = j.at("scores").get<std::vector<double>>();
    r.ranking = j.at("ranking").get<std::vector<std::size_t>>();
    if (j.contains("config")) r.config = j["config"];
    std::vector<std::size_t> sorted = r.ranking;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != i) throw DataError("importance ranking is not a permutation");
    if (r.scores.size() != r.ranking.size() || r.names.size() != r.ranking.size())
      throw DataError("importance report arrays differ in length");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed importance report: ") + e.what());
  }
}

}  // namespace muchlac
