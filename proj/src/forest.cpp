#include "adshield/forest.hpp"

#include <algorithm>
#include <cmath>

#include "adshield/error.hpp"
#include "adshield/parallel.hpp"
#include "adshield/rng.hpp"

namespace adshield::classify {

BinaryMatrix to_binary_matrix(const std::vector<features::FeatureVector>& vectors) {
  BinaryMatrix m;
  m.n_features = vectors.empty() ? 0 : vectors.front().values.size();
  m.rows.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.values.size() != m.n_features)
      throw InvalidArgument("to_binary_matrix: feature vectors differ in length");
    std::vector<std::uint32_t> row;
    for (std::size_t i = 0; i < v.values.size(); ++i)
      if (v.values[i] > 0.5) row.push_back(static_cast<std::uint32_t>(i));
    m.rows.push_back(std::move(row));
  }
  return m;
}

ClassWeights balanced_class_weights(const std::vector<bool>& labels) {
  const auto n = static_cast<double>(labels.size());
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), true));
  const double n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw InvalidArgument("balanced_class_weights: both classes must be present");
  return {n / (2.0 * n_neg), n / (2.0 * n_pos)};
}

namespace {

bool has_feature(std::span<const std::uint32_t> row, std::int32_t f) {
  return std::binary_search(row.begin(), row.end(), static_cast<std::uint32_t>(f));
}

double leaf_proba(const TreeNode& n) {
  const double total = n.negative_mass + n.positive_mass;
  return total > 0 ? n.positive_mass / total : 0.0;
}

}  // namespace

double DecisionTree::predict_proba(std::span<const std::uint32_t> active) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0)
    i = static_cast<std::size_t>(has_feature(active, nodes[i].feature) ? nodes[i].present
                                                                       : nodes[i].absent);
  return leaf_proba(nodes[i]);
}

std::size_t DecisionTree::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[i].feature >= 0) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].absent), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].present), d + 1);
    }
  }
  return best;
}

double RandomForestModel::predict_proba(std::span<const std::uint32_t> active) const {
  if (trees.empty()) throw InvalidArgument("random forest is not trained");
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict_proba(active);
  return sum / static_cast<double>(trees.size());
}

namespace {

class TreeBuilder {
 public:
  TreeBuilder(const BinaryMatrix& data, const std::vector<bool>& labels,
              const ForestConfig& config, std::size_t max_features, ClassWeights weights,
              Rng& rng)
      : data_(data),
        labels_(labels),
        config_(config),
        max_features_(max_features),
        weights_(weights),
        rng_(rng),
        count_(data.n_features, 0),
        pos_(data.n_features, 0.0),
        neg_(data.n_features, 0.0) {}

  DecisionTree build(const std::vector<std::uint32_t>& sample_counts) {
    std::vector<Sample> root;
    for (std::size_t i = 0; i < sample_counts.size(); ++i) {
      if (sample_counts[i] == 0) continue;
      const double w = sample_counts[i] * (labels_[i] ? weights_.positive : weights_.negative);
      root.push_back({static_cast<std::uint32_t>(i), w});
    }
    DecisionTree tree;
    tree.nodes.emplace_back();
    struct Work {
      std::size_t node;
      std::vector<Sample> samples;
      int depth;
    };
    std::vector<Work> stack;
    stack.push_back({0, std::move(root), 0});
    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();
      auto& node = tree.nodes[w.node];
      for (const auto& s : w.samples)
        (labels_[s.row] ? node.positive_mass : node.negative_mass) += s.weight;

      const auto n = w.samples.size();
      const bool pure = node.positive_mass == 0.0 || node.negative_mass == 0.0;
      const bool depth_capped = config_.max_depth > 0 && w.depth >= config_.max_depth;
      if (pure || depth_capped || n < 2 * static_cast<std::size_t>(config_.min_samples_leaf))
        continue;

      const std::int32_t f = best_split(w.samples, node.negative_mass, node.positive_mass);
      if (f < 0) continue;

      std::vector<Sample> absent, present;
      for (const auto& s : w.samples)
        (has_feature(data_.rows[s.row], f) ? present : absent).push_back(s);
      const auto absent_id = tree.nodes.size();
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& parent = tree.nodes[w.node];
      parent.feature = f;
      parent.absent = static_cast<std::int32_t>(absent_id);
      parent.present = static_cast<std::int32_t>(absent_id + 1);
      stack.push_back({absent_id + 1, std::move(present), w.depth + 1});
      stack.push_back({absent_id, std::move(absent), w.depth + 1});
    }
    return tree;
  }

 private:
  struct Sample {
    std::uint32_t row;
    double weight;
  };

  static double gini_mass(double neg, double pos) {
    const double t = neg + pos;
    return t > 0 ? t - (neg * neg + pos * pos) / t : 0.0;  // t * gini
  }

  // Best feature among up to max_features randomly drawn non-constant
  // features, or -1 when no split respects min_samples_leaf.
  std::int32_t best_split(const std::vector<Sample>& samples, double node_neg,
                          double node_pos) {
    touched_.clear();
    for (const auto& s : samples) {
      const bool positive = labels_[s.row];
      for (auto f : data_.rows[s.row]) {
        if (count_[f] == 0) touched_.push_back(f);
        ++count_[f];
        (positive ? pos_[f] : neg_[f]) += s.weight;
      }
    }
    candidates_.clear();
    std::sort(touched_.begin(), touched_.end());
    for (auto f : touched_)
      if (count_[f] < samples.size()) candidates_.push_back(f);

    const double parent = gini_mass(node_neg, node_pos);
    const auto leaf = static_cast<std::size_t>(config_.min_samples_leaf);
    std::int32_t best = -1;
    double best_gain = -1.0;
    const std::size_t draws = std::min(max_features_, candidates_.size());
    for (std::size_t j = 0; j < draws; ++j) {
      const auto k = j + static_cast<std::size_t>(rng_.below(candidates_.size() - j));
      std::swap(candidates_[j], candidates_[k]);
      const auto f = candidates_[j];
      const std::size_t n_present = count_[f];
      if (n_present < leaf || samples.size() - n_present < leaf) continue;
      const double gain = parent - gini_mass(neg_[f], pos_[f]) -
                          gini_mass(node_neg - neg_[f], node_pos - pos_[f]);
      if (gain > best_gain) {
        best_gain = gain;
        best = static_cast<std::int32_t>(f);
      }
    }
    for (auto f : touched_) {
      count_[f] = 0;
      pos_[f] = neg_[f] = 0.0;
    }
    return best;
  }

  const BinaryMatrix& data_;
  const std::vector<bool>& labels_;
  const ForestConfig& config_;
  std::size_t max_features_;
  ClassWeights weights_;
  Rng& rng_;
  std::vector<std::size_t> count_;
  std::vector<double> pos_, neg_;
  std::vector<std::uint32_t> touched_, candidates_;
};

}  // namespace

RandomForestModel train_random_forest(const BinaryMatrix& data, const std::vector<bool>& labels,
                                      const ForestConfig& config, std::uint64_t seed) {
  if (data.rows.empty()) throw InvalidArgument("train_random_forest: empty training data");
  if (data.rows.size() != labels.size())
    throw InvalidArgument("train_random_forest: rows and labels differ in count");
  if (config.n_trees < 1) throw InvalidArgument("train_random_forest: n_trees must be >= 1");
  if (config.min_samples_leaf < 1)
    throw InvalidArgument("train_random_forest: min_samples_leaf must be >= 1");
  const ClassWeights weights = balanced_class_weights(labels);

  std::size_t max_features = config.max_features > 0
                                 ? static_cast<std::size_t>(config.max_features)
                                 : static_cast<std::size_t>(std::sqrt(static_cast<double>(data.n_features)));
  max_features = std::max<std::size_t>(1, max_features);

  RandomForestModel model;
  model.config = config;
  model.n_features = data.n_features;
  model.class_weights = weights;
  model.seed = seed;
  model.trees.resize(static_cast<std::size_t>(config.n_trees));

  const std::size_t n = data.rows.size();
  parallel_for(model.trees.size(), [&](std::size_t t) {
    Rng rng(mix_seed(seed, t));
    std::vector<std::uint32_t> counts(n, config.bootstrap ? 0 : 1);
    if (config.bootstrap)
      for (std::size_t i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(rng.below(n))];
    TreeBuilder builder(data, labels, config, max_features, weights, rng);
    model.trees[t] = builder.build(counts);
  });
  return model;
}

RandomForestModel train_random_forest(const std::vector<features::FeatureVector>& vectors,
                                      const std::vector<bool>& labels,
                                      const ForestConfig& config, std::uint64_t seed) {
  return train_random_forest(to_binary_matrix(vectors), labels, config, seed);
}

}  // namespace adshield::classify
