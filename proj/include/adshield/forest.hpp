#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adshield/features.hpp"

namespace adshield::classify {

/// Binary design matrix in sparse form: each row lists the sorted indices of
/// features equal to 1.
struct BinaryMatrix {
  std::size_t n_features = 0;
  std::vector<std::vector<std::uint32_t>> rows;
};

/// Converts dense binary feature vectors (entries > 0.5 count as present).
BinaryMatrix to_binary_matrix(const std::vector<features::FeatureVector>& vectors);

struct ForestConfig {
  int n_trees = 100;
  /// Features examined per split; 0 selects floor(sqrt(n_features)).
  int max_features = 0;
  int min_samples_leaf = 1;
  /// 0 means unlimited depth.
  int max_depth = 0;
  bool bootstrap = true;
};

struct ClassWeights {
  double negative = 1.0;
  double positive = 1.0;
};

/// Balanced weights w_c = N / (2 N_c). Throws InvalidArgument unless both
/// classes are present.
ClassWeights balanced_class_weights(const std::vector<bool>& labels);

struct TreeNode {
  /// Split feature, or -1 for a leaf. Rows without the feature go to
  /// `absent`, rows with it to `present`.
  std::int32_t feature = -1;
  std::int32_t absent = -1;
  std::int32_t present = -1;
  double negative_mass = 0.0;
  double positive_mass = 0.0;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict_proba(std::span<const std::uint32_t> active) const;
  std::size_t depth() const;
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  ForestConfig config;
  std::size_t n_features = 0;
  ClassWeights class_weights;
  double threshold = 0.5;
  std::uint64_t seed = 0;

  /// Mean of per-tree positive-class probabilities.
  double predict_proba(std::span<const std::uint32_t> active) const;
};

/// Bagged class-weighted Gini trees; reproducible from `seed` regardless of
/// the number of worker threads.
RandomForestModel train_random_forest(const BinaryMatrix& data, const std::vector<bool>& labels,
                                      const ForestConfig& config, std::uint64_t seed);
RandomForestModel train_random_forest(const std::vector<features::FeatureVector>& vectors,
                                      const std::vector<bool>& labels,
                                      const ForestConfig& config, std::uint64_t seed);

}  // namespace adshield::classify
