#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iotad/classifier.hpp"
#include "iotad/nn/tensor.hpp"

namespace iotad {

struct ForestConfig {
  std::size_t n_trees = 50;
  std::size_t max_depth = 16;
  std::size_t min_samples_split = 2;
  /// 0 means ceil(sqrt(d)).
  std::size_t features_per_split = 0;
  /// Off fits every tree on the full training set.
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

/// Internal nodes send x[feature] <= threshold to `left`. Leaves have
/// feature == -1 and carry the class histogram of their training samples.
struct TreeNode {
  std::int32_t feature = -1;
  float threshold = 0.0f;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<std::uint32_t> histogram;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const float> x) const;
  /// Majority class of the reached leaf; lowest code on ties.
  int predict(std::span<const float> x) const;
};

struct ForestPrediction {
  int label = 0;
  /// Fraction of trees voting for `label`.
  double confidence = 0.0;
};

class ForestModel final : public Classifier {
 public:
  ForestModel() = default;
  ForestModel(std::vector<DecisionTree> trees, std::size_t n_features, int n_classes);

  /// Bootstrap + Gini random forest. Tree t draws from derive_seed(seed, t).
  static ForestModel fit(const FeatureMatrix& train, const ForestConfig& config);

  std::vector<int> predict(const FeatureMatrix& queries) const override;
  ForestPrediction predict_row(std::span<const float> x) const;
  std::size_t input_width() const override { return n_features_; }

  const std::vector<DecisionTree>& trees() const { return trees_; }
  int n_classes() const { return n_classes_; }
  bool empty() const { return trees_.empty(); }

  /// One [nodes, 4 + n_classes] table per tree: feature, threshold, left,
  /// right, then the leaf histogram. Exact in float32 for the sizes used.
  std::vector<nn::Tensor<float>> to_node_tables() const;
  static ForestModel from_node_tables(const std::vector<nn::Tensor<float>>& tables,
                                      std::size_t n_features);

 private:
  std::vector<DecisionTree> trees_;
  std::size_t n_features_ = 0;
  int n_classes_ = 0;
};

/// Gini impurity 1 - sum p_c^2 of a class histogram.
double gini(std::span<const std::uint32_t> histogram);

}  // namespace iotad
