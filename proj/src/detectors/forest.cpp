#include "iotad/detectors/forest.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "iotad/rng.hpp"

namespace iotad {
namespace {

std::size_t argmax_count(std::span<const std::uint32_t> h) {
  return static_cast<std::size_t>(std::max_element(h.begin(), h.end()) - h.begin());
}

struct Split {
  bool found = false;
  std::size_t feature = 0;
  float threshold = 0.0f;
  double impurity = 0.0;  // weighted child impurity
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& data, const ForestConfig& config, std::size_t mtry,
              int n_classes, Rng& rng)
      : data_(data), config_(config), mtry_(mtry), n_classes_(static_cast<std::size_t>(n_classes)),
        rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    tree_.nodes.clear();
    grow(samples, 0);
    return std::move(tree_);
  }

 private:
  std::vector<std::uint32_t> histogram_of(std::span<const std::size_t> samples) const {
    std::vector<std::uint32_t> h(n_classes_, 0);
    for (auto s : samples) ++h[static_cast<std::size_t>(data_.labels[s])];
    return h;
  }

  std::int32_t grow(std::vector<std::size_t>& samples, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    auto hist = histogram_of(samples);
    const bool pure = std::count_if(hist.begin(), hist.end(), [](auto c) { return c > 0; }) <= 1;
    Split split;
    if (!pure && depth < config_.max_depth && samples.size() >= config_.min_samples_split) {
      split = best_split(samples, hist);
    }
    if (!split.found) {
      tree_.nodes[static_cast<std::size_t>(id)].histogram = std::move(hist);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (auto s : samples) {
      (data_.at(s, split.feature) <= split.threshold ? left : right).push_back(s);
    }
    assert(!left.empty() && !right.empty());
#ifndef NDEBUG
    const double parent = gini(hist) * static_cast<double>(samples.size());
    assert(split.impurity <= parent + 1e-9);
#endif
    samples.clear();
    samples.shrink_to_fit();
    const auto l = grow(left, depth + 1);
    const auto r = grow(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<std::int32_t>(split.feature);
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  // Visits features in a random order and keeps going past constant ones
  // until mtry informative features were examined.
  Split best_split(std::span<const std::size_t> samples, const std::vector<std::uint32_t>& total) {
    std::vector<std::size_t> features(data_.cols);
    std::iota(features.begin(), features.end(), 0);
    rng_.shuffle(features);
    Split best;
    std::size_t examined = 0;
    std::vector<std::pair<float, int>> column(samples.size());
    std::vector<std::uint32_t> left(n_classes_);
    const double n = static_cast<double>(samples.size());
    for (std::size_t f : features) {
      if (examined == mtry_) break;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        column[i] = {data_.at(samples[i], f), data_.labels[samples[i]]};
      }
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first) continue;
      ++examined;
      std::fill(left.begin(), left.end(), 0);
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        ++left[static_cast<std::size_t>(column[i].second)];
        const float a = column[i].first, b = column[i + 1].first;
        if (a == b) continue;
        const double nl = static_cast<double>(i + 1), nr = n - nl;
        double sl = 0.0, sr = 0.0;
        for (std::size_t c = 0; c < n_classes_; ++c) {
          const double lc = left[c], rc = static_cast<double>(total[c]) - left[c];
          sl += lc * lc;
          sr += rc * rc;
        }
        // Weighted Gini: nl * (1 - sl/nl^2) + nr * (1 - sr/nr^2).
        const double impurity = (nl - sl / nl) + (nr - sr / nr);
        if (!best.found || impurity < best.impurity) {
          float thr = static_cast<float>(0.5 * (static_cast<double>(a) + static_cast<double>(b)));
          if (!(thr >= a && thr < b)) thr = a;
          best = {true, f, thr, impurity};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& data_;
  const ForestConfig& config_;
  std::size_t mtry_;
  std::size_t n_classes_;
  Rng& rng_;
  DecisionTree tree_;
};

}  // namespace

double gini(std::span<const std::uint32_t> histogram) {
  double n = 0.0, s = 0.0;
  for (auto c : histogram) {
    n += c;
    s += static_cast<double>(c) * c;
  }
  return n == 0.0 ? 0.0 : 1.0 - s / (n * n);
}

const TreeNode& DecisionTree::leaf_for(std::span<const float> x) const {
  const TreeNode* node = &nodes.at(0);
  while (node->feature >= 0) {
    node = &nodes[static_cast<std::size_t>(
        x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right)];
  }
  return *node;
}

int DecisionTree::predict(std::span<const float> x) const {
  return static_cast<int>(argmax_count(leaf_for(x).histogram));
}

ForestModel::ForestModel(std::vector<DecisionTree> trees, std::size_t n_features, int n_classes)
    : trees_(std::move(trees)), n_features_(n_features), n_classes_(n_classes) {}

ForestModel ForestModel::fit(const FeatureMatrix& train, const ForestConfig& config) {
  if (train.rows == 0) throw Error(ErrorCode::kEmptyTrainingSet, "forest: no training rows");
  train.validate();
  if (config.n_trees == 0) throw Error(ErrorCode::kInvalidArgument, "forest: n_trees must be positive");
  int n_classes = 0;
  for (int label : train.labels) {
    if (label < 0) throw Error(ErrorCode::kCodeOutOfRange, "forest: negative class code");
    n_classes = std::max(n_classes, label + 1);
  }
  const std::size_t mtry =
      config.features_per_split > 0
          ? std::min(config.features_per_split, train.cols)
          : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(train.cols))));
  std::vector<DecisionTree> trees;
  trees.reserve(config.n_trees);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    Rng rng(derive_seed(config.seed, t));
    std::vector<std::size_t> sample(train.rows);
    if (config.bootstrap) {
      for (auto& s : sample) s = static_cast<std::size_t>(rng.uniform_index(train.rows));
    } else {
      std::iota(sample.begin(), sample.end(), std::size_t{0});
    }
    TreeBuilder builder(train, config, std::max<std::size_t>(1, mtry), n_classes, rng);
    trees.push_back(builder.build(std::move(sample)));
  }
  return ForestModel(std::move(trees), train.cols, n_classes);
}

ForestPrediction ForestModel::predict_row(std::span<const float> x) const {
  if (trees_.empty()) throw Error(ErrorCode::kEmptyModel, "forest: model has no trees");
  if (x.size() != n_features_) {
    throw Error(ErrorCode::kDimensionMismatch, "forest: query has " + std::to_string(x.size()) +
                                                   " columns, model expects " +
                                                   std::to_string(n_features_));
  }
  std::vector<std::uint32_t> votes(static_cast<std::size_t>(n_classes_), 0);
  for (const auto& tree : trees_) ++votes[static_cast<std::size_t>(tree.predict(x))];
  const auto best = argmax_count(votes);
  return {static_cast<int>(best),
          static_cast<double>(votes[best]) / static_cast<double>(trees_.size())};
}

std::vector<int> ForestModel::predict(const FeatureMatrix& queries) const {
  if (trees_.empty()) throw Error(ErrorCode::kEmptyModel, "forest: model has no trees");
  std::vector<int> out(queries.rows);
  for (std::size_t i = 0; i < queries.rows; ++i) out[i] = predict_row(queries.row(i)).label;
  return out;
}

std::vector<nn::Tensor<float>> ForestModel::to_node_tables() const {
  const std::size_t width = 4 + static_cast<std::size_t>(n_classes_);
  std::vector<nn::Tensor<float>> out;
  for (const auto& tree : trees_) {
    nn::Tensor<float> table({tree.nodes.size(), width});
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const auto& node = tree.nodes[i];
      table.at(i, 0) = static_cast<float>(node.feature);
      table.at(i, 1) = node.threshold;
      table.at(i, 2) = static_cast<float>(node.left);
      table.at(i, 3) = static_cast<float>(node.right);
      for (std::size_t c = 0; c < node.histogram.size(); ++c) {
        table.at(i, 4 + c) = static_cast<float>(node.histogram[c]);
      }
    }
    out.push_back(std::move(table));
  }
  return out;
}

ForestModel ForestModel::from_node_tables(const std::vector<nn::Tensor<float>>& tables,
                                          std::size_t n_features) {
  if (tables.empty()) return ForestModel({}, n_features, 0);
  const std::size_t width = tables.front().dim(1);
  if (width < 5) throw Error(ErrorCode::kBundleFormat, "forest: node table too narrow");
  const int n_classes = static_cast<int>(width - 4);
  std::vector<DecisionTree> trees;
  for (const auto& table : tables) {
    if (table.rank() != 2 || table.dim(1) != width || table.dim(0) == 0) {
      throw Error(ErrorCode::kBundleFormat, "forest: inconsistent node table shape");
    }
    DecisionTree tree;
    const std::size_t n = table.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
      TreeNode node;
      node.feature = static_cast<std::int32_t>(table.at(i, 0));
      node.threshold = table.at(i, 1);
      node.left = static_cast<std::int32_t>(table.at(i, 2));
      node.right = static_cast<std::int32_t>(table.at(i, 3));
      if (node.feature >= 0) {
        const auto bad = [n](std::int32_t c) { return c <= 0 || static_cast<std::size_t>(c) >= n; };
        if (static_cast<std::size_t>(node.feature) >= n_features || bad(node.left) || bad(node.right)) {
          throw Error(ErrorCode::kBundleFormat, "forest: node references out of range");
        }
      } else {
        node.histogram.resize(width - 4);
        for (std::size_t c = 0; c + 4 < width; ++c) {
          node.histogram[c] = static_cast<std::uint32_t>(table.at(i, 4 + c));
        }
      }
      tree.nodes.push_back(std::move(node));
    }
    trees.push_back(std::move(tree));
  }
  return ForestModel(std::move(trees), n_features, n_classes);
}

}  // namespace iotad
