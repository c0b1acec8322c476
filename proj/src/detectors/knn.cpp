#include "iotad/detectors/knn.hpp"

#include <algorithm>
#include <map>

#include "iotad/rng.hpp"

namespace iotad {

FeatureMatrix stratified_row_cap(const FeatureMatrix& m, std::size_t cap, std::uint64_t seed) {
  if (cap == 0 || m.rows <= cap) return m;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < m.rows; ++i) by_class[m.labels[i]].push_back(i);
  std::vector<std::size_t> keep;
  for (auto& [label, rows] : by_class) {
    const std::size_t share = std::max<std::size_t>(1, rows.size() * cap / m.rows);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(rows);
    keep.insert(keep.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(share));
  }
  std::sort(keep.begin(), keep.end());
  return select_rows(m, keep);
}

KnnModel::KnnModel(FeatureMatrix references, std::size_t k)
    : references_(std::move(references)), k_(k), source_rows_(references_.rows) {
  references_.validate();
  if (k_ == 0) throw Error(ErrorCode::kInvalidArgument, "knn: k must be positive");
  if (k_ > references_.rows) {
    throw Error(ErrorCode::kKTooLarge, "knn: k=" + std::to_string(k_) + " exceeds " +
                                           std::to_string(references_.rows) + " reference rows");
  }
  for (int label : references_.labels) {
    if (label < 0) throw Error(ErrorCode::kCodeOutOfRange, "knn: negative class code");
    n_classes_ = std::max(n_classes_, label + 1);
  }
}

KnnModel KnnModel::fit(const FeatureMatrix& train, const KnnConfig& config) {
  KnnModel model(stratified_row_cap(train, config.max_reference_rows, config.seed), config.k);
  model.source_rows_ = train.rows;
  return model;
}

int KnnModel::predict_row(std::span<const float> query) const {
  const std::size_t d = references_.cols;
  if (query.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "knn: query has " + std::to_string(query.size()) +
                                                   " columns, references have " + std::to_string(d));
  }
  // Sorted (distance, index) of the best k so far. References are visited in
  // index order, so a strict comparison keeps the lower index on ties.
  std::vector<std::pair<double, std::size_t>> best;
  best.reserve(k_ + 1);
  const float* ref = references_.values.data();
  for (std::size_t r = 0; r < references_.rows; ++r, ref += d) {
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = static_cast<double>(query[j]) - static_cast<double>(ref[j]);
      dist += diff * diff;
    }
    if (best.size() == k_ && dist >= best.back().first) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), dist,
                                [](double v, const auto& e) { return v < e.first; });
    best.insert(pos, {dist, r});
    if (best.size() > k_) best.pop_back();
  }
  std::vector<std::size_t> votes(static_cast<std::size_t>(n_classes_), 0);
  for (const auto& [dist, r] : best) ++votes[static_cast<std::size_t>(references_.labels[r])];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

std::vector<int> KnnModel::predict(const FeatureMatrix& queries) const {
  if (queries.cols != references_.cols) {
    throw Error(ErrorCode::kDimensionMismatch, "knn: query has " + std::to_string(queries.cols) +
                                                   " columns, references have " +
                                                   std::to_string(references_.cols));
  }
  std::vector<int> out(queries.rows);
  for (std::size_t i = 0; i < queries.rows; ++i) out[i] = predict_row(queries.row(i));
  return out;
}

}  // namespace iotad
