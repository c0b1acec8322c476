#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iotad/classifier.hpp"

namespace iotad {

struct KnnConfig {
  std::size_t k = 5;
  /// 0 disables the cap.
  std::size_t max_reference_rows = 20000;
  std::uint64_t seed = 0;
};

/// Keeps at most `cap` rows, allocating floor(n_c * cap / n) per class (at
/// least one for every class present) by a seeded shuffle. Row order is
/// preserved.
FeatureMatrix stratified_row_cap(const FeatureMatrix& m, std::size_t cap, std::uint64_t seed);

/// Brute-force Euclidean k-nearest-neighbour classifier.
class KnnModel final : public Classifier {
 public:
  KnnModel() = default;
  /// Throws kKTooLarge when k exceeds the reference row count.
  KnnModel(FeatureMatrix references, std::size_t k);

  static KnnModel fit(const FeatureMatrix& train, const KnnConfig& config);

  std::vector<int> predict(const FeatureMatrix& queries) const override;
  /// Majority class of the k nearest references. Distance ties go to the
  /// lower reference index, vote ties to the lower class code.
  int predict_row(std::span<const float> query) const;
  std::size_t input_width() const override { return references_.cols; }

  const FeatureMatrix& references() const { return references_; }
  std::size_t k() const { return k_; }
  /// Rows offered to fit() before the cap was applied.
  std::size_t source_rows() const { return source_rows_; }
  void set_source_rows(std::size_t n) { source_rows_ = n; }

 private:
  FeatureMatrix references_;
  std::size_t k_ = 5;
  std::size_t source_rows_ = 0;
  int n_classes_ = 0;
};

}  // namespace iotad
