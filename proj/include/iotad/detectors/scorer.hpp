#pragma once

#include <span>
#include <vector>

#include "iotad/preprocess.hpp"

namespace iotad {

/// Value at rank ceil(p/100 * n) of the sorted sample (rank clamped to
/// [1, n]). p must lie in (0, 100]; the sample must be non-empty.
double nearest_rank_percentile(std::vector<double> values, double p);

enum class ScoreKind { kReconstruction, kGan };

/// Higher score means more anomalous; a row is anomalous iff score > theta.
class AnomalyScorer {
 public:
  virtual ~AnomalyScorer() = default;
  virtual ScoreKind score_kind() const = 0;
  virtual std::vector<double> score(const FeatureMatrix& x) const = 0;
  virtual double threshold() const = 0;
  virtual void set_threshold(double theta) = 0;

  /// 1 for anomalous rows, 0 otherwise.
  std::vector<int> classify(const FeatureMatrix& x) const;
};

std::vector<int> classify_scores(std::span<const double> scores, double theta);

/// Number of scores above each threshold.
std::vector<std::size_t> anomaly_counts(std::span<const double> scores,
                                        std::span<const double> thresholds);

/// `points` thresholds evenly spaced over [min score, max score].
std::vector<double> threshold_grid(std::span<const double> scores, std::size_t points);

struct TunedThreshold {
  double threshold = 0.0;
  double percentile = 0.0;
  double accuracy = 0.0;
};

/// Picks, among nearest-rank percentiles 1..100 of `scores`, the threshold
/// with the best binary accuracy against `binary_labels`; lowest percentile
/// wins ties.
TunedThreshold tune_threshold(std::span<const double> scores, std::span<const int> binary_labels);

}  // namespace iotad
