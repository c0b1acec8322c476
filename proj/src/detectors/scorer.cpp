#include "iotad/detectors/scorer.hpp"

#include <algorithm>
#include <cmath>

namespace iotad {

double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "percentile must lie in (0, 100]");
  }
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

std::vector<int> classify_scores(std::span<const double> scores, double theta) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > theta ? 1 : 0;
  return out;
}

std::vector<int> AnomalyScorer::classify(const FeatureMatrix& x) const {
  return classify_scores(score(x), threshold());
}

std::vector<std::size_t> anomaly_counts(std::span<const double> scores,
                                        std::span<const double> thresholds) {
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::size_t> out;
  for (double t : thresholds) {
    out.push_back(static_cast<std::size_t>(sorted.end() -
                                           std::upper_bound(sorted.begin(), sorted.end(), t)));
  }
  return out;
}

std::vector<double> threshold_grid(std::span<const double> scores, std::size_t points) {
  if (scores.empty() || points == 0) return {};
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = points == 1 ? *lo
                          : *lo + (*hi - *lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

TunedThreshold tune_threshold(std::span<const double> scores, std::span<const int> binary_labels) {
  if (scores.size() != binary_labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "tune_threshold: scores and labels differ in length");
  }
  if (scores.empty()) throw Error(ErrorCode::kInvalidArgument, "tune_threshold: no scores");
  std::vector<double> values(scores.begin(), scores.end());
  TunedThreshold best;
  best.accuracy = -1.0;
  for (int p = 1; p <= 100; ++p) {
    const double theta = nearest_rank_percentile(values, p);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      correct += (scores[i] > theta ? 1 : 0) == binary_labels[i];
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(scores.size());
    if (acc > best.accuracy) best = {theta, static_cast<double>(p), acc};
  }
  return best;
}

}  // namespace iotad
