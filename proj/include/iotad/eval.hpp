#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace iotad {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t n_classes);
  ConfusionMatrix(std::size_t n_classes, std::vector<std::int64_t> counts);

  std::size_t n_classes() const { return n_; }
  std::int64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * n_ + predicted]; }
  std::int64_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * n_ + predicted]; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t true_support(std::size_t c) const;
  std::int64_t predicted_support(std::size_t c) const;

  /// Class 0 stays "normal"; every other class becomes "attack" (1).
  ConfusionMatrix collapse_binary() const;

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::int64_t> counts_;
};

/// Throws kLengthMismatch or kCodeOutOfRange.
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t n_classes);

enum class Averaging { kBinary, kMacro, kWeighted };
std::string averaging_name(Averaging mode);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
  /// Set when a 0/0 was replaced by 0.
  bool undefined = false;
};

struct MetricSet {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  /// Classes whose metrics involved a 0/0.
  std::vector<std::size_t> undefined_classes;
};

ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t c);

/// Binary collapses to normal/attack and reports the attack class. Macro
/// averages over classes present in the truth or the predictions; Weighted
/// weights by true support. Throws kEmptyMatrix when the total is zero.
MetricSet metrics(const ConfusionMatrix& cm, Averaging mode);

/// Fractions in [0, 1]; absent entries are reported as "n/a".
struct ReferenceMetrics {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

/// Reference headline numbers for "ensemble", "ae", "gan", plus the
/// layer accuracies "knn" and "cnnlstm". Unknown names yield all n/a.
ReferenceMetrics reference_metrics_for(const std::string& model);

struct DeltaRow {
  std::string metric;
  double ours = 0.0;
  std::optional<double> reference;
  std::optional<double> delta;
  /// "pass", "fail" or "n/a".
  std::string status;
};

std::vector<DeltaRow> compare_to_reference(const MetricSet& ours, const ReferenceMetrics& reference,
                                           double tolerance);

struct EvalReport {
  std::optional<ConfusionMatrix> multiclass;
  ConfusionMatrix binary;
  std::map<std::string, MetricSet> modes;  // keyed by averaging_name
  double accuracy = 0.0;
  nlohmann::json metadata = nlohmann::json::object();

  /// Builds every mode from a multiclass confusion matrix.
  static EvalReport from_multiclass(const ConfusionMatrix& cm);
  /// For detectors that only emit normal/attack verdicts.
  static EvalReport from_binary(const ConfusionMatrix& cm);

  nlohmann::json to_json() const;
  /// Console table of the metrics in every mode.
  std::string summary_table() const;
};

std::string format_delta_table(const std::string& title, const std::vector<DeltaRow>& rows);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricSet& m);

}  // namespace iotad
