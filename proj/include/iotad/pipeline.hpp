#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "iotad/bundle.hpp"
#include "iotad/config.hpp"
#include "iotad/eval.hpp"
#include "iotad/kdd.hpp"

namespace iotad {

/// Train/test partition of a loaded dataset under the run settings:
/// optional stratified subsample first, then the stratified split.
struct PreparedSplit {
  kdd::Dataset train;
  kdd::Dataset test;
  std::size_t source_records = 0;
};

/// Uses seed, subsample and split.train_fraction from `settings`, which is
/// either a RunConfig's values or a bundle's training_config.
PreparedSplit prepare_split(const kdd::Dataset& full, const RunConfig& settings);

/// Record counts per category plus the checksum.
nlohmann::json dataset_summary(const kdd::Dataset& dataset);

struct TrainOutcome {
  TrainedModel model;
  TrainingLog log;
};

/// Fits preprocessing on `train` and trains the configured model.
TrainOutcome train_model(const kdd::Dataset& train, const RunConfig& config);

nlohmann::json training_log_to_json(const TrainingLog& log);

struct Evaluation {
  EvalReport report;
  /// Console text: metric tables, reference deltas, diagnostics.
  std::string text;
};

/// Scores `test` with `model` and compares against the reference numbers
/// for the model's family within `tolerance`.
Evaluation evaluate_model(const TrainedModel& model, const kdd::Dataset& test, double tolerance);

/// One line per input record of the score command.
struct ScoreLine {
  std::size_t index = 0;
  bool ok = true;
  std::string predicted;
  /// Anomaly score for ae/gan; empty for classifiers.
  std::optional<double> score;
  bool anomalous = false;
  std::string error;

  std::string to_csv() const;
};

/// Parses and scores raw 42-field lines. Bad records produce error lines
/// rather than aborting the batch.
std::vector<ScoreLine> score_records(const TrainedModel& model, const std::vector<std::string>& lines);

/// RunConfig rebuilt from a bundle's training_config.
RunConfig training_settings(const TrainedModel& model);

/// Post-training adjustments for anomaly detectors. Either one refits the
/// threshold on the bundle's stored Normal training scores.
struct ScoringOverrides {
  std::optional<double> threshold_percentile;
  std::optional<double> lambda;

  bool any() const { return threshold_percentile || lambda; }
};

/// Applies `overrides` to an ae or gan model; ignored for classifiers.
void apply_overrides(TrainedModel& model, const ScoringOverrides& overrides);

// Command drivers used by the CLI and the Python module. They write their
// artifacts under `out` and progress text to `log`.
nlohmann::json run_ingest(const RunConfig& config, std::ostream& log);
nlohmann::json run_train(const RunConfig& config, std::ostream& log);
nlohmann::json run_evaluate(const RunConfig& config, const std::filesystem::path& bundle, std::ostream& log,
                            const ScoringOverrides& overrides = {});
/// Returns the number of records that failed to score.
std::size_t run_score(const RunConfig& config, const std::filesystem::path& bundle, std::ostream& out,
                      std::ostream& log, const ScoringOverrides& overrides = {});

}  // namespace iotad
