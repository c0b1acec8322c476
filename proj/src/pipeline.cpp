#include "iotad/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "iotad/rng.hpp"

namespace iotad {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

double accuracy_of(std::span<const int> truth, std::span<const int> pred) {
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += truth[i] == pred[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// Anomaly detectors: threshold diagnostics on the labelled training rows.
// Per-row scores of the Normal training rows, kept so that threshold and
// lambda overrides can be applied to a saved bundle.
void record_threshold_basis(TrainedModel& model, const FeatureMatrix& train) {
  const auto normal = rows_with_label(train, 0);
  auto& basis = model.threshold_basis;
  if (model.kind == ModelKind::kAe) {
    for (double v : model.ae->score(normal)) basis.reconstruction.push_back(static_cast<float>(v));
    return;
  }
  const auto& gan = *model.gan;
  if (gan.encoder()) {
    for (double v : gan.reconstruction_error(normal)) basis.reconstruction.push_back(static_cast<float>(v));
  }
  for (double d : gan.discriminate(normal)) basis.discriminator.push_back(static_cast<float>(discriminator_score(d)));
}

void record_tuning(TrainedModel& model, const FeatureMatrix& train) {
  record_threshold_basis(model, train);
  const auto* scorer = model.scorer();
  const auto scores = scorer->score(train);
  const auto binary = to_binary_labels(train.labels);
  const auto tuned = tune_threshold(scores, binary);
  model.metadata["tuned_threshold"] = tuned.threshold;
  model.metadata["tuned_percentile"] = tuned.percentile;
  model.metadata["tuned_train_accuracy"] = tuned.accuracy;
}

std::string reference_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kAe: return "ae";
    case ModelKind::kGan: return "gan";
    case ModelKind::kKnn: return "knn";
    case ModelKind::kCnnLstm: return "cnnlstm";
    case ModelKind::kEnsemble: return "ensemble";
    case ModelKind::kRf: return "rf";
  }
  return "";
}

json delta_rows_json(const std::vector<DeltaRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json j = {{"metric", r.metric}, {"ours", r.ours}, {"status", r.status}};
    j["reference"] = r.reference ? json(*r.reference) : json(nullptr);
    j["delta"] = r.delta ? json(*r.delta) : json(nullptr);
    out.push_back(j);
  }
  return out;
}

}  // namespace

PreparedSplit prepare_split(const kdd::Dataset& full, const RunConfig& settings) {
  PreparedSplit out;
  out.source_records = full.size();
  const auto seed = settings.seed();
  const double fraction = settings.get_double("subsample");
  const kdd::Dataset* base = &full;
  kdd::Dataset reduced;
  if (fraction < 1.0) {
    reduced = kdd::stratified_subsample(full, fraction, derive_seed(seed, 2));
    base = &reduced;
  } else if (fraction != 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "subsample must lie in (0, 1]", "subsample");
  }
  auto [train, test] = kdd::split_train_test(
      *base, kdd::SplitSpec(settings.get_double("split.train_fraction"), derive_seed(seed, 1)));
  out.train = std::move(train);
  out.test = std::move(test);
  return out;
}

json dataset_summary(const kdd::Dataset& dataset) {
  json j;
  j["records"] = dataset.size();
  j["checksum"] = dataset.checksum;
  const auto counts = dataset.category_counts();
  for (std::size_t c = 0; c < counts.size(); ++c) {
    j["categories"][std::string(kdd::category_name(kdd::category_from_code(static_cast<int>(c))))] = counts[c];
  }
  return j;
}

TrainOutcome train_model(const kdd::Dataset& train, const RunConfig& config) {
  TrainOutcome out;
  auto& model = out.model;
  model.kind = config.model();
  model.preprocessor = Preprocessor::fit(train, config.encoder_kind(), config.l2_normalize(),
                                         config.get_bool("preprocess.lenient_categories"));
  model.config_hash = config.hash();
  model.dataset_checksum = train.checksum;
  for (const auto& [key, value] : config.values()) {
    if (key != "data" && key != "out") model.training_config[key] = value;
  }
  const auto matrix = model.preprocessor.apply(train);
  switch (model.kind) {
    case ModelKind::kAe:
      model.ae = std::make_shared<AeModel>(AeModel::train(matrix, config.ae_config(), &out.log));
      record_tuning(model, matrix);
      break;
    case ModelKind::kGan:
      model.gan = std::make_shared<GanModel>(GanModel::train(matrix, config.gan_config(), &out.log));
      record_tuning(model, matrix);
      break;
    case ModelKind::kKnn:
      model.knn = std::make_shared<KnnModel>(KnnModel::fit(matrix, config.knn_config()));
      out.log.summary["knn_reference_rows"] = static_cast<double>(model.knn->references().rows);
      out.log.summary["knn_source_rows"] = static_cast<double>(model.knn->source_rows());
      break;
    case ModelKind::kRf:
      model.forest = std::make_shared<ForestModel>(ForestModel::fit(matrix, config.forest_config()));
      break;
    case ModelKind::kCnnLstm:
      model.cnn_lstm = std::make_shared<CnnLstmModel>(CnnLstmModel::train(matrix, config.cnn_lstm_config(), &out.log));
      break;
    case ModelKind::kEnsemble:
      model.ensemble = std::make_shared<EnsembleModel>(EnsembleModel::train(matrix, config.ensemble_config(), &out.log));
      break;
  }
  model.metadata["train_rows"] = train.size();
  return out;
}

json training_log_to_json(const TrainingLog& log) {
  json j;
  j["epochs"] = json::array();
  for (const auto& e : log.epochs) j["epochs"].push_back({{"epoch", e.epoch}, {"metrics", e.metrics}});
  j["summary"] = log.summary;
  j["notes"] = log.notes;
  return j;
}

Evaluation evaluate_model(const TrainedModel& model, const kdd::Dataset& test, double tolerance) {
  const auto matrix = model.preprocessor.apply(test);
  Evaluation ev;
  std::ostringstream text;
  auto& meta = ev.report.metadata;
  meta["model"] = model_kind_name(model.kind);
  meta["test_rows"] = matrix.rows;

  if (model.is_anomaly_detector()) {
    const auto* scorer = model.scorer();
    const auto scores = scorer->score(matrix);
    const auto truth = to_binary_labels(matrix.labels);
    const auto pred = classify_scores(scores, scorer->threshold());
    ev.report = EvalReport::from_binary(confusion(truth, pred, 2));
    ev.report.metadata = meta;
    double sum[2] = {0, 0};
    std::size_t n[2] = {0, 0};
    for (std::size_t i = 0; i < scores.size(); ++i) {
      sum[truth[i]] += scores[i];
      ++n[truth[i]];
    }
    const double mean_normal = n[0] ? sum[0] / static_cast<double>(n[0]) : 0.0;
    const double mean_attack = n[1] ? sum[1] / static_cast<double>(n[1]) : 0.0;
    ev.report.metadata["threshold"] = scorer->threshold();
    ev.report.metadata["mean_score_normal"] = mean_normal;
    ev.report.metadata["mean_score_attack"] = mean_attack;
    text << "threshold " << scorer->threshold() << "  mean score normal " << fixed(mean_normal, 6)
         << "  attack " << fixed(mean_attack, 6) << "\n";
    if (model.metadata.contains("tuned_threshold")) {
      const double tuned = model.metadata["tuned_threshold"].get<double>();
      const double acc = accuracy_of(truth, classify_scores(scores, tuned));
      ev.report.metadata["tuned_threshold"] = tuned;
      ev.report.metadata["tuned_threshold_test_accuracy"] = acc;
      text << "diagnostic: train-tuned threshold " << tuned << " (p"
           << model.metadata["tuned_percentile"].get<double>() << ") gives test accuracy " << fixed(acc) << "\n";
    }
  } else {
    std::vector<int> pred;
    if (model.kind == ModelKind::kEnsemble) {
      const auto detailed = model.ensemble->predict_detailed(matrix);
      pred = detailed.final;
      const double a1 = accuracy_of(matrix.labels, detailed.layer1);
      const double a2 = accuracy_of(matrix.labels, detailed.layer2);
      meta["layer1_accuracy"] = a1;
      meta["layer2_accuracy"] = a2;
      meta["routing"] = {{"queries", detailed.stats.queries},
                         {"agreements", detailed.stats.agreements},
                         {"layer3_invocations", detailed.stats.layer3_invocations},
                         {"fallback_answers", detailed.stats.fallback_answers}};
      const auto& knn = *std::dynamic_pointer_cast<const KnnModel>(model.ensemble->layer1_ptr());
      meta["knn_reference_rows"] = knn.references().rows;
      meta["knn_source_rows"] = knn.source_rows();
      text << "layer 1 (knn) accuracy " << fixed(a1) << "  layer 2 (cnn+lstm) accuracy " << fixed(a2) << "\n"
           << "routing: " << detailed.stats.agreements << " agreements, " << detailed.stats.layer3_invocations
           << " sent to layer 3, " << detailed.stats.fallback_answers << " answered by fallback\n"
           << "knn reference rows " << knn.references().rows << " of " << knn.source_rows() << "\n";
      const auto ref1 = reference_metrics_for("knn"), ref2 = reference_metrics_for("cnnlstm");
      meta["layer_reference"] = {{"knn", *ref1.accuracy}, {"cnnlstm", *ref2.accuracy}};
    } else if (model.kind == ModelKind::kKnn) {
      pred = model.knn->predict(matrix);
    } else if (model.kind == ModelKind::kRf) {
      pred = model.forest->predict(matrix);
    } else {
      pred = model.cnn_lstm->predict(matrix);
    }
    ev.report = EvalReport::from_multiclass(confusion(matrix.labels, pred, kdd::kCategoryCount));
    ev.report.metadata.update(meta);
  }

  text << ev.report.summary_table();
  const auto reference = reference_metrics_for(reference_name(model.kind));
  json deltas = json::object();
  for (const auto& [mode, metrics] : ev.report.modes) {
    const auto rows = compare_to_reference(metrics, reference, tolerance);
    text << format_delta_table(mode + " vs reference " + reference_name(model.kind), rows);
    deltas[mode] = delta_rows_json(rows);
  }
  ev.report.metadata["reference_deltas"] = deltas;
  ev.report.metadata["tolerance"] = tolerance;
  ev.text = text.str();
  return ev;
}

std::string ScoreLine::to_csv() const {
  if (!ok) return std::to_string(index) + ",error,," + error;
  std::string s = std::to_string(index) + "," + predicted + ",";
  if (score) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", *score);
    s += buf;
  }
  return s + "," + (anomalous ? "anomalous" : "normal");
}

std::vector<ScoreLine> score_records(const TrainedModel& model, const std::vector<std::string>& lines) {
  std::vector<ScoreLine> out(lines.size());
  kdd::Dataset good;
  std::vector<std::size_t> good_positions;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    out[i].index = i;
    std::string line = lines[i];
    // Unlabelled traffic carries 41 fields; give it a placeholder label.
    if (std::count(line.begin(), line.end(), ',') == 40) line += ",normal.";
    try {
      auto record = kdd::parse_record(line, i);
      kdd::Dataset one;
      one.records.push_back(record);
      model.preprocessor.apply(one);
      good.records.push_back(std::move(record));
      good_positions.push_back(i);
    } catch (const Error& e) {
      out[i].ok = false;
      out[i].error = e.what();
    }
  }
  if (good.empty()) return out;
  const auto matrix = model.preprocessor.apply(good);
  if (model.is_anomaly_detector()) {
    const auto scores = model.scorer()->score(matrix);
    for (std::size_t k = 0; k < scores.size(); ++k) {
      auto& line = out[good_positions[k]];
      line.score = scores[k];
      line.anomalous = scores[k] > model.scorer()->threshold();
      line.predicted = line.anomalous ? "attack" : "normal";
    }
    return out;
  }
  std::vector<int> pred;
  switch (model.kind) {
    case ModelKind::kKnn: pred = model.knn->predict(matrix); break;
    case ModelKind::kRf: pred = model.forest->predict(matrix); break;
    case ModelKind::kCnnLstm: pred = model.cnn_lstm->predict(matrix); break;
    default: pred = model.ensemble->predict(matrix); break;
  }
  for (std::size_t k = 0; k < pred.size(); ++k) {
    auto& line = out[good_positions[k]];
    line.predicted = std::string(kdd::category_name(kdd::category_from_code(pred[k])));
    line.anomalous = pred[k] != 0;
  }
  return out;
}

RunConfig training_settings(const TrainedModel& model) {
  RunConfig settings;
  for (const auto& [key, value] : model.training_config.items()) {
    try {
      settings.set(key, value.get<std::string>());
    } catch (const json::exception&) {
      throw Error(ErrorCode::kBundleFormat, "training_config entry '" + key + "' is not a string");
    } catch (const Error& e) {
      throw Error(ErrorCode::kBundleFormat, std::string("bundle training_config: ") + e.what());
    }
  }
  return settings;
}

void apply_overrides(TrainedModel& model, const ScoringOverrides& overrides) {
  if (!overrides.any() || !model.is_anomaly_detector()) return;
  if (overrides.lambda && model.kind != ModelKind::kGan) {
    throw Error(ErrorCode::kInvalidArgument, "--lambda applies to gan models only");
  }
  const auto& basis = model.threshold_basis;
  if (basis.reconstruction.empty() && basis.discriminator.empty()) {
    throw Error(ErrorCode::kBundleFormat, "bundle has no stored training scores to refit the threshold");
  }
  std::vector<double> scores;
  double p = 0.0;
  if (model.kind == ModelKind::kAe) {
    scores.assign(basis.reconstruction.begin(), basis.reconstruction.end());
    p = overrides.threshold_percentile.value_or(model.ae->percentile());
  } else {
    auto& gan = *model.gan;
    if (overrides.lambda) gan.set_lambda(*overrides.lambda);
    const double lambda = gan.encoder() ? gan.lambda() : 0.0;
    scores.resize(basis.discriminator.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const double rec = gan.encoder() ? static_cast<double>(basis.reconstruction[i]) : 0.0;
      scores[i] = lambda * rec + (1.0 - lambda) * static_cast<double>(basis.discriminator[i]);
    }
    p = overrides.threshold_percentile.value_or(gan.percentile());
  }
  const double theta = nearest_rank_percentile(std::move(scores), p);
  if (model.kind == ModelKind::kAe) {
    model.ae = std::make_shared<AeModel>(model.ae->network(), theta, p);
  } else {
    const auto& g = *model.gan;
    model.gan = std::make_shared<GanModel>(g.generator(), g.discriminator(), g.encoder(), g.lambda(), theta, p,
                                           g.latent_dim());
  }
  model.metadata.erase("tuned_threshold");
}

json run_ingest(const RunConfig& config, std::ostream& log) {
  const auto start = Clock::now();
  const auto dataset = kdd::load_dataset(config.get("data"));
  const double elapsed = seconds_since(start);
  auto summary = dataset_summary(dataset);
  log << "loaded " << dataset.size() << " records from " << config.get("data") << " in " << fixed(elapsed, 2)
      << " s\n";
  for (const auto& [name, count] : summary["categories"].items()) log << "  " << name << " " << count << "\n";
  log << "sha256 " << dataset.checksum << "\n";
  const fs::path out = config.get("out");
  write_text(out / "config.resolved", config.resolved_text());
  write_text(out / "ingest.json", summary.dump(2) + "\n");
  summary["seconds"] = elapsed;
  return summary;
}

json run_train(const RunConfig& config, std::ostream& log) {
  const fs::path out = config.get("out");
  write_text(out / "config.resolved", config.resolved_text());
  const auto dataset = kdd::load_dataset(config.get("data"));
  const auto split = prepare_split(dataset, config);
  log << "data " << dataset.size() << " records, train " << split.train.size() << ", test " << split.test.size()
      << "\n";
  const auto start = Clock::now();
  auto outcome = train_model(split.train, config);
  const double elapsed = seconds_since(start);
  save_bundle(out / "bundle", outcome.model);
  write_text(out / "training_log.json", training_log_to_json(outcome.log).dump(2) + "\n");
  for (const auto& e : outcome.log.epochs) {
    log << "epoch " << e.epoch;
    for (const auto& [k, v] : e.metrics) log << "  " << k << " " << v;
    log << "\n";
  }
  for (const auto& [k, v] : outcome.log.summary) log << k << " " << v << "\n";
  for (const auto& note : outcome.log.notes) log << "note: " << note << "\n";
  log << "trained " << model_kind_name(outcome.model.kind) << " in " << fixed(elapsed, 1) << " s; bundle at "
      << (out / "bundle").string() << "\n";
  json summary = {{"bundle", (out / "bundle").string()},
                  {"model", model_kind_name(outcome.model.kind)},
                  {"train_rows", split.train.size()},
                  {"test_rows", split.test.size()},
                  {"seconds", elapsed}};
  return summary;
}

json run_evaluate(const RunConfig& config, const fs::path& bundle, std::ostream& log,
                  const ScoringOverrides& overrides) {
  auto model = load_bundle(bundle);
  if (config.get_bool("preprocess.lenient_categories")) model.preprocessor.encoder.set_lenient(true);
  const auto dataset = kdd::load_dataset(config.get("data"));
  const bool mismatch = dataset.checksum != model.dataset_checksum;
  if (mismatch) {
    log << "warning: dataset checksum " << dataset.checksum << " differs from the training data checksum "
        << model.dataset_checksum << "; the test split may overlap the training rows\n";
    if (!config.get_bool("evaluate.allow_checksum_mismatch")) {
      throw Error(ErrorCode::kSchemaMismatch,
                  "dataset does not match the bundle; set evaluate.allow_checksum_mismatch = true to proceed");
    }
  }
  const auto split = prepare_split(dataset, training_settings(model));
  apply_overrides(model, overrides);
  auto ev = evaluate_model(model, split.test, config.get_double("evaluate.tolerance"));
  ev.report.metadata["dataset_checksum"] = dataset.checksum;
  ev.report.metadata["checksum_matches_training"] = !mismatch;
  log << ev.text;
  const fs::path out = config.get("out");
  write_text(out / "config.resolved", config.resolved_text());
  const auto j = ev.report.to_json();
  write_text(out / "report.json", j.dump(2) + "\n");
  return j;
}

std::size_t run_score(const RunConfig& config, const fs::path& bundle, std::ostream& out, std::ostream& log,
                      const ScoringOverrides& overrides) {
  auto model = load_bundle(bundle);
  if (config.get_bool("preprocess.lenient_categories")) model.preprocessor.encoder.set_lenient(true);
  apply_overrides(model, overrides);
  std::ifstream in(config.get("data"));
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + config.get("data"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
  }
  const auto results = score_records(model, lines);
  std::size_t failures = 0;
  out << "index,predicted,score,verdict\n";
  for (const auto& r : results) {
    out << r.to_csv() << "\n";
    failures += !r.ok;
  }
  log << "scored " << results.size() - failures << " of " << results.size() << " records\n";
  return failures;
}

}  // namespace iotad
