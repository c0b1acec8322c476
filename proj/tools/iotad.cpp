// iotad: ingest, train, evaluate and score KDD Cup 99 intrusion detectors.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "iotad/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kDivergence = 3 };

int exit_code_for(iotad::ErrorCode code) {
  using iotad::ErrorCode;
  switch (code) {
    case ErrorCode::kDivergence: return kDivergence;
    case ErrorCode::kUnknownConfigKey:
    case ErrorCode::kInvalidArgument: return kUsage;
    default: return kData;
  }
}

struct Options {
  std::optional<std::string> data;
  std::optional<std::string> model;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config;
  std::optional<std::string> out;
  std::optional<double> subsample;
  bool desk_scale = false;
  bool lenient = false;
  std::optional<double> threshold_percentile;
  std::optional<double> lambda;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, "KDD file (plain or .gz)");
  cmd->add_option("--config", o.config, "key = value settings file");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--lenient-categories", o.lenient, "encode unseen categorical values instead of failing");
  cmd->add_option("--set", o.settings, "override any config key: --set key=value (repeatable)");
}

void add_scoring(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.model, "bundle directory")->required();
  cmd->add_option("--threshold-percentile", o.threshold_percentile, "refit the ae/gan threshold at this percentile")
      ->check(CLI::Range(0.0, 100.0));
  cmd->add_option("--lambda", o.lambda, "gan score weight in [0, 1]")->check(CLI::Range(0.0, 1.0));
}

// Precedence: command line over --config file over built-in defaults.
iotad::RunConfig resolve(const Options& o) {
  iotad::RunConfig c;
  if (o.config) c.apply_file(*o.config);
  if (o.desk_scale) c.apply_desk_scale();
  for (const auto& kv : o.settings) c.apply_text(kv, "--set");
  if (o.data) c.set("data", *o.data);
  if (o.out) c.set("out", *o.out);
  if (o.seed) c.set("seed", std::to_string(*o.seed));
  if (o.subsample) c.set("subsample", CLI::detail::to_string(*o.subsample));
  if (o.lenient) c.set("preprocess.lenient_categories", "true");
  if (o.threshold_percentile) {
    c.set("ae.threshold_percentile", CLI::detail::to_string(*o.threshold_percentile));
    c.set("gan.threshold_percentile", CLI::detail::to_string(*o.threshold_percentile));
  }
  if (o.lambda) c.set("gan.lambda", CLI::detail::to_string(*o.lambda));
  return c;
}

iotad::ScoringOverrides overrides(const Options& o) { return {o.threshold_percentile, o.lambda}; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intrusion detection on KDD Cup 99 traffic records"};
  app.require_subcommand(1);
  Options o;

  auto* ingest = app.add_subcommand("ingest", "parse a dataset and report counts and checksum");
  add_common(ingest, o);

  auto* train = app.add_subcommand("train", "train a model and write a bundle to <out>/bundle");
  add_common(train, o);
  train->add_option("--model", o.model, "ae, gan, knn, rf, cnnlstm or ensemble");
  train->add_option("--seed", o.seed, "run seed");
  train->add_option("--subsample", o.subsample, "stratified fraction of records kept before the split")
      ->check(CLI::Range(0.0, 1.0));
  train->add_flag("--desk-scale", o.desk_scale, "subsample 0.05 and cap KNN references at 20000");
  train->add_option("--threshold-percentile", o.threshold_percentile, "ae/gan threshold percentile")
      ->check(CLI::Range(0.0, 100.0));
  train->add_option("--lambda", o.lambda, "gan score weight in [0, 1]")->check(CLI::Range(0.0, 1.0));

  auto* evaluate = app.add_subcommand("evaluate", "score the held-out split and compare with reference numbers");
  add_common(evaluate, o);
  add_scoring(evaluate, o);

  auto* score = app.add_subcommand("score", "score raw records, one CSV line per record");
  add_common(score, o);
  add_scoring(score, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (train->parsed() && o.model) {
      iotad::parse_model_kind(*o.model);
    }
    auto config = resolve(o);
    if (train->parsed() && o.model) config.set("model", *o.model);
    config.model();

    if (ingest->parsed()) {
      iotad::run_ingest(config, std::cout);
    } else if (train->parsed()) {
      iotad::run_train(config, std::cout);
    } else if (evaluate->parsed()) {
      iotad::run_evaluate(config, *o.model, std::cout, overrides(o));
    } else {
      std::ofstream file;
      std::ostream* sink = &std::cout;
      if (o.out) {
        std::filesystem::create_directories(*o.out);
        std::ofstream(std::filesystem::path(*o.out) / "config.resolved") << config.resolved_text();
        file.open(std::filesystem::path(*o.out) / "scores.csv");
        if (!file) throw iotad::Error(iotad::ErrorCode::kIo, "cannot write scores.csv under " + *o.out);
        sink = &file;
      }
      const auto failures = iotad::run_score(config, *o.model, *sink, std::cerr, overrides(o));
      if (failures > 0) return kData;
    }
  } catch (const iotad::Error& e) {
    std::cerr << "error [" << iotad::to_string(e.code()) << "]: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error [io]: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
