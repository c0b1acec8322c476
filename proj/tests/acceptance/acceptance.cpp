// Acceptance suite: one PASS/FAIL line per headline criterion.
//
//   iotad-acceptance [--group offline|dataset|all] [--data PATH]
//
// The offline group needs nothing but the build. The dataset group needs the
// public KDD Cup 99 10% file (KDD_DATA_PATH, --data, or data/ in the source
// tree); without it those criteria are reported as FAIL and the process
// exits with kSkipped so ctest can mark the group as not run.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>

#include "gradient_suite.hpp"
#include "iotad/detectors/knn.hpp"
#include "iotad/ensemble.hpp"
#include "iotad/nn/layers.hpp"
#include "iotad/pipeline.hpp"
#include "iotad/rng.hpp"
#include "synthetic_kdd.hpp"

using namespace iotad;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- tolerances
constexpr double kGradientTolerance = 1e-4;
constexpr std::size_t kGradientConfigs = 20;
constexpr double kGradientSeconds = 120.0;
constexpr std::size_t kKnnQueries = 1000;
constexpr std::size_t kKnnReferences = 5000;
constexpr std::size_t kConvCases = 200;
constexpr double kConvTolerance = 1e-6;
constexpr std::size_t kMetricMatrices = 1000;
constexpr double kMetricTolerance = 1e-12;
constexpr std::size_t kThresholdGrid = 50;
constexpr double kIngestSeconds = 15.0;
constexpr double kEnsembleAccuracy = 0.955;
constexpr double kEnsembleSeconds = 30.0 * 60.0;
constexpr double kAeAccuracy = 0.94;
constexpr double kGanTunedAccuracy = 0.80;
constexpr std::size_t kGanEpochs = 10;
constexpr int kSkipped = 77;

const std::array<std::size_t, 5> kKddCategoryTotals = {97278, 391458, 4107, 1126, 52};
constexpr std::size_t kKddRecords = 494021;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << ": " << o.detail << std::endl;
  if (!o.pass) ++g_failures;
}

void run(const std::string& name, const std::function<Outcome()>& fn) {
  try {
    report(name, fn());
  } catch (const std::exception& e) {
    report(name, {false, std::string("exception: ") + e.what()});
  }
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("iotad_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// ------------------------------------------------------------ offline group

Outcome gradient_suite() {
  const auto start = Clock::now();
  const auto entries = testkit::run_gradient_suite(kGradientConfigs, 2024);
  const double secs = seconds_since(start);
  const std::vector<std::string> required = {"dense", "conv1d", "maxpool1d", "lstm", "dropout", "softmax+sparse_ce",
                                             "bce", "mse"};
  Outcome o{true, ""};
  double worst = 0.0;
  std::string worst_name;
  for (const auto& r : required) {
    auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.name.rfind(r, 0) == 0; });
    if (it == entries.end()) {
      o.pass = false;
      o.detail += "missing " + r + "; ";
    }
  }
  for (const auto& e : entries) {
    if (e.configurations < kGradientConfigs || !(e.max_relative_error < kGradientTolerance)) o.pass = false;
    if (e.max_relative_error > worst) worst = e.max_relative_error, worst_name = e.name;
  }
  if (secs >= kGradientSeconds) o.pass = false;
  o.detail += std::to_string(entries.size()) + " checks x " + std::to_string(kGradientConfigs) +
              " configs, worst rel err " + fmt("%.2e", worst) + " (" + worst_name + "), " + fmt("%.1f", secs) + " s";
  return o;
}

// Full sort of every reference by (distance, index), then a majority vote
// with the lowest class winning ties.
int knn_oracle(const FeatureMatrix& refs, std::span<const float> q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d(refs.rows);
  for (std::size_t i = 0; i < refs.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < refs.cols; ++j) {
      const double diff = static_cast<double>(refs.at(i, j)) - static_cast<double>(q[j]);
      s += diff * diff;
    }
    d[i] = {s, i};
  }
  std::sort(d.begin(), d.end());
  std::array<int, 5> votes{};
  for (std::size_t i = 0; i < k; ++i) ++votes[refs.labels[d[i].second]];
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

Outcome knn_oracle_equivalence() {
  Rng rng(71);
  const std::size_t cols = 6;
  FeatureMatrix refs(kKnnReferences, cols);
  for (std::size_t i = 0; i < refs.rows; ++i) {
    refs.labels[i] = static_cast<int>(rng.uniform_index(5));
    refs.row_ids[i] = i;
    // A coarse grid for half the rows forces exact distance ties.
    const bool coarse = i % 2 == 0;
    for (std::size_t j = 0; j < cols; ++j) {
      refs.at(i, j) = coarse ? static_cast<float>(rng.uniform_index(4)) / 4.0f : static_cast<float>(rng.uniform());
    }
  }
  FeatureMatrix queries(kKnnQueries, cols);
  for (std::size_t i = 0; i < queries.rows; ++i) {
    queries.row_ids[i] = i;
    const bool coarse = i % 2 == 0;
    for (std::size_t j = 0; j < cols; ++j) {
      queries.at(i, j) = coarse ? static_cast<float>(rng.uniform_index(4)) / 4.0f : static_cast<float>(rng.uniform());
    }
  }
  std::size_t mismatches = 0;
  for (const std::size_t k : {1, 5}) {
    const KnnModel model(refs, k);
    const auto pred = model.predict(queries);
    for (std::size_t i = 0; i < queries.rows; ++i) mismatches += pred[i] != knn_oracle(refs, queries.row(i), k);
  }
  return {mismatches == 0, std::to_string(kKnnQueries) + " queries x " + std::to_string(kKnnReferences) +
                               " refs, k in {1,5}: " + std::to_string(mismatches) + " mismatches"};
}

Outcome conv_oracle_equivalence() {
  Rng rng(72);
  double worst = 0.0;
  for (std::size_t c = 0; c < kConvCases; ++c) {
    const std::size_t n = 1 + rng.uniform_index(3), len = 3 + rng.uniform_index(12),
                      in = 1 + rng.uniform_index(3), filters = 1 + rng.uniform_index(4),
                      kw = 1 + rng.uniform_index(std::min<std::size_t>(len, 5));
    nn::Conv1d<double> conv(in, filters, kw);
    for (auto& v : conv.kernel().values()) v = rng.uniform(-1, 1);
    for (auto& v : conv.bias().values()) v = rng.uniform(-1, 1);
    nn::Tensor<double> x({n, len, in});
    for (auto& v : x.values()) v = rng.uniform(-1, 1);
    const auto y = conv.forward(x, nn::Mode::kInfer);
    const std::size_t out_len = len - kw + 1;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t t = 0; t < out_len; ++t)
        for (std::size_t f = 0; f < filters; ++f) {
          double s = conv.bias()[f];
          for (std::size_t k = 0; k < kw; ++k)
            for (std::size_t ch = 0; ch < in; ++ch) s += x.at(b, t + k, ch) * conv.kernel().at(k, ch, f);
          worst = std::max(worst, std::fabs(s - y.at(b, t, f)));
        }
  }
  return {worst <= kConvTolerance, std::to_string(kConvCases) + " random cases, max abs diff " + fmt("%.2e", worst)};
}

class RuleStub final : public Classifier {
 public:
  RuleStub(std::size_t width, std::function<int(std::span<const float>)> rule) : width_(width), rule_(std::move(rule)) {}
  std::vector<int> predict(const FeatureMatrix& q) const override {
    std::vector<int> out(q.rows);
    for (std::size_t i = 0; i < q.rows; ++i) out[i] = rule_(q.row(i));
    return out;
  }
  std::size_t input_width() const override { return width_; }

 private:
  std::size_t width_;
  std::function<int(std::span<const float>)> rule_;
};

Outcome routing_equivalence() {
  Rng rng(73);
  std::size_t rows = 0, mismatches = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t width = 3;
    // Random linear rules with different coefficients per layer.
    auto make_rule = [&] {
      std::array<float, 3> w{};
      for (auto& v : w) v = static_cast<float>(rng.uniform(0, 7));
      return [w](std::span<const float> x) {
        const float s = w[0] * x[0] + w[1] * x[1] + w[2] * x[2];
        return static_cast<int>(std::floor(s)) % 5;
      };
    };
    const auto r1 = make_rule(), r2 = make_rule(), r3 = make_rule();
    const bool with_layer3 = trial % 4 != 3;
    const EnsembleModel e(std::make_shared<RuleStub>(width, r1), std::make_shared<RuleStub>(width, r2),
                          with_layer3 ? std::make_shared<RuleStub>(width, r3) : nullptr, 1);
    FeatureMatrix q(500, width);
    for (auto& v : q.values) v = static_cast<float>(rng.uniform());
    const auto got = e.predict(q);
    for (std::size_t i = 0; i < q.rows; ++i) {
      const int a = r1(q.row(i)), b = r2(q.row(i));
      const int want = a == b ? a : (with_layer3 ? r3(q.row(i)) : b);
      mismatches += got[i] != want;
    }
    rows += q.rows;
  }
  return {mismatches == 0, std::to_string(rows) + " rows over 20 stub ensembles (5 without layer 3): " +
                               std::to_string(mismatches) + " mismatches"};
}

Outcome metric_identities() {
  Rng rng(74);
  std::size_t violations = 0;
  double worst = 0.0;
  auto check = [&](bool ok, double gap) {
    if (!ok) ++violations;
    worst = std::max(worst, gap);
  };
  for (std::size_t t = 0; t < kMetricMatrices; ++t) {
    const std::size_t n = 2 + rng.uniform_index(4);
    std::vector<std::int64_t> counts(n * n);
    for (auto& c : counts) c = rng.uniform() < 0.3 ? 0 : static_cast<std::int64_t>(rng.uniform_index(1000));
    counts[rng.uniform_index(counts.size())] += 1;
    const ConfusionMatrix cm(n, counts);
    const auto weighted = metrics(cm, Averaging::kWeighted);
    const double gap = std::fabs(weighted.recall - weighted.accuracy);
    check(gap <= kMetricTolerance, gap);
    const auto binary = metrics(cm, Averaging::kBinary);
    auto bounded = [&](double p, double r, double f) {
      const double lo = std::min(p, r), hi = std::max(p, r);
      const double excess = std::max({0.0, lo - f, f - hi});
      check(excess <= kMetricTolerance, excess);
    };
    bounded(binary.precision, binary.recall, binary.f1);
    for (std::size_t c = 0; c < n; ++c) {
      const auto m = class_metrics(cm, c);
      bounded(m.precision, m.recall, m.f1);
    }
    const auto b = cm.collapse_binary();
    check(b.total() == cm.total(), 0.0);
    check(b.at(0, 0) == cm.at(0, 0), 0.0);
  }
  return {violations == 0, std::to_string(kMetricMatrices) + " matrices, " + std::to_string(violations) +
                               " violations, worst gap " + fmt("%.1e", worst)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Byte comparison of every file below two directories.
bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files) {
  std::vector<fs::path> rel_a, rel_b;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) rel_a.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) rel_b.push_back(fs::relative(e.path(), b));
  std::sort(rel_a.begin(), rel_a.end());
  std::sort(rel_b.begin(), rel_b.end());
  if (rel_a != rel_b) return false;
  files = rel_a.size();
  for (const auto& r : rel_a)
    if (slurp(a / r) != slurp(b / r)) return false;
  return true;
}

Outcome determinism(const fs::path& data) {
  std::vector<fs::path> outs;
  for (int run = 0; run < 2; ++run) {
    RunConfig c;
    c.apply_desk_scale();
    c.set("model", "ensemble");
    c.set("data", data.string());
    c.set("preprocess.lenient_categories", "true");
    const auto out = scratch("determinism_" + std::to_string(run));
    c.set("out", out.string());
    std::ostringstream log;
    run_train(c, log);
    run_evaluate(c, out / "bundle", log);
    outs.push_back(out);
  }
  std::size_t files = 0;
  const bool bundles = same_tree(outs[0] / "bundle", outs[1] / "bundle", files);
  const bool reports = slurp(outs[0] / "report.json") == slurp(outs[1] / "report.json");
  const bool logs = slurp(outs[0] / "training_log.json") == slurp(outs[1] / "training_log.json");
  return {bundles && reports && logs, "desk-scale ensemble on synthetic KDD-format data: bundle (" +
                                          std::to_string(files) + " files) " + (bundles ? "identical" : "DIFFERS") +
                                          ", report " + (reports ? "identical" : "DIFFERS") + ", training log " +
                                          (logs ? "identical" : "DIFFERS")};
}

// Verdict counts through the scorer's own classify() at each grid threshold.
bool monotone_verdicts(AnomalyScorer& scorer, const FeatureMatrix& x, std::string& detail) {
  const auto scores = scorer.score(x);
  const auto grid = threshold_grid(scores, kThresholdGrid);
  std::size_t previous = x.rows + 1;
  bool ok = grid.size() == kThresholdGrid;
  std::vector<std::size_t> counts;
  for (double theta : grid) {
    scorer.set_threshold(theta);
    const auto verdicts = scorer.classify(x);
    const auto count = static_cast<std::size_t>(std::count(verdicts.begin(), verdicts.end(), 1));
    ok = ok && count <= previous;
    previous = count;
    counts.push_back(count);
  }
  detail += std::to_string(counts.front()) + " -> " + std::to_string(counts.back());
  return ok;
}

Outcome threshold_monotonicity(const kdd::Dataset& data) {
  const auto [train, test] = kdd::split_train_test(data, kdd::SplitSpec(0.8, 3));
  std::string detail;
  bool ok = true;
  for (const std::string kind : {"ae", "gan"}) {
    RunConfig c;
    c.set("model", kind);
    c.set("preprocess.lenient_categories", "true");
    c.set("gan.epochs", "2");
    c.set("gan.encoder_epochs", "2");
    auto model = train_model(train, c).model;
    const auto x = model.preprocessor.apply(test);
    AnomalyScorer& scorer = kind == "ae" ? static_cast<AnomalyScorer&>(*model.ae) : *model.gan;
    detail += kind + " anomalies over " + std::to_string(kThresholdGrid) + " thresholds ";
    ok = monotone_verdicts(scorer, x, detail) && ok;
    detail += "; ";
  }
  return {ok, detail};
}

// ------------------------------------------------------------ dataset group

Outcome ingestion(const fs::path& path, kdd::Dataset& out) {
  const auto start = Clock::now();
  out = kdd::load_dataset(path.string());
  const double secs = seconds_since(start);
  const auto counts = out.category_counts();
  bool ok = out.size() == kKddRecords && secs < kIngestSeconds;
  std::string detail = std::to_string(out.size()) + " records (";
  for (std::size_t c = 0; c < counts.size(); ++c) {
    ok = ok && counts[c] == kKddCategoryTotals[c];
    detail += std::string(kdd::category_name(kdd::category_from_code(static_cast<int>(c)))) + " " +
              std::to_string(counts[c]) + (c + 1 < counts.size() ? " / " : "");
  }
  return {ok, detail + "), " + fmt("%.2f", secs) + " s"};
}

RunConfig desk_config(const std::string& model, std::uint64_t seed) {
  RunConfig c;
  c.apply_desk_scale();
  c.set("model", model);
  c.set("seed", std::to_string(seed));
  return c;
}

double binary_accuracy(const Evaluation& ev) { return ev.report.modes.at("binary").accuracy; }

Outcome ensemble_headline(const kdd::Dataset& full) {
  const auto c = desk_config("ensemble", RunConfig().seed());
  const auto start = Clock::now();
  const auto split = prepare_split(full, c);
  const auto trained = train_model(split.train, c);
  const auto ev = evaluate_model(trained.model, split.test, c.get_double("evaluate.tolerance"));
  const double secs = seconds_since(start);
  const double acc = binary_accuracy(ev);
  return {acc >= kEnsembleAccuracy && secs < kEnsembleSeconds,
          "binary accuracy " + fmt("%.4f", acc) + " on " + std::to_string(split.test.size()) + " test rows (need >= " +
              fmt("%.3f", kEnsembleAccuracy) + "), " + fmt("%.0f", secs) + " s"};
}

Outcome autoencoder_headline(const kdd::Dataset& full) {
  const auto c = desk_config("ae", RunConfig().seed());
  const auto split = prepare_split(full, c);
  const auto trained = train_model(split.train, c);
  const auto ev = evaluate_model(trained.model, split.test, c.get_double("evaluate.tolerance"));
  const double acc = binary_accuracy(ev);
  return {acc >= kAeAccuracy, "binary accuracy " + fmt("%.4f", acc) + " at p" +
                                  fmt("%.0f", trained.model.ae->percentile()) + " threshold (need >= " +
                                  fmt("%.2f", kAeAccuracy) + ")"};
}

Outcome gan_property(const kdd::Dataset& full) {
  const std::uint64_t base = RunConfig().seed();
  bool finite = true, epochs_ok = true;
  bool means_ok = false;
  double best = 0.0, mean_normal = 0.0, mean_attack = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto c = desk_config("gan", base + s);
    const auto split = prepare_split(full, c);
    const auto trained = train_model(split.train, c);
    std::size_t adversarial_epochs = 0;
    for (const auto& e : trained.log.epochs) {
      if (!e.metrics.count("d_loss")) continue;
      ++adversarial_epochs;
      finite = finite && std::isfinite(e.metrics.at("d_loss")) && std::isfinite(e.metrics.at("g_loss"));
    }
    epochs_ok = epochs_ok && adversarial_epochs == kGanEpochs;
    const auto ev = evaluate_model(trained.model, split.test, c.get_double("evaluate.tolerance"));
    const auto& meta = ev.report.metadata;
    if (s == 0) {
      // The mean-score property is judged on the default-seed run.
      mean_normal = meta.at("mean_score_normal").get<double>();
      mean_attack = meta.at("mean_score_attack").get<double>();
      means_ok = mean_attack > mean_normal;
    }
    best = std::max(best, meta.at("tuned_threshold_test_accuracy").get<double>());
  }
  return {finite && epochs_ok && means_ok && best >= kGanTunedAccuracy,
          std::string("10 epochs ") + (epochs_ok ? "completed" : "NOT completed") + ", losses " +
              (finite ? "finite" : "NOT finite") + ", mean score attack " + fmt("%.4f", mean_attack) + " vs normal " +
              fmt("%.4f", mean_normal) + ", best-of-3 tuned accuracy " + fmt("%.4f", best) + " (need >= " +
              fmt("%.2f", kGanTunedAccuracy) + ")"};
}

fs::path find_dataset(const std::string& flag) {
  std::vector<fs::path> candidates;
  if (!flag.empty()) candidates.emplace_back(flag);
  if (const char* env = std::getenv("KDD_DATA_PATH")) candidates.emplace_back(env);
  candidates.emplace_back(fs::path(IOTAD_SOURCE_DIR) / "data" / "kddcup.data_10_percent.gz");
  candidates.emplace_back(fs::path(IOTAD_SOURCE_DIR) / "data" / "kddcup.data_10_percent");
  for (const auto& c : candidates)
    if (fs::exists(c)) return c;
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string group = "all";
  std::string data_flag;
  app.add_option("--group", group, "offline, dataset or all")->check(CLI::IsMember({"offline", "dataset", "all"}));
  app.add_option("--data", data_flag, "KDD Cup 99 10% file");
  CLI11_PARSE(app, argc, argv);

  bool skipped = false;
  if (group != "dataset") {
    run("gradient suite", gradient_suite);
    run("oracle equivalence: knn", knn_oracle_equivalence);
    run("oracle equivalence: conv1d", conv_oracle_equivalence);
    run("oracle equivalence: ensemble routing", routing_equivalence);
    run("metric identities", metric_identities);
    const auto dir = scratch("synthetic");
    const auto synth = dir / "kdd_synthetic.txt";
    testkit::write_synthetic_kdd(synth.string(), 0.1, 19);
    run("determinism", [&] { return determinism(synth); });
    const auto small = kdd::parse_dataset(testkit::synthetic_kdd_text(0.005, 23), "synthetic");
    run("threshold monotonicity", [&] { return threshold_monotonicity(small); });
  }
  if (group != "offline") {
    const auto path = find_dataset(data_flag);
    const std::vector<std::string> names = {"ingestion fidelity", "ensemble headline (desk scale)",
                                            "autoencoder (desk scale)", "gan properties (desk scale)"};
    if (path.empty()) {
      for (const auto& n : names) {
        report(n, {false, "KDD Cup 99 10% file not found (set KDD_DATA_PATH or place "
                          "data/kddcup.data_10_percent.gz); criterion not evaluated"});
      }
      skipped = true;
    } else {
      kdd::Dataset full;
      run(names[0], [&] { return ingestion(path, full); });
      if (full.empty()) full = kdd::load_dataset(path.string());
      run(names[1], [&] { return ensemble_headline(full); });
      run(names[2], [&] { return autoencoder_headline(full); });
      run(names[3], [&] { return gan_property(full); });
    }
  }
  std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed") << "\n";
  if (g_failures > 0 && skipped && group == "dataset") return kSkipped;
  return g_failures == 0 ? 0 : 1;
}
