#include "iotad/eval.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "iotad/error.hpp"

namespace iotad {
namespace {

double ratio(std::int64_t num, std::int64_t den, bool& undefined) {
  if (den == 0) {
    undefined = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes) : n_(n_classes), counts_(n_classes * n_classes, 0) {}

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::vector<std::int64_t> counts)
    : n_(n_classes), counts_(std::move(counts)) {
  if (counts_.size() != n_ * n_) {
    throw Error(ErrorCode::kShapeMismatch, "confusion matrix needs n*n counts");
  }
  for (auto c : counts_) {
    if (c < 0) throw Error(ErrorCode::kInvalidArgument, "confusion matrix counts must be non-negative");
  }
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0});
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < n_; ++i) t += at(i, i);
  return t;
}

std::int64_t ConfusionMatrix::true_support(std::size_t c) const {
  std::int64_t s = 0;
  for (std::size_t j = 0; j < n_; ++j) s += at(c, j);
  return s;
}

std::int64_t ConfusionMatrix::predicted_support(std::size_t c) const {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < n_; ++i) s += at(i, c);
  return s;
}

ConfusionMatrix ConfusionMatrix::collapse_binary() const {
  ConfusionMatrix b(2);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) b.at(i == 0 ? 0 : 1, j == 0 ? 0 : 1) += at(i, j);
  }
  return b;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::size_t n_classes) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kLengthMismatch, "confusion: " + std::to_string(truth.size()) +
                                                " true labels vs " + std::to_string(predicted.size()) +
                                                " predictions");
  }
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
        static_cast<std::size_t>(p) >= n_classes) {
      throw Error(ErrorCode::kCodeOutOfRange, "confusion: code outside [0, " +
                                                  std::to_string(n_classes) + ") at row " +
                                                  std::to_string(i));
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

std::string averaging_name(Averaging mode) {
  switch (mode) {
    case Averaging::kBinary: return "binary";
    case Averaging::kMacro: return "macro";
    case Averaging::kWeighted: return "weighted";
  }
  return "unknown";
}

ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t c) {
  ClassMetrics m;
  const std::int64_t tp = cm.at(c, c);
  m.support = cm.true_support(c);
  bool undefined = false;
  m.precision = ratio(tp, cm.predicted_support(c), undefined);
  m.recall = ratio(tp, m.support, undefined);
  m.f1 = harmonic(m.precision, m.recall);
  m.undefined = undefined;
  return m;
}

MetricSet metrics(const ConfusionMatrix& input, Averaging mode) {
  if (input.total() == 0) throw Error(ErrorCode::kEmptyMatrix, "metrics: confusion matrix is empty");
  const ConfusionMatrix cm = mode == Averaging::kBinary ? input.collapse_binary() : input;
  MetricSet out;
  // Integer trace and total before the single division.
  out.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
  for (std::size_t c = 0; c < cm.n_classes(); ++c) {
    out.per_class.push_back(class_metrics(cm, c));
    if (out.per_class.back().undefined) out.undefined_classes.push_back(c);
  }
  if (mode == Averaging::kBinary) {
    const auto& attack = out.per_class[1];
    out.precision = attack.precision;
    out.recall = attack.recall;
    out.f1 = attack.f1;
  } else if (mode == Averaging::kMacro) {
    std::size_t present = 0;
    for (std::size_t c = 0; c < cm.n_classes(); ++c) {
      if (cm.true_support(c) == 0 && cm.predicted_support(c) == 0) continue;
      ++present;
      out.precision += out.per_class[c].precision;
      out.recall += out.per_class[c].recall;
      out.f1 += out.per_class[c].f1;
    }
    out.precision /= static_cast<double>(present);
    out.recall /= static_cast<double>(present);
    out.f1 /= static_cast<double>(present);
  } else {
    const double total = static_cast<double>(cm.total());
    for (std::size_t c = 0; c < cm.n_classes(); ++c) {
      const double w = static_cast<double>(out.per_class[c].support) / total;
      out.precision += w * out.per_class[c].precision;
      out.recall += w * out.per_class[c].recall;
      out.f1 += w * out.per_class[c].f1;
    }
  }
  return out;
}

ReferenceMetrics reference_metrics_for(const std::string& model) {
  if (model == "ensemble") return {0.9822, 0.9267, 0.9668, 0.9621};
  if (model == "ae") return {0.9796, 0.9068, 0.8733, 0.9345};
  if (model == "gan") return {0.9028, 0.9127, 0.9286, 0.9262};
  if (model == "knn") return {0.9681, std::nullopt, std::nullopt, std::nullopt};
  if (model == "cnnlstm") return {0.9783, std::nullopt, std::nullopt, std::nullopt};
  return {};
}

std::vector<DeltaRow> compare_to_reference(const MetricSet& ours, const ReferenceMetrics& reference,
                                           double tolerance) {
  std::vector<DeltaRow> rows;
  const auto add = [&](const char* name, double value, const std::optional<double>& ref) {
    DeltaRow row{name, value, ref, std::nullopt, "n/a"};
    if (ref) {
      row.delta = value - *ref;
      row.status = std::fabs(*row.delta) <= tolerance ? "pass" : "fail";
    }
    rows.push_back(row);
  };
  add("accuracy", ours.accuracy, reference.accuracy);
  add("precision", ours.precision, reference.precision);
  add("recall", ours.recall, reference.recall);
  add("f1", ours.f1, reference.f1);
  return rows;
}

EvalReport EvalReport::from_multiclass(const ConfusionMatrix& cm) {
  EvalReport r;
  r.multiclass = cm;
  r.binary = cm.collapse_binary();
  for (auto mode : {Averaging::kBinary, Averaging::kMacro, Averaging::kWeighted}) {
    r.modes[averaging_name(mode)] = metrics(cm, mode);
  }
  r.accuracy = r.modes["binary"].accuracy;
  return r;
}

EvalReport EvalReport::from_binary(const ConfusionMatrix& cm) {
  if (cm.n_classes() != 2) throw Error(ErrorCode::kShapeMismatch, "binary report needs a 2x2 matrix");
  EvalReport r;
  r.binary = cm;
  for (auto mode : {Averaging::kBinary, Averaging::kMacro, Averaging::kWeighted}) {
    r.modes[averaging_name(mode)] = metrics(cm, mode);
  }
  r.accuracy = r.modes["binary"].accuracy;
  return r;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < cm.n_classes(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < cm.n_classes(); ++j) row.push_back(cm.at(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json to_json(const MetricSet& m) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& c : m.per_class) {
    per_class.push_back({{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1},
                         {"support", c.support}, {"undefined", c.undefined}});
  }
  return {{"accuracy", m.accuracy},   {"precision", m.precision},
          {"recall", m.recall},       {"f1", m.f1},
          {"per_class", per_class},   {"undefined_classes", m.undefined_classes}};
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["accuracy"] = accuracy;
  j["confusion"]["binary"] = iotad::to_json(binary);
  j["confusion"]["multiclass"] = multiclass ? iotad::to_json(*multiclass) : nlohmann::json(nullptr);
  for (const auto& [name, m] : modes) j["metrics"][name] = iotad::to_json(m);
  j["metadata"] = metadata;
  return j;
}

std::string EvalReport::summary_table() const {
  std::string out = "mode        accuracy  precision  recall    f1\n";
  for (const auto& [name, m] : modes) {
    char line[128];
    std::snprintf(line, sizeof line, "%-10s  %.4f    %.4f     %.4f    %.4f\n", name.c_str(), m.accuracy,
                  m.precision, m.recall, m.f1);
    out += line;
  }
  return out;
}

std::string format_delta_table(const std::string& title, const std::vector<DeltaRow>& rows) {
  std::string out = title + "\n  metric      ours      reference  delta     status\n";
  for (const auto& r : rows) {
    char line[160];
    std::snprintf(line, sizeof line, "  %-10s  %-8s  %-9s  %-8s  %s\n", r.metric.c_str(),
                  fmt(r.ours).c_str(), r.reference ? fmt(*r.reference).c_str() : "n/a",
                  r.delta ? fmt(*r.delta).c_str() : "n/a", r.status.c_str());
    out += line;
  }
  return out;
}

}  // namespace iotad
