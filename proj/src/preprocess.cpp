#include "iotad/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace iotad {
namespace {

constexpr std::array<std::string_view, 3> kGroupNames = {"protocol_type", "service", "flag"};

CategoricalEncoder fit_encoder(const kdd::Dataset& train, EncoderKind kind) {
  if (train.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot fit an encoder on an empty training set");
  }
  std::array<std::set<std::string>, 3> seen;
  for (const auto& r : train.records) {
    seen[0].insert(r.protocol_type);
    seen[1].insert(r.service);
    seen[2].insert(r.flag);
  }
  std::array<std::vector<std::string>, 3> vocab;
  for (std::size_t g = 0; g < 3; ++g) vocab[g].assign(seen[g].begin(), seen[g].end());
  return CategoricalEncoder(kind, std::move(vocab));
}

std::vector<double> encode_all(const CategoricalEncoder& encoder, const kdd::Dataset& dataset) {
  const std::size_t width = encoder.output_width();
  std::vector<double> out(dataset.size() * width);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    encoder.encode_record(dataset.records[i], std::span<double>(out.data() + i * width, width));
  }
  return out;
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t n_rows, std::size_t n_cols)
    : rows(n_rows), cols(n_cols), values(n_rows * n_cols, 0.0f), labels(n_rows, 0),
      row_ids(n_rows, 0) {}

void FeatureMatrix::validate() const {
  if (values.size() != rows * cols || labels.size() != rows || row_ids.size() != rows) {
    throw Error(ErrorCode::kShapeMismatch, "feature matrix sizes disagree with its shape");
  }
  if (!columns.empty() && columns.size() != cols) {
    throw Error(ErrorCode::kShapeMismatch, "column descriptor count differs from column count");
  }
  for (const float v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "feature matrix holds NaN/Inf");
  }
}

FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> positions) {
  FeatureMatrix out(positions.size(), m.cols);
  out.columns = m.columns;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const std::size_t src = positions[i];
    if (src >= m.rows) throw Error(ErrorCode::kInvalidArgument, "row position out of range");
    std::copy_n(m.values.begin() + static_cast<std::ptrdiff_t>(src * m.cols), m.cols,
                out.values.begin() + static_cast<std::ptrdiff_t>(i * m.cols));
    out.labels[i] = m.labels[src];
    out.row_ids[i] = m.row_ids[src];
  }
  return out;
}

FeatureMatrix rows_with_label(const FeatureMatrix& m, int label) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (m.labels[i] == label) keep.push_back(i);
  }
  return select_rows(m, keep);
}

std::vector<int> to_binary_labels(std::span<const int> labels) {
  std::vector<int> out(labels.size());
  std::transform(labels.begin(), labels.end(), out.begin(), [](int c) { return c == 0 ? 0 : 1; });
  return out;
}

CategoricalEncoder::CategoricalEncoder(EncoderKind kind,
                                       std::array<std::vector<std::string>, 3> vocabularies,
                                       bool lenient)
    : kind_(kind), vocab_(std::move(vocabularies)), lenient_(lenient) {
  for (auto& v : vocab_) {
    if (!std::is_sorted(v.begin(), v.end()) ||
        std::adjacent_find(v.begin(), v.end()) != v.end()) {
      throw Error(ErrorCode::kInvalidArgument, "vocabulary must be sorted and duplicate-free");
    }
  }
}

std::size_t CategoricalEncoder::encode(std::size_t group, const std::string& token) const {
  const auto& v = vocab_.at(group);
  const auto it = std::lower_bound(v.begin(), v.end(), token);
  if (it != v.end() && *it == token) return static_cast<std::size_t>(it - v.begin());
  if (lenient_) return v.size();
  const std::string column(kGroupNames[group]);
  throw Error(ErrorCode::kUnseenCategory, "unseen " + column + " token '" + token + "'", column);
}

const std::string& CategoricalEncoder::decode(std::size_t group, std::size_t code) const {
  const auto& v = vocab_.at(group);
  if (code >= v.size()) {
    throw Error(ErrorCode::kCodeOutOfRange, "no token for code " + std::to_string(code),
                std::string(kGroupNames[group]));
  }
  return v[code];
}

std::size_t CategoricalEncoder::output_width() const {
  if (kind_ == EncoderKind::kLabel) return kdd::kFeatureCount;
  return kdd::kNumericFeatureCount + vocab_[0].size() + vocab_[1].size() + vocab_[2].size();
}

std::vector<std::string> CategoricalEncoder::column_names() const {
  std::vector<std::string> names;
  if (kind_ == EncoderKind::kLabel) {
    for (const auto n : kdd::kFeatureNames) names.emplace_back(n);
    return names;
  }
  for (std::size_t slot = 0; slot < kdd::kNumericFeatureCount; ++slot) {
    names.emplace_back(kdd::kFeatureNames[kdd::feature_index_of_slot(slot)]);
  }
  for (std::size_t g = 0; g < 3; ++g) {
    for (const auto& token : vocab_[g]) names.push_back(std::string(kGroupNames[g]) + "=" + token);
  }
  return names;
}

void CategoricalEncoder::encode_record(const kdd::Record& record, std::span<double> out) const {
  if (kind_ == EncoderKind::kLabel) {
    for (std::size_t slot = 0; slot < kdd::kNumericFeatureCount; ++slot) {
      out[kdd::feature_index_of_slot(slot)] = record.numeric[slot];
    }
    for (std::size_t g = 0; g < 3; ++g) {
      out[kColumns[g]] = static_cast<double>(encode(g, record.categorical(kColumns[g])));
    }
    return;
  }
  std::copy(record.numeric.begin(), record.numeric.end(), out.begin());
  std::size_t offset = kdd::kNumericFeatureCount;
  for (std::size_t g = 0; g < 3; ++g) {
    const std::size_t width = vocab_[g].size();
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(offset), width, 0.0);
    const std::size_t code = encode(g, record.categorical(kColumns[g]));
    if (code < width) out[offset + code] = 1.0;
    offset += width;
  }
}

CategoricalEncoder fit_label_encoder(const kdd::Dataset& train) {
  return fit_encoder(train, EncoderKind::kLabel);
}

CategoricalEncoder fit_one_hot_encoder(const kdd::Dataset& train) {
  return fit_encoder(train, EncoderKind::kOneHot);
}

MinMaxScaler::MinMaxScaler(std::vector<double> min, std::vector<double> max,
                           std::vector<bool> scaled)
    : min_(std::move(min)), max_(std::move(max)), scaled_(std::move(scaled)) {
  if (min_.size() != max_.size() || min_.size() != scaled_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scaler statistics have inconsistent lengths");
  }
  for (std::size_t j = 0; j < min_.size(); ++j) {
    if (!(min_[j] <= max_[j])) throw Error(ErrorCode::kInvalidArgument, "scaler min exceeds max");
  }
}

MinMaxScaler MinMaxScaler::fit(std::span<const double> encoded, std::size_t cols,
                               std::vector<bool> scaled) {
  if (cols == 0 || encoded.empty() || encoded.size() % cols != 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot fit a scaler on an empty matrix");
  }
  std::vector<double> lo(encoded.begin(), encoded.begin() + static_cast<std::ptrdiff_t>(cols));
  std::vector<double> hi = lo;
  for (std::size_t i = cols; i < encoded.size(); i += cols) {
    for (std::size_t j = 0; j < cols; ++j) {
      lo[j] = std::min(lo[j], encoded[i + j]);
      hi[j] = std::max(hi[j], encoded[i + j]);
    }
  }
  return MinMaxScaler(std::move(lo), std::move(hi), std::move(scaled));
}

double MinMaxScaler::apply(std::size_t column, double x) const {
  if (!scaled_[column]) return x;
  const double range = max_[column] - min_[column];
  if (range == 0.0) return 0.0;
  return (x - min_[column]) / range;
}

FeatureMatrix transform(const CategoricalEncoder& encoder, const MinMaxScaler& scaler,
                        const kdd::Dataset& dataset) {
  const std::size_t width = encoder.output_width();
  if (scaler.size() != width) {
    throw Error(ErrorCode::kSchemaMismatch, "scaler width " + std::to_string(scaler.size()) +
                                                " differs from encoder width " +
                                                std::to_string(width));
  }
  FeatureMatrix m(dataset.size(), width);
  m.columns = encoder.column_names();
  std::vector<double> encoded(width);
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset.records[i];
    encoder.encode_record(r, encoded);
    auto row = m.row(i);
    for (std::size_t j = 0; j < width; ++j) row[j] = static_cast<float>(scaler.apply(j, encoded[j]));
    m.labels[i] = kdd::category_code(r.category);
    m.row_ids[i] = r.index;
  }
  return m;
}

FeatureMatrix l2_normalize_rows(FeatureMatrix m) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    auto row = m.row(i);
    double sq = 0.0;
    for (const float v : row) sq += static_cast<double>(v) * v;
    if (sq == 0.0) continue;
    const double norm = std::sqrt(sq);
    for (float& v : row) v = static_cast<float>(v / norm);
  }
  return m;
}

Preprocessor Preprocessor::fit(const kdd::Dataset& train, EncoderKind kind, bool l2_normalize,
                               bool lenient) {
  Preprocessor p;
  p.encoder = kind == EncoderKind::kLabel ? fit_label_encoder(train) : fit_one_hot_encoder(train);
  const std::size_t width = p.encoder.output_width();
  // Label codes are scaled along with the numeric columns; indicators are not.
  std::vector<bool> scaled(width, true);
  if (kind == EncoderKind::kOneHot) {
    std::fill(scaled.begin() + kdd::kNumericFeatureCount, scaled.end(), false);
  }
  p.scaler = MinMaxScaler::fit(encode_all(p.encoder, train), width, std::move(scaled));
  p.encoder.set_lenient(lenient);
  p.l2_normalize = l2_normalize;
  return p;
}

FeatureMatrix Preprocessor::apply(const kdd::Dataset& dataset) const {
  FeatureMatrix m = transform(encoder, scaler, dataset);
  return l2_normalize ? l2_normalize_rows(std::move(m)) : m;
}

}  // namespace iotad
