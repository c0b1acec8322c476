#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "iotad/kdd.hpp"

namespace iotad {

/// Dense row-major feature matrix with aligned labels.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;
  /// Class codes 0..4, or 0/1 after binary relabeling.
  std::vector<int> labels;
  /// Source record index of each row.
  std::vector<std::size_t> row_ids;
  /// Provenance of each column, e.g. "src_bytes" or "service=http".
  std::vector<std::string> columns;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n_rows, std::size_t n_cols);

  std::span<float> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  float& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  float at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  /// Throws kShapeMismatch / kInvalidArgument when invariants are broken
  /// (sizes disagree, NaN or Inf present).
  void validate() const;
};

/// Rows at the given positions, in the given order.
FeatureMatrix select_rows(const FeatureMatrix& m, std::span<const std::size_t> positions);
/// Rows whose label equals `label`.
FeatureMatrix rows_with_label(const FeatureMatrix& m, int label);
/// Normal=0, any attack=1.
std::vector<int> to_binary_labels(std::span<const int> labels);

enum class EncoderKind { kLabel, kOneHot };

/// Vocabularies for protocol_type, service and flag, sorted lexicographically.
class CategoricalEncoder {
 public:
  static constexpr std::array<std::size_t, 3> kColumns = {
      kdd::kProtocolColumn, kdd::kServiceColumn, kdd::kFlagColumn};

  CategoricalEncoder() = default;
  CategoricalEncoder(EncoderKind kind, std::array<std::vector<std::string>, 3> vocabularies,
                     bool lenient = false);

  EncoderKind kind() const { return kind_; }
  bool lenient() const { return lenient_; }
  void set_lenient(bool lenient) { lenient_ = lenient; }
  /// group 0..2 corresponds to kColumns.
  const std::vector<std::string>& vocabulary(std::size_t group) const { return vocab_[group]; }

  /// Code of a token in its column's vocabulary. Unseen tokens throw
  /// kUnseenCategory in strict mode and return vocabulary size when lenient.
  std::size_t encode(std::size_t group, const std::string& token) const;
  const std::string& decode(std::size_t group, std::size_t code) const;

  /// Number of encoded feature columns produced per record.
  std::size_t output_width() const;
  std::vector<std::string> column_names() const;

  /// Writes the encoded (unscaled) features of one record.
  void encode_record(const kdd::Record& record, std::span<double> out) const;

 private:
  EncoderKind kind_ = EncoderKind::kLabel;
  std::array<std::vector<std::string>, 3> vocab_;
  bool lenient_ = false;
};

CategoricalEncoder fit_label_encoder(const kdd::Dataset& train);
CategoricalEncoder fit_one_hot_encoder(const kdd::Dataset& train);

/// Per-feature min-max statistics. Columns with `scaled[j] == false` pass
/// through unchanged (one-hot indicators).
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> min, std::vector<double> max, std::vector<bool> scaled);

  /// Fits on encoded train rows (row-major, `cols` wide).
  static MinMaxScaler fit(std::span<const double> encoded, std::size_t cols,
                          std::vector<bool> scaled);

  std::size_t size() const { return min_.size(); }
  const std::vector<double>& min() const { return min_; }
  const std::vector<double>& max() const { return max_; }
  const std::vector<bool>& scaled() const { return scaled_; }

  /// (x - min) / (max - min); constant columns map to 0. Not clipped.
  double apply(std::size_t column, double x) const;

 private:
  std::vector<double> min_;
  std::vector<double> max_;
  std::vector<bool> scaled_;
};

/// Encodes categoricals, min-max scales with train statistics and maps labels
/// to category codes.
FeatureMatrix transform(const CategoricalEncoder& encoder, const MinMaxScaler& scaler,
                        const kdd::Dataset& dataset);

/// Divides each nonzero row by its Euclidean norm.
FeatureMatrix l2_normalize_rows(FeatureMatrix m);

/// Complete fitted preprocessing state: encode, then scale, then optionally
/// L2-normalize rows.
struct Preprocessor {
  CategoricalEncoder encoder;
  MinMaxScaler scaler;
  bool l2_normalize = false;

  static Preprocessor fit(const kdd::Dataset& train, EncoderKind kind, bool l2_normalize,
                          bool lenient = false);
  FeatureMatrix apply(const kdd::Dataset& dataset) const;
  std::size_t output_width() const { return encoder.output_width(); }
};

}  // namespace iotad
