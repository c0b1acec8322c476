#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "iotad/detectors/autoencoder.hpp"
#include "iotad/detectors/gan.hpp"
#include "iotad/ensemble.hpp"
#include "iotad/preprocess.hpp"

namespace iotad {

enum class ModelKind { kAe, kGan, kKnn, kRf, kCnnLstm, kEnsemble };

std::string model_kind_name(ModelKind kind);
/// Throws kInvalidArgument for unknown names.
ModelKind parse_model_kind(const std::string& name);

/// Flat key=value settings with dotted section keys. Every key has a
/// default; unknown keys are rejected. Later sources override earlier ones.
class RunConfig {
 public:
  RunConfig();

  /// Reads `key = value` lines; '#' starts a comment.
  void apply_file(const std::string& path);
  void apply_text(const std::string& text, const std::string& origin = "<text>");
  void set(const std::string& key, const std::string& value);

  /// Subsample 0.05 and a 20,000-row KNN reference cap.
  void apply_desk_scale();

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  ModelKind model() const;
  std::uint64_t seed() const { return get_u64("seed"); }

  static const std::vector<std::string>& known_keys();
  const std::map<std::string, std::string>& values() const { return values_; }

  /// Every key with its resolved value, sorted, one `key = value` per line.
  std::string resolved_text() const;
  /// SHA-256 of resolved_text() without the location keys (data, out).
  std::string hash() const;

  EncoderKind encoder_kind() const;
  bool l2_normalize() const;

  AeConfig ae_config() const;
  GanConfig gan_config() const;
  KnnConfig knn_config() const;
  ForestConfig forest_config() const;
  CnnLstmConfig cnn_lstm_config() const;
  EnsembleConfig ensemble_config() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace iotad
