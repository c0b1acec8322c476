#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "iotad/config.hpp"
#include "iotad/detectors/autoencoder.hpp"
#include "iotad/detectors/cnn_lstm.hpp"
#include "iotad/detectors/forest.hpp"
#include "iotad/detectors/gan.hpp"
#include "iotad/detectors/knn.hpp"
#include "iotad/ensemble.hpp"
#include "iotad/preprocess.hpp"

namespace iotad {

inline constexpr int kBundleFormatVersion = 1;

struct NamedTensor {
  std::string name;
  nn::Tensor<float> tensor;
};

/// Concatenated records: u64 name length, name bytes, u64 rank, rank u64
/// dims, then float32 data; all little-endian. `index` receives one
/// {name, offset, bytes, shape} entry per tensor.
std::string encode_tensors(const std::vector<NamedTensor>& tensors, nlohmann::json* index = nullptr);
/// Throws kBundleFormat on truncated or malformed input.
std::vector<NamedTensor> decode_tensors(std::string_view bytes);

nlohmann::json preprocessor_to_json(const Preprocessor& p);
Preprocessor preprocessor_from_json(const nlohmann::json& j);

nlohmann::json layer_specs_to_json(const std::vector<nn::LayerSpec>& specs);
/// Rebuilds an uninitialized network from its layer specs.
nn::Sequential<float> network_from_json(const nlohmann::json& specs);

/// Per-row score components of the Normal training rows (ae: reconstruction
/// MSE; gan: reconstruction error and -log D).
struct ThresholdBasis {
  std::vector<float> reconstruction;
  std::vector<float> discriminator;
};

/// A trained detector with the state needed to score raw records.
struct TrainedModel {
  ModelKind kind = ModelKind::kEnsemble;
  Preprocessor preprocessor;
  std::shared_ptr<AeModel> ae;
  std::shared_ptr<GanModel> gan;
  std::shared_ptr<KnnModel> knn;
  std::shared_ptr<ForestModel> forest;
  std::shared_ptr<CnnLstmModel> cnn_lstm;
  std::shared_ptr<EnsembleModel> ensemble;
  ThresholdBasis threshold_basis;

  std::string config_hash;
  std::string dataset_checksum;
  /// Resolved training settings (without data/out locations).
  nlohmann::json training_config = nlohmann::json::object();
  nlohmann::json metadata = nlohmann::json::object();

  /// Anomaly detectors (ae, gan) answer 0/1; classifiers answer class codes.
  bool is_anomaly_detector() const { return kind == ModelKind::kAe || kind == ModelKind::kGan; }
  const AnomalyScorer* scorer() const;
  std::size_t input_width() const;
};

/// Writes manifest.json and tensors.bin into `dir` (created if missing).
/// Ensembles nest their layers as layer1/, layer2/ and layer3/.
void save_bundle(const std::filesystem::path& dir, const TrainedModel& model);
/// Throws kBundleFormat when the bundle is missing, corrupt or inconsistent.
TrainedModel load_bundle(const std::filesystem::path& dir);

}  // namespace iotad
