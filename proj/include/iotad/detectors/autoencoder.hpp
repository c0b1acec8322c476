#pragma once

#include <cstdint>

#include "iotad/detectors/scorer.hpp"
#include "iotad/detectors/training.hpp"
#include "iotad/nn/network.hpp"

namespace iotad {

struct AeConfig {
  std::size_t hidden1 = 64;
  std::size_t hidden2 = 32;
  double learning_rate = 0.1;
  double momentum = 0.0;
  std::size_t epochs = 20;
  std::size_t batch_size = 256;
  double threshold_percentile = 95.0;
  std::uint64_t seed = 0;
};

/// d -> h1 tanh -> h2 relu -> h1 tanh -> d linear.
nn::Sequential<float> build_autoencoder(std::size_t inputs, const AeConfig& config);

class AeModel final : public AnomalyScorer {
 public:
  AeModel() = default;
  AeModel(nn::Sequential<float> network, double threshold, double percentile);

  /// Fits on the Normal (label 0) rows of `train` only; other rows are
  /// counted in the log and never batched. Threshold = nearest-rank
  /// percentile of the training reconstruction errors.
  static AeModel train(const FeatureMatrix& train, const AeConfig& config,
                       TrainingLog* log = nullptr);

  ScoreKind score_kind() const override { return ScoreKind::kReconstruction; }
  /// Mean squared reconstruction error per row.
  std::vector<double> score(const FeatureMatrix& x) const override;
  double threshold() const override { return threshold_; }
  void set_threshold(double theta) override { threshold_ = theta; }
  double percentile() const { return percentile_; }

  const nn::Sequential<float>& network() const { return network_; }
  nn::Sequential<float>& network() { return network_; }
  std::size_t input_width() const;

 private:
  nn::Sequential<float> network_;
  double threshold_ = 0.0;
  double percentile_ = 95.0;
};

/// Per-row mean squared difference between x and reconstruction.
std::vector<double> row_mse(const nn::Tensor<float>& x, const nn::Tensor<float>& reconstruction);

}  // namespace iotad
