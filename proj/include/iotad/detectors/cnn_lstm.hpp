#pragma once

#include <cstdint>

#include "iotad/classifier.hpp"
#include "iotad/detectors/training.hpp"
#include "iotad/nn/network.hpp"

namespace iotad {

struct CnnLstmConfig {
  std::size_t filters = 64;
  std::size_t kernel = 3;
  std::size_t pool = 2;
  std::size_t lstm_units = 64;
  std::size_t classes = 5;
  double learning_rate = 0.01;
  double momentum = 0.0;
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double validation_fraction = 0.1;
  std::uint64_t seed = 0;
};

/// [n, L, 1] -> conv(filters, kernel) -> relu -> maxpool(pool) -> lstm -> dense(classes).
nn::Sequential<float> build_cnn_lstm(const CnnLstmConfig& config);

/// Per class, floor(fraction * n_c) positions chosen by a seeded shuffle;
/// returned sorted.
std::vector<std::size_t> stratified_holdout(std::span<const int> labels, double fraction,
                                            std::uint64_t seed);

class CnnLstmModel final : public Classifier {
 public:
  CnnLstmModel() = default;
  CnnLstmModel(nn::Sequential<float> network, std::size_t sequence_length,
               double best_validation_accuracy);

  /// SGD on sparse cross-entropy. A stratified validation share is held
  /// out; the parameters of the epoch with the best validation accuracy
  /// (earliest on ties) are returned.
  static CnnLstmModel train(const FeatureMatrix& train, const CnnLstmConfig& config,
                            TrainingLog* log = nullptr);

  /// Raw logits [n, classes].
  nn::Tensor<float> logits(const FeatureMatrix& queries, std::size_t batch_size = 1024) const;
  std::vector<int> predict(const FeatureMatrix& queries) const override;
  std::size_t input_width() const override { return sequence_length_; }

  double best_validation_accuracy() const { return best_validation_accuracy_; }
  const nn::Sequential<float>& network() const { return network_; }
  nn::Sequential<float>& network() { return network_; }

 private:
  nn::Sequential<float> network_;
  std::size_t sequence_length_ = 0;
  double best_validation_accuracy_ = 0.0;
};

/// argmax per row; lowest class on ties.
std::vector<int> argmax_rows(const nn::Tensor<float>& logits);

}  // namespace iotad
