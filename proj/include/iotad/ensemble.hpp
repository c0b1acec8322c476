#pragma once

#include <memory>
#include <vector>

#include "iotad/detectors/cnn_lstm.hpp"
#include "iotad/detectors/forest.hpp"
#include "iotad/detectors/knn.hpp"
#include "iotad/detectors/training.hpp"

namespace iotad {

struct EnsembleConfig {
  KnnConfig knn;
  CnnLstmConfig cnn_lstm;
  ForestConfig forest;
  /// Below this many training conflicts the forest is skipped and layer 2
  /// answers every conflict.
  std::size_t min_conflicts = 10;
};

enum class Fallback { kLayer2 };

struct RoutingStats {
  std::size_t queries = 0;
  std::size_t agreements = 0;
  std::size_t layer3_invocations = 0;
  std::size_t fallback_answers = 0;
};

struct EnsemblePrediction {
  std::vector<int> layer1;
  std::vector<int> layer2;
  std::vector<int> final;
  RoutingStats stats;
};

/// Layer 1 (KNN) and layer 2 (CNN+LSTM) vote; rows where they disagree go to
/// layer 3 (random forest trained on the training conflicts).
class EnsembleModel {
 public:
  EnsembleModel() = default;
  EnsembleModel(std::shared_ptr<const Classifier> layer1, std::shared_ptr<const Classifier> layer2,
                std::shared_ptr<const Classifier> layer3, std::size_t conflict_count);

  static EnsembleModel train(const FeatureMatrix& train, const EnsembleConfig& config,
                             TrainingLog* log = nullptr);

  /// Fits layer 3 on the rows of `train` where the two given layers disagree.
  static EnsembleModel assemble(std::shared_ptr<const Classifier> layer1,
                                std::shared_ptr<const Classifier> layer2, const FeatureMatrix& train,
                                const ForestConfig& forest, std::size_t min_conflicts,
                                TrainingLog* log = nullptr);

  std::vector<int> predict(const FeatureMatrix& queries) const;
  EnsemblePrediction predict_detailed(const FeatureMatrix& queries) const;

  const Classifier& layer1() const { return *layer1_; }
  const Classifier& layer2() const { return *layer2_; }
  const Classifier* layer3() const { return layer3_.get(); }
  std::shared_ptr<const Classifier> layer1_ptr() const { return layer1_; }
  std::shared_ptr<const Classifier> layer2_ptr() const { return layer2_; }
  std::shared_ptr<const Classifier> layer3_ptr() const { return layer3_; }
  std::size_t conflict_count() const { return conflict_count_; }
  Fallback fallback() const { return Fallback::kLayer2; }

 private:
  std::shared_ptr<const Classifier> layer1_;
  std::shared_ptr<const Classifier> layer2_;
  std::shared_ptr<const Classifier> layer3_;
  std::size_t conflict_count_ = 0;
};

}  // namespace iotad
