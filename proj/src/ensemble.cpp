#include "iotad/ensemble.hpp"

namespace iotad {

EnsembleModel::EnsembleModel(std::shared_ptr<const Classifier> layer1,
                             std::shared_ptr<const Classifier> layer2,
                             std::shared_ptr<const Classifier> layer3, std::size_t conflict_count)
    : layer1_(std::move(layer1)), layer2_(std::move(layer2)), layer3_(std::move(layer3)),
      conflict_count_(conflict_count) {
  if (!layer1_ || !layer2_) throw Error(ErrorCode::kInvalidArgument, "ensemble: layers 1 and 2 are required");
  if (layer1_->input_width() != layer2_->input_width() ||
      (layer3_ && layer3_->input_width() != layer1_->input_width())) {
    throw Error(ErrorCode::kDimensionMismatch, "ensemble: layers disagree on input width");
  }
}

EnsembleModel EnsembleModel::assemble(std::shared_ptr<const Classifier> layer1,
                                      std::shared_ptr<const Classifier> layer2,
                                      const FeatureMatrix& train, const ForestConfig& forest,
                                      std::size_t min_conflicts, TrainingLog* log) {
  const auto p1 = layer1->predict(train);
  const auto p2 = layer2->predict(train);
  std::vector<std::size_t> conflicts;
  for (std::size_t i = 0; i < train.rows; ++i) {
    if (p1[i] != p2[i]) conflicts.push_back(i);
  }
  if (log) {
    log->summary["train_conflicts"] = static_cast<double>(conflicts.size());
    std::size_t a1 = 0, a2 = 0;
    for (std::size_t i = 0; i < train.rows; ++i) {
      a1 += p1[i] == train.labels[i];
      a2 += p2[i] == train.labels[i];
    }
    log->summary["layer1_train_accuracy"] = train.rows ? static_cast<double>(a1) / train.rows : 0.0;
    log->summary["layer2_train_accuracy"] = train.rows ? static_cast<double>(a2) / train.rows : 0.0;
  }
  std::shared_ptr<const Classifier> layer3;
  if (!conflicts.empty() && conflicts.size() >= min_conflicts) {
    layer3 = std::make_shared<ForestModel>(ForestModel::fit(select_rows(train, conflicts), forest));
  } else if (log) {
    log->notes.push_back("warning: " + std::to_string(conflicts.size()) +
                         " training conflicts (minimum " + std::to_string(min_conflicts) +
                         "); layer 3 omitted, layer 2 answers conflicts");
  }
  return EnsembleModel(std::move(layer1), std::move(layer2), std::move(layer3), conflicts.size());
}

EnsembleModel EnsembleModel::train(const FeatureMatrix& train, const EnsembleConfig& config,
                                   TrainingLog* log) {
  auto knn = std::make_shared<KnnModel>(KnnModel::fit(train, config.knn));
  if (log) {
    log->summary["knn_reference_rows"] = static_cast<double>(knn->references().rows);
    log->summary["knn_source_rows"] = static_cast<double>(knn->source_rows());
  }
  auto cnn = std::make_shared<CnnLstmModel>(CnnLstmModel::train(train, config.cnn_lstm, log));
  return assemble(std::move(knn), std::move(cnn), train, config.forest, config.min_conflicts, log);
}

EnsemblePrediction EnsembleModel::predict_detailed(const FeatureMatrix& queries) const {
  if (queries.cols != layer1_->input_width()) {
    throw Error(ErrorCode::kDimensionMismatch, "ensemble: query has " + std::to_string(queries.cols) +
                                                   " columns, model expects " +
                                                   std::to_string(layer1_->input_width()));
  }
  EnsemblePrediction out;
  out.layer1 = layer1_->predict(queries);
  out.layer2 = layer2_->predict(queries);
  out.final = out.layer1;
  out.stats.queries = queries.rows;
  std::vector<std::size_t> conflicts;
  for (std::size_t i = 0; i < queries.rows; ++i) {
    if (out.layer1[i] != out.layer2[i]) conflicts.push_back(i);
  }
  out.stats.agreements = queries.rows - conflicts.size();
  if (conflicts.empty()) return out;
  if (layer3_) {
    const auto p3 = layer3_->predict(select_rows(queries, conflicts));
    for (std::size_t k = 0; k < conflicts.size(); ++k) out.final[conflicts[k]] = p3[k];
    out.stats.layer3_invocations = conflicts.size();
  } else {
    for (auto i : conflicts) out.final[i] = out.layer2[i];
    out.stats.fallback_answers = conflicts.size();
  }
  return out;
}

std::vector<int> EnsembleModel::predict(const FeatureMatrix& queries) const {
  return predict_detailed(queries).final;
}

}  // namespace iotad
