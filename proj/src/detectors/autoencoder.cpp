#include "iotad/detectors/autoencoder.hpp"

#include <numeric>

#include "iotad/nn/functional.hpp"

namespace iotad {

namespace {
constexpr std::size_t kScoreBatch = 1024;
}

nn::Sequential<float> build_autoencoder(std::size_t inputs, const AeConfig& config) {
  nn::Sequential<float> net;
  net.emplace<nn::Dense<float>>(inputs, config.hidden1);
  net.emplace<nn::Activation<float>>(nn::LayerKind::kTanh);
  net.emplace<nn::Dense<float>>(config.hidden1, config.hidden2);
  net.emplace<nn::Activation<float>>(nn::LayerKind::kRelu);
  net.emplace<nn::Dense<float>>(config.hidden2, config.hidden1);
  net.emplace<nn::Activation<float>>(nn::LayerKind::kTanh);
  net.emplace<nn::Dense<float>>(config.hidden1, inputs);
  return net;
}

AeModel::AeModel(nn::Sequential<float> network, double threshold, double percentile)
    : network_(std::move(network)), threshold_(threshold), percentile_(percentile) {}

std::size_t AeModel::input_width() const {
  return network_.layer_count() == 0 ? 0 : network_.layer(0).spec().inputs;
}

std::vector<double> row_mse(const nn::Tensor<float>& x, const nn::Tensor<float>& reconstruction) {
  const std::size_t n = x.dim(0), d = x.dim(1);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = static_cast<double>(reconstruction[i * d + j]) - x[i * d + j];
      s += diff * diff;
    }
    out[i] = s / static_cast<double>(d);
  }
  return out;
}

AeModel AeModel::train(const FeatureMatrix& train, const AeConfig& config, TrainingLog* log) {
  std::vector<std::size_t> normal;
  for (std::size_t i = 0; i < train.rows; ++i) {
    if (train.labels[i] == 0) normal.push_back(i);
  }
  if (normal.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "autoencoder: no normal training rows");
  const FeatureMatrix data = select_rows(train, normal);
  data.validate();

  nn::Sequential<float> net = build_autoencoder(data.cols, config);
  Rng init(derive_seed(config.seed, 0xAE));
  net.initialize(init);
  nn::Sgd<float> opt(static_cast<float>(config.learning_rate), static_cast<float>(config.momentum));

  AeModel model(std::move(net), 0.0, config.threshold_percentile);
  const auto initial = model.score(data);
  const double initial_mse = std::accumulate(initial.begin(), initial.end(), 0.0) / initial.size();
  if (log) {
    log->summary["normal_rows_used"] = static_cast<double>(data.rows);
    log->summary["attack_rows_excluded"] = static_cast<double>(train.rows - data.rows);
    log->summary["initial_mse"] = initial_mse;
  }
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : epoch_batches(data.rows, config.batch_size, config.seed, epoch)) {
      const auto x = gather_rows(data, batch);
      const auto y = model.network_.forward(x, nn::Mode::kTrain);
      const auto loss = nn::loss_mse(y, x);
      require_finite_loss(loss.value, "autoencoder", epoch);
      opt.step(model.network_, model.network_.backward(loss.grad).tape);
      loss_sum += static_cast<double>(loss.value) * static_cast<double>(batch.size());
      seen += batch.size();
    }
    if (log) log->epochs.push_back({epoch, {{"train_mse", loss_sum / static_cast<double>(seen)}}});
  }
  const auto errors = model.score(data);
  model.threshold_ = nearest_rank_percentile(errors, config.threshold_percentile);
  if (log) {
    log->summary["final_mse"] = std::accumulate(errors.begin(), errors.end(), 0.0) / errors.size();
    log->summary["threshold"] = model.threshold_;
  }
  return model;
}

std::vector<double> AeModel::score(const FeatureMatrix& x) const {
  if (x.cols != input_width()) {
    throw Error(ErrorCode::kDimensionMismatch, "autoencoder: input has " + std::to_string(x.cols) +
                                                   " columns, model expects " +
                                                   std::to_string(input_width()));
  }
  nn::Sequential<float> net = network_;
  std::vector<double> out;
  out.reserve(x.rows);
  std::vector<std::size_t> positions;
  for (std::size_t start = 0; start < x.rows; start += kScoreBatch) {
    positions.resize(std::min(kScoreBatch, x.rows - start));
    std::iota(positions.begin(), positions.end(), start);
    const auto batch = gather_rows(x, positions);
    const auto errors = row_mse(batch, net.forward(batch, nn::Mode::kInfer));
    out.insert(out.end(), errors.begin(), errors.end());
  }
  return out;
}

}  // namespace iotad
