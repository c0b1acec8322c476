#include "iotad/detectors/cnn_lstm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "iotad/nn/functional.hpp"

namespace iotad {

nn::Sequential<float> build_cnn_lstm(const CnnLstmConfig& config) {
  nn::Sequential<float> net;
  net.emplace<nn::Conv1d<float>>(1, config.filters, config.kernel);
  net.emplace<nn::Activation<float>>(nn::LayerKind::kRelu);
  net.emplace<nn::MaxPool1d<float>>(config.pool);
  net.emplace<nn::Lstm<float>>(config.filters, config.lstm_units);
  net.emplace<nn::Dense<float>>(config.lstm_units, config.classes);
  return net;
}

std::vector<std::size_t> stratified_holdout(std::span<const int> labels, double fraction,
                                            std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> out;
  for (auto& [label, rows] : by_class) {
    const auto take = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(rows.size()) + 1e-9));
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(rows);
    out.insert(out.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> argmax_rows(const nn::Tensor<float>& logits) {
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = static_cast<int>(nn::argmax<float>(std::span<const float>(logits.data() + i * k, k)));
  }
  return out;
}

CnnLstmModel::CnnLstmModel(nn::Sequential<float> network, std::size_t sequence_length,
                           double best_validation_accuracy)
    : network_(std::move(network)), sequence_length_(sequence_length),
      best_validation_accuracy_(best_validation_accuracy) {}

namespace {

double accuracy_of(const CnnLstmModel& model, const FeatureMatrix& m) {
  if (m.rows == 0) return 0.0;
  const auto pred = model.predict(m);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < m.rows; ++i) correct += pred[i] == m.labels[i];
  return static_cast<double>(correct) / static_cast<double>(m.rows);
}

}  // namespace

CnnLstmModel CnnLstmModel::train(const FeatureMatrix& train, const CnnLstmConfig& config,
                                 TrainingLog* log) {
  if (train.rows == 0) throw Error(ErrorCode::kEmptyTrainingSet, "cnn+lstm: no training rows");
  train.validate();
  for (int label : train.labels) {
    if (label < 0 || static_cast<std::size_t>(label) >= config.classes) {
      throw Error(ErrorCode::kCodeOutOfRange, "cnn+lstm: label " + std::to_string(label) +
                                                  " outside the softmax head");
    }
  }
  const auto holdout = stratified_holdout(train.labels, config.validation_fraction,
                                          derive_seed(config.seed, 0x7A));
  std::vector<std::size_t> fit_rows;
  {
    std::size_t h = 0;
    for (std::size_t i = 0; i < train.rows; ++i) {
      if (h < holdout.size() && holdout[h] == i) {
        ++h;
      } else {
        fit_rows.push_back(i);
      }
    }
  }
  const FeatureMatrix fit = select_rows(train, fit_rows);
  const FeatureMatrix validation = select_rows(train, holdout);
  if (fit.rows == 0) throw Error(ErrorCode::kEmptyTrainingSet, "cnn+lstm: validation took every row");

  CnnLstmModel model(build_cnn_lstm(config), train.cols, 0.0);
  Rng init(derive_seed(config.seed, 0xC1));
  model.network_.initialize(init);
  nn::Sgd<float> opt(static_cast<float>(config.learning_rate), static_cast<float>(config.momentum));
  const std::size_t length = train.cols;

  // Validation falls back to the fit rows when the split leaves none.
  const FeatureMatrix& monitor = validation.rows > 0 ? validation : fit;
  double best = -1.0;
  std::vector<nn::Tensor<float>> best_params = model.network_.snapshot();
  if (log) {
    log->summary["fit_rows"] = static_cast<double>(fit.rows);
    log->summary["validation_rows"] = static_cast<double>(validation.rows);
    const auto l0 = nn::loss_sparse_ce(model.logits(fit), std::span<const int>(fit.labels));
    log->summary["initial_loss"] = static_cast<double>(l0.value);
  }
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double loss_sum = 0.0;
    for (const auto& batch : epoch_batches(fit.rows, config.batch_size, config.seed, epoch)) {
      const auto x = gather_rows(fit, batch).reshaped({batch.size(), length, 1});
      std::vector<int> y(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) y[i] = fit.labels[batch[i]];
      const auto out = model.network_.forward(x, nn::Mode::kTrain);
      const auto loss = nn::loss_sparse_ce(out, std::span<const int>(y));
      require_finite_loss(loss.value, "cnn+lstm", epoch);
      opt.step(model.network_, model.network_.backward(loss.grad).tape);
      loss_sum += static_cast<double>(loss.value) * static_cast<double>(batch.size());
    }
    const double val_acc = accuracy_of(model, monitor);
    if (val_acc > best) {
      best = val_acc;
      best_params = model.network_.snapshot();
    }
    if (log) {
      log->epochs.push_back({epoch, {{"train_loss", loss_sum / static_cast<double>(fit.rows)},
                                     {"validation_accuracy", val_acc}}});
    }
  }
  model.network_.restore(best_params);
  model.best_validation_accuracy_ = std::max(best, 0.0);
  if (log) log->summary["best_validation_accuracy"] = model.best_validation_accuracy_;
  return model;
}

nn::Tensor<float> CnnLstmModel::logits(const FeatureMatrix& queries, std::size_t batch_size) const {
  if (queries.cols != sequence_length_) {
    throw Error(ErrorCode::kDimensionMismatch, "cnn+lstm: input has " + std::to_string(queries.cols) +
                                                   " columns, model expects " +
                                                   std::to_string(sequence_length_));
  }
  auto net = network_;
  const std::size_t classes = net.layer(net.layer_count() - 1).spec().outputs;
  nn::Tensor<float> out({queries.rows, classes});
  std::vector<std::size_t> positions;
  for (std::size_t start = 0; start < queries.rows; start += batch_size) {
    positions.resize(std::min(batch_size, queries.rows - start));
    std::iota(positions.begin(), positions.end(), start);
    const auto x = gather_rows(queries, positions).reshaped({positions.size(), sequence_length_, 1});
    const auto y = net.forward(x, nn::Mode::kInfer);
    std::copy(y.values().begin(), y.values().end(), out.data() + start * classes);
  }
  return out;
}

std::vector<int> CnnLstmModel::predict(const FeatureMatrix& queries) const {
  return argmax_rows(logits(queries));
}

}  // namespace iotad
