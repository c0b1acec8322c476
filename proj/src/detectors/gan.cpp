#include "iotad/detectors/gan.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iotad/nn/functional.hpp"

namespace iotad {
namespace {

constexpr std::size_t kScoreBatch = 1024;
constexpr double kProbEpsilon = 1e-7;

template <typename Fn>
void for_each_batch(const FeatureMatrix& x, Fn&& fn) {
  std::vector<std::size_t> positions;
  for (std::size_t start = 0; start < x.rows; start += kScoreBatch) {
    positions.resize(std::min(kScoreBatch, x.rows - start));
    std::iota(positions.begin(), positions.end(), start);
    fn(gather_rows(x, positions));
  }
}

}  // namespace

double discriminator_score(double d) {
  return -std::log(std::clamp(d, kProbEpsilon, 1.0 - kProbEpsilon));
}

nn::Sequential<float> build_generator(std::size_t outputs, const GanConfig& config) {
  nn::Sequential<float> g;
  std::size_t width = config.latent_dim;
  for (std::size_t i = 0; i < config.hidden_layers; ++i) {
    g.emplace<nn::Dense<float>>(width, config.hidden_units);
    g.emplace<nn::Activation<float>>(nn::LayerKind::kTanh);
    width = config.hidden_units;
  }
  g.emplace<nn::Dense<float>>(width, outputs);
  g.emplace<nn::Activation<float>>(nn::LayerKind::kSigmoid);
  return g;
}

nn::Sequential<float> build_discriminator(std::size_t inputs, const GanConfig& config) {
  nn::Sequential<float> d;
  std::size_t width = inputs;
  for (std::size_t i = 0; i < config.hidden_layers; ++i) {
    d.emplace<nn::Dense<float>>(width, config.hidden_units);
    d.emplace<nn::Activation<float>>(nn::LayerKind::kRelu);
    d.emplace<nn::Dropout<float>>(config.dropout, derive_seed(config.seed, 0xD0 + i));
    width = config.hidden_units;
  }
  d.emplace<nn::Dense<float>>(width, 1);
  d.emplace<nn::Activation<float>>(nn::LayerKind::kSigmoid);
  return d;
}

nn::Sequential<float> build_encoder(std::size_t inputs, const GanConfig& config) {
  nn::Sequential<float> e;
  e.emplace<nn::Dense<float>>(inputs, config.encoder_hidden);
  e.emplace<nn::Activation<float>>(nn::LayerKind::kRelu);
  e.emplace<nn::Dense<float>>(config.encoder_hidden, config.encoder_hidden);
  e.emplace<nn::Activation<float>>(nn::LayerKind::kRelu);
  e.emplace<nn::Dense<float>>(config.encoder_hidden, config.latent_dim);
  return e;
}

GanModel::GanModel(nn::Sequential<float> generator, nn::Sequential<float> discriminator,
                   std::optional<nn::Sequential<float>> encoder, double lambda, double threshold,
                   double percentile, std::size_t latent_dim)
    : generator_(std::move(generator)), discriminator_(std::move(discriminator)),
      encoder_(std::move(encoder)), threshold_(threshold), percentile_(percentile),
      latent_dim_(latent_dim) {
  set_lambda(lambda);
}

void GanModel::set_lambda(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gan: lambda must lie in [0, 1]");
  }
  lambda_ = lambda;
}

std::size_t GanModel::input_width() const {
  return discriminator_.layer_count() == 0 ? 0 : discriminator_.layer(0).spec().inputs;
}

GanModel GanModel::initialized(std::size_t features, const GanConfig& config) {
  auto g = build_generator(features, config);
  auto d = build_discriminator(features, config);
  Rng rg(derive_seed(config.seed, 0x6E));
  Rng rd(derive_seed(config.seed, 0xD1));
  g.initialize(rg);
  d.initialize(rd);
  std::optional<nn::Sequential<float>> e;
  if (config.use_encoder) {
    e = build_encoder(features, config);
    Rng re(derive_seed(config.seed, 0xE0));
    e->initialize(re);
  }
  return GanModel(std::move(g), std::move(d), std::move(e), config.lambda, 0.0,
                  config.threshold_percentile, config.latent_dim);
}

nn::Tensor<float> GanModel::sample_latent(std::size_t n, Rng& rng) const {
  nn::Tensor<float> z({n, latent_dim_});
  for (auto& v : z.values()) v = static_cast<float>(rng.normal());
  return z;
}

nn::Tensor<float> GanModel::generate(const nn::Tensor<float>& z) const {
  auto g = generator_;
  return g.forward(z, nn::Mode::kInfer);
}

DiscriminatorStep GanModel::discriminator_step(const nn::Tensor<float>& real,
                                               const nn::Tensor<float>& fake, float learning_rate) {
  const std::size_t nr = real.dim(0), nf = fake.dim(0), d = real.dim(1);
  if (fake.dim(1) != d) throw Error(ErrorCode::kShapeMismatch, "gan: real and fake widths differ");
  nn::Tensor<float> x({nr + nf, d});
  std::copy(real.values().begin(), real.values().end(), x.data());
  std::copy(fake.values().begin(), fake.values().end(), x.data() + nr * d);
  nn::Tensor<float> target({nr + nf, 1}, 0.0f);
  for (std::size_t i = 0; i < nr; ++i) target[i] = 1.0f;
  const auto p = discriminator_.forward(x, nn::Mode::kTrain);
  const auto loss = nn::loss_bce(p, target);
  nn::sgd_step<float>(discriminator_.parameters(), discriminator_.backward(loss.grad).tape,
                      learning_rate);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < nr + nf; ++i) correct += (p[i] > 0.5f) == (target[i] == 1.0f);
  return {static_cast<double>(loss.value), static_cast<double>(correct) / static_cast<double>(nr + nf)};
}

double GanModel::generator_step(const nn::Tensor<float>& z, float learning_rate) {
  const auto fake = generator_.forward(z, nn::Mode::kTrain);
  const auto p = discriminator_.forward(fake, nn::Mode::kTrain);
  const auto loss = nn::loss_bce(p, nn::Tensor<float>(p.shape(), 1.0f));
  // D is only a path for the gradient here; its parameters stay fixed.
  const auto through_d = discriminator_.backward(loss.grad);
  nn::sgd_step<float>(generator_.parameters(), generator_.backward(through_d.input_grad).tape,
                      learning_rate);
  return static_cast<double>(loss.value);
}

GanModel GanModel::train(const FeatureMatrix& train, const GanConfig& config, TrainingLog* log) {
  std::vector<std::size_t> normal;
  for (std::size_t i = 0; i < train.rows; ++i) {
    if (train.labels[i] == 0) normal.push_back(i);
  }
  if (normal.empty()) throw Error(ErrorCode::kEmptyTrainingSet, "gan: no normal training rows");
  const FeatureMatrix data = select_rows(train, normal);
  data.validate();

  GanModel model = initialized(data.cols, config);
  if (log) {
    log->summary["normal_rows_used"] = static_cast<double>(data.rows);
    log->summary["attack_rows_excluded"] = static_cast<double>(train.rows - data.rows);
  }
  const auto lr = static_cast<float>(config.learning_rate);
  Rng noise(derive_seed(config.seed, 0x2A));
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double d_loss = 0.0, g_loss = 0.0, d_acc = 0.0;
    std::size_t batches = 0;
    for (const auto& batch : epoch_batches(data.rows, config.batch_size, config.seed, epoch)) {
      const auto real = gather_rows(data, batch);
      auto fake = model.generator_.forward(model.sample_latent(batch.size(), noise), nn::Mode::kInfer);
      const auto ds = model.discriminator_step(real, fake, lr);
      const double gl = model.generator_step(model.sample_latent(batch.size(), noise), lr);
      require_finite_loss(ds.loss, "gan discriminator", epoch);
      require_finite_loss(gl, "gan generator", epoch);
      d_loss += ds.loss;
      g_loss += gl;
      d_acc += ds.accuracy;
      ++batches;
    }
    const double nb = static_cast<double>(batches);
    if (log) {
      log->epochs.push_back({epoch, {{"d_loss", d_loss / nb}, {"g_loss", g_loss / nb},
                                     {"d_accuracy", d_acc / nb}}});
    }
  }

  if (model.encoder_) {
    nn::Sgd<float> opt(static_cast<float>(config.encoder_learning_rate));
    auto frozen = model.generator_;
    for (std::size_t epoch = 0; epoch < config.encoder_epochs; ++epoch) {
      double loss_sum = 0.0;
      std::size_t seen = 0;
      for (const auto& batch :
           epoch_batches(data.rows, config.batch_size, derive_seed(config.seed, 0xE1), epoch)) {
        const auto x = gather_rows(data, batch);
        const auto z = model.encoder_->forward(x, nn::Mode::kTrain);
        const auto rec = frozen.forward(z, nn::Mode::kInfer);
        const auto loss = nn::loss_mse(rec, x);
        require_finite_loss(loss.value, "gan encoder", epoch);
        const auto dz = frozen.backward(loss.grad).input_grad;
        opt.step(*model.encoder_, model.encoder_->backward(dz).tape);
        loss_sum += static_cast<double>(loss.value) * static_cast<double>(batch.size());
        seen += batch.size();
      }
      if (log) {
        log->epochs.push_back(
            {config.epochs + epoch, {{"encoder_mse", loss_sum / static_cast<double>(seen)}}});
      }
    }
  }

  const auto scores = model.score(data);
  model.threshold_ = nearest_rank_percentile(scores, config.threshold_percentile);
  if (log) log->summary["threshold"] = model.threshold_;
  return model;
}

std::vector<double> GanModel::discriminate(const FeatureMatrix& x) const {
  if (x.cols != input_width()) {
    throw Error(ErrorCode::kDimensionMismatch, "gan: input has " + std::to_string(x.cols) +
                                                   " columns, model expects " +
                                                   std::to_string(input_width()));
  }
  auto d = discriminator_;
  std::vector<double> out;
  out.reserve(x.rows);
  for_each_batch(x, [&](const nn::Tensor<float>& batch) {
    const auto p = d.forward(batch, nn::Mode::kInfer);
    for (float v : p.values()) out.push_back(v);
  });
  return out;
}

std::vector<double> GanModel::reconstruction_error(const FeatureMatrix& x) const {
  if (!encoder_) throw Error(ErrorCode::kInvalidArgument, "gan: no encoder configured");
  if (x.cols != input_width()) {
    throw Error(ErrorCode::kDimensionMismatch, "gan: input has " + std::to_string(x.cols) +
                                                   " columns, model expects " +
                                                   std::to_string(input_width()));
  }
  auto e = *encoder_;
  auto g = generator_;
  std::vector<double> out;
  out.reserve(x.rows);
  for_each_batch(x, [&](const nn::Tensor<float>& batch) {
    const auto rec = g.forward(e.forward(batch, nn::Mode::kInfer), nn::Mode::kInfer);
    const std::size_t d = batch.dim(1);
    for (std::size_t i = 0; i < batch.dim(0); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = static_cast<double>(rec[i * d + j]) - batch[i * d + j];
        s += diff * diff;
      }
      out.push_back(s);
    }
  });
  return out;
}

std::vector<double> GanModel::score(const FeatureMatrix& x) const {
  const auto d = discriminate(x);
  std::vector<double> out(d.size());
  if (!encoder_) {
    std::transform(d.begin(), d.end(), out.begin(), discriminator_score);
    return out;
  }
  const auto rec = reconstruction_error(x);
  for (std::size_t i = 0; i < d.size(); ++i) {
    out[i] = lambda_ * rec[i] + (1.0 - lambda_) * discriminator_score(d[i]);
  }
  return out;
}

}  // namespace iotad
