#pragma once

#include <cstdint>
#include <optional>

#include "iotad/detectors/scorer.hpp"
#include "iotad/detectors/training.hpp"
#include "iotad/nn/network.hpp"

namespace iotad {

struct GanConfig {
  std::size_t latent_dim = 114;
  std::size_t hidden_units = 128;
  std::size_t hidden_layers = 6;
  double dropout = 0.2;
  double learning_rate = 1e-5;
  std::size_t epochs = 10;
  std::size_t batch_size = 512;
  bool use_encoder = true;
  std::size_t encoder_hidden = 128;
  std::size_t encoder_epochs = 5;
  double encoder_learning_rate = 1e-3;
  double lambda = 0.9;
  double threshold_percentile = 95.0;
  std::uint64_t seed = 0;
};

/// latent -> hidden_layers x (dense, tanh) -> dense(outputs) -> sigmoid.
nn::Sequential<float> build_generator(std::size_t outputs, const GanConfig& config);
/// inputs -> hidden_layers x (dense, relu, dropout) -> dense(1) -> sigmoid.
nn::Sequential<float> build_discriminator(std::size_t inputs, const GanConfig& config);
/// inputs -> 2 x (dense encoder_hidden, relu) -> dense(latent).
nn::Sequential<float> build_encoder(std::size_t inputs, const GanConfig& config);

struct DiscriminatorStep {
  double loss = 0.0;
  /// Fraction of real rows with D > 0.5 and fake rows with D < 0.5.
  double accuracy = 0.0;
};

class GanModel final : public AnomalyScorer {
 public:
  GanModel() = default;
  GanModel(nn::Sequential<float> generator, nn::Sequential<float> discriminator,
           std::optional<nn::Sequential<float>> encoder, double lambda, double threshold,
           double percentile, std::size_t latent_dim);

  /// Alternating D/G updates on Normal rows only, then the encoder with G
  /// frozen, then the threshold from training scores.
  static GanModel train(const FeatureMatrix& train, const GanConfig& config,
                        TrainingLog* log = nullptr);

  /// Freshly initialized networks for `features` columns.
  static GanModel initialized(std::size_t features, const GanConfig& config);

  /// One SGD update of D: BCE with real -> 1, fake -> 0.
  DiscriminatorStep discriminator_step(const nn::Tensor<float>& real, const nn::Tensor<float>& fake,
                                       float learning_rate);
  /// One SGD update of G toward D(G(z)) = 1; returns the generator loss.
  double generator_step(const nn::Tensor<float>& z, float learning_rate);

  /// [n, latent] standard normal draws.
  nn::Tensor<float> sample_latent(std::size_t n, Rng& rng) const;
  nn::Tensor<float> generate(const nn::Tensor<float>& z) const;
  /// D(x) for each row.
  std::vector<double> discriminate(const FeatureMatrix& x) const;
  /// ||G(E(x)) - x||^2 for each row; requires an encoder.
  std::vector<double> reconstruction_error(const FeatureMatrix& x) const;

  ScoreKind score_kind() const override { return ScoreKind::kGan; }
  /// lambda * ||G(E(x)) - x||^2 + (1 - lambda) * -log D(x); without an
  /// encoder just -log D(x). D is clamped to [1e-7, 1 - 1e-7].
  std::vector<double> score(const FeatureMatrix& x) const override;
  double threshold() const override { return threshold_; }
  void set_threshold(double theta) override { threshold_ = theta; }
  double lambda() const { return lambda_; }
  void set_lambda(double lambda);
  double percentile() const { return percentile_; }
  std::size_t latent_dim() const { return latent_dim_; }
  std::size_t input_width() const;

  const nn::Sequential<float>& generator() const { return generator_; }
  const nn::Sequential<float>& discriminator() const { return discriminator_; }
  const std::optional<nn::Sequential<float>>& encoder() const { return encoder_; }
  nn::Sequential<float>& generator() { return generator_; }
  nn::Sequential<float>& discriminator() { return discriminator_; }
  std::optional<nn::Sequential<float>>& encoder() { return encoder_; }

 private:
  nn::Sequential<float> generator_;
  nn::Sequential<float> discriminator_;
  std::optional<nn::Sequential<float>> encoder_;
  double lambda_ = 0.9;
  double threshold_ = 0.0;
  double percentile_ = 95.0;
  std::size_t latent_dim_ = 114;
};

/// -log of D clamped to [1e-7, 1 - 1e-7].
double discriminator_score(double d);

}  // namespace iotad
