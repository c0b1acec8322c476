#include "gradient_suite.hpp"

#include <algorithm>
#include <numeric>

#include "gradcheck.hpp"
#include "iotad/rng.hpp"

namespace iotad::testkit {
namespace {

using nn::Tensor;

std::size_t between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.uniform_index(hi - lo + 1));
}

Tensor<double> random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo, double hi) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Keeps inputs away from the ReLU kink so the finite difference is smooth.
Tensor<double> away_from_zero(Rng& rng, std::vector<std::size_t> shape) {
  Tensor<double> t(std::move(shape));
  for (auto& v : t.values()) {
    const double mag = rng.uniform(0.05, 2.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

void randomize_parameters(nn::Sequential<double>& net, Rng& rng, double scale) {
  for (auto* p : net.parameters()) {
    for (auto& v : p->value.values()) v = rng.uniform(-scale, scale);
  }
}

void merge(GradientSuiteEntry& entry, const GradCheckResult& r) {
  ++entry.configurations;
  entry.gradients_checked += r.checked;
  if (r.max_relative_error >= entry.max_relative_error) {
    entry.max_relative_error = r.max_relative_error;
    entry.worst = r.worst;
  }
}

GradientSuiteEntry dense_suite(std::size_t configs, Rng& rng) {
  GradientSuiteEntry e;
  e.name = "dense";
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t n = between(rng, 1, 4), d = between(rng, 1, 6), u = between(rng, 1, 6);
    nn::Sequential<double> net;
    net.emplace<nn::Dense<double>>(d, u);
    randomize_parameters(net, rng, 1.0);
    const auto x = random_tensor(rng, {n, d}, -1.0, 1.0);
    merge(e, check_network(net, x, random_tensor(rng, {n, u}, -1.0, 1.0)));
  }
  return e;
}

GradientSuiteEntry activation_suite(std::size_t configs, Rng& rng, nn::LayerKind kind,
                                    const char* name) {
  GradientSuiteEntry e;
  e.name = name;
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t n = between(rng, 1, 4), d = between(rng, 1, 6);
    nn::Sequential<double> net;
    net.emplace<nn::Activation<double>>(kind);
    const auto x = away_from_zero(rng, {n, d});
    merge(e, check_network(net, x, random_tensor(rng, {n, d}, -1.0, 1.0)));
  }
  return e;
}

GradientSuiteEntry conv_suite(std::size_t configs, Rng& rng) {
  GradientSuiteEntry e;
  e.name = "conv1d";
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t n = between(rng, 1, 3), length = between(rng, 1, 8);
    const std::size_t cin = between(rng, 1, 3), cout = between(rng, 1, 3);
    const std::size_t k = between(rng, 1, length);
    nn::Sequential<double> net;
    net.emplace<nn::Conv1d<double>>(cin, cout, k);
    randomize_parameters(net, rng, 1.0);
    const auto x = random_tensor(rng, {n, length, cin}, -1.0, 1.0);
    merge(e, check_network(net, x, random_tensor(rng, {n, length - k + 1, cout}, -1.0, 1.0)));
  }
  return e;
}

GradientSuiteEntry pool_suite(std::size_t configs, Rng& rng) {
  GradientSuiteEntry e;
  e.name = "maxpool1d";
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t n = between(rng, 1, 3), length = between(rng, 1, 8), ch = between(rng, 1, 3);
    const std::size_t window = between(rng, 1, length);
    // Distinct values 0.1 apart: no perturbation can change a window's argmax.
    std::vector<double> values(n * length * ch);
    std::iota(values.begin(), values.end(), 0.0);
    rng.shuffle(values);
    for (auto& v : values) v = 0.1 * v - 1.0;
    nn::Sequential<double> net;
    net.emplace<nn::MaxPool1d<double>>(window);
    const Tensor<double> x({n, length, ch}, values);
    merge(e, check_network(net, x, random_tensor(rng, {n, length / window, ch}, -1.0, 1.0)));
  }
  return e;
}

GradientSuiteEntry lstm_suite(std::size_t configs, Rng& rng) {
  GradientSuiteEntry e;
  e.name = "lstm";
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t n = between(rng, 1, 3), steps = between(rng, 1, 5);
    const std::size_t d = between(rng, 1, 4), u = between(rng, 1, 4);
    nn::Sequential<double> net;
    net.emplace<nn::Lstm<double>>(d, u);
    randomize_parameters(net, rng, 0.8);
    const auto x = random_tensor(rng, {n, steps, d}, -1.0, 1.0);
    merge(e, check_network(net, x, random_tensor(rng, {n, u}, -1.0, 1.0)));
  }
  return e;
}

GradientSuiteEntry dropout_suite(std::size_t configs, Rng& rng) {
  GradientSuiteEntry e;
  e.name = "dropout(rate 0)";
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t n = between(rng, 1, 4), d = between(rng, 1, 6);
    nn::Sequential<double> net;
    net.emplace<nn::Dropout<double>>(0.0, rng.next());
    const auto x = random_tensor(rng, {n, d}, -1.0, 1.0);
    merge(e, check_network(net, x, random_tensor(rng, {n, d}, -1.0, 1.0), nn::Mode::kTrain));
  }
  return e;
}

GradientSuiteEntry sparse_ce_suite(std::size_t configs, Rng& rng) {
  GradientSuiteEntry e;
  e.name = "softmax+sparse_ce";
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t n = between(rng, 1, 5), k = between(rng, 2, 6);
    std::vector<int> targets(n);
    for (auto& t : targets) t = static_cast<int>(rng.uniform_index(k));
    const auto logits = random_tensor(rng, {n, k}, -3.0, 3.0);
    merge(e, check_loss([&](const Tensor<double>& z) { return nn::loss_sparse_ce<double>(z, targets); },
                        logits));
  }
  return e;
}

GradientSuiteEntry bce_suite(std::size_t configs, Rng& rng) {
  GradientSuiteEntry e;
  e.name = "bce";
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t n = between(rng, 1, 5), d = between(rng, 1, 3);
    Tensor<double> target({n, d});
    for (auto& t : target.values()) t = rng.uniform() < 0.5 ? 0.0 : 1.0;
    const auto prob = random_tensor(rng, {n, d}, 0.05, 0.95);
    merge(e, check_loss([&](const Tensor<double>& p) { return nn::loss_bce<double>(p, target); },
                        prob));
  }
  return e;
}

GradientSuiteEntry mse_suite(std::size_t configs, Rng& rng) {
  GradientSuiteEntry e;
  e.name = "mse";
  for (std::size_t c = 0; c < configs; ++c) {
    const std::size_t n = between(rng, 1, 5), d = between(rng, 1, 6);
    const auto target = random_tensor(rng, {n, d}, -1.0, 1.0);
    const auto pred = random_tensor(rng, {n, d}, -1.0, 1.0);
    merge(e, check_loss([&](const Tensor<double>& p) { return nn::loss_mse<double>(p, target); },
                        pred));
  }
  return e;
}

}  // namespace

std::vector<GradientSuiteEntry> run_gradient_suite(std::size_t configurations, std::uint64_t seed) {
  Rng rng(seed);
  return {
      dense_suite(configurations, rng),
      activation_suite(configurations, rng, nn::LayerKind::kRelu, "relu"),
      activation_suite(configurations, rng, nn::LayerKind::kTanh, "tanh"),
      activation_suite(configurations, rng, nn::LayerKind::kSigmoid, "sigmoid"),
      conv_suite(configurations, rng),
      pool_suite(configurations, rng),
      lstm_suite(configurations, rng),
      dropout_suite(configurations, rng),
      sparse_ce_suite(configurations, rng),
      bce_suite(configurations, rng),
      mse_suite(configurations, rng),
  };
}

}  // namespace iotad::testkit
