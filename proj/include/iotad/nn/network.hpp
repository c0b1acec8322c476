#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "iotad/nn/layers.hpp"

namespace iotad::nn {

/// Gradients aligned 1:1 with Sequential::parameters().
template <typename T>
struct GradientTape {
  std::vector<Tensor<T>> grads;

  bool all_zero() const;
};

template <typename T>
struct BackwardResult {
  GradientTape<T> tape;
  Tensor<T> input_grad;
};

/// Enables NaN/Inf assertions after every layer (on by default in debug
/// builds). Violations throw kDivergence.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

/// A fixed stack of layers with explicit reverse-mode accumulation.
template <typename T>
class Sequential {
 public:
  Sequential() = default;
  Sequential(const Sequential& other);
  Sequential& operator=(const Sequential& other);
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    forward_done_ = false;
    return ref;
  }
  void add(std::unique_ptr<Layer<T>> layer);

  std::size_t layer_count() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }
  std::vector<LayerSpec> specs() const;

  /// Glorot-uniform weights, zero biases (forget gate bias 1 for LSTM).
  void initialize(Rng& rng);

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  /// Gradients of every parameter for the last forward(); parameters are
  /// not modified. Throws kCalledBeforeForward if forward() never ran.
  BackwardResult<T> backward(const Tensor<T>& loss_grad);

  /// Parameters in layer order, named "<layer>.<param>".
  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;
  std::vector<std::string> parameter_names() const;
  std::size_t parameter_count() const;

  std::vector<Tensor<T>> snapshot() const;
  void restore(const std::vector<Tensor<T>>& values);

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  bool forward_done_ = false;
};

/// theta' = theta - lr * g for every parameter.
template <typename T>
void sgd_step(std::span<Parameter<T>* const> params, const GradientTape<T>& tape, T lr);

/// Plain SGD with optional classical momentum mu in [0, 1).
template <typename T>
class Sgd {
 public:
  explicit Sgd(T learning_rate, T momentum = T(0));

  void step(Sequential<T>& net, const GradientTape<T>& tape);
  T learning_rate() const { return lr_; }

 private:
  T lr_;
  T momentum_;
  std::vector<Tensor<T>> velocity_;
};

}  // namespace iotad::nn
