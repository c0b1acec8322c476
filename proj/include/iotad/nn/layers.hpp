#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "iotad/nn/tensor.hpp"
#include "iotad/rng.hpp"

namespace iotad::nn {

enum class Mode { kTrain, kInfer };

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
};

enum class LayerKind { kDense, kRelu, kTanh, kSigmoid, kConv1d, kMaxPool1d, kLstm, kDropout };

std::string_view layer_kind_name(LayerKind kind);

/// Kind plus hyperparameters; enough to rebuild an uninitialized layer.
struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  std::size_t inputs = 0;   // dense in, conv channels in, lstm input dim
  std::size_t outputs = 0;  // dense units, conv filters, lstm units
  std::size_t kernel = 0;   // conv kernel width or pool window
  double rate = 0.0;        // dropout rate
};

/// One stage of a fixed layer stack. forward() caches what backward() needs;
/// backward() adds parameter gradients into `grads` (aligned with
/// parameters()) and returns the gradient with respect to the input.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out, std::span<Tensor<T>> grads) = 0;

  virtual std::span<Parameter<T>> parameters() { return {}; }
  virtual std::span<const Parameter<T>> parameters() const { return {}; }
  virtual void initialize(Rng& /*rng*/) {}
  virtual LayerSpec spec() const = 0;
  virtual std::unique_ptr<Layer<T>> clone() const = 0;
};

template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t inputs, std::size_t units);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, std::span<Tensor<T>> grads) override;
  std::span<Parameter<T>> parameters() override { return params_; }
  std::span<const Parameter<T>> parameters() const override { return params_; }
  void initialize(Rng& rng) override;
  LayerSpec spec() const override { return {LayerKind::kDense, inputs_, units_, 0, 0.0}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dense>(*this); }

  Tensor<T>& weight() { return params_[0].value; }
  Tensor<T>& bias() { return params_[1].value; }

 private:
  std::size_t inputs_;
  std::size_t units_;
  std::vector<Parameter<T>> params_;
  Tensor<T> input_;
  bool cached_ = false;
};

/// Elementwise activation. ReLU's subgradient at 0 is 0.
template <typename T>
class Activation final : public Layer<T> {
 public:
  explicit Activation(LayerKind kind);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, std::span<Tensor<T>> grads) override;
  LayerSpec spec() const override { return {kind_, 0, 0, 0, 0.0}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Activation>(*this); }

 private:
  LayerKind kind_;
  Tensor<T> cache_;  // input for ReLU, output for tanh/sigmoid
  bool cached_ = false;
};

/// Valid (unpadded) stride-1 convolution over [n, length, channels] input.
template <typename T>
class Conv1d final : public Layer<T> {
 public:
  Conv1d(std::size_t in_channels, std::size_t filters, std::size_t kernel_width);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, std::span<Tensor<T>> grads) override;
  std::span<Parameter<T>> parameters() override { return params_; }
  std::span<const Parameter<T>> parameters() const override { return params_; }
  void initialize(Rng& rng) override;
  LayerSpec spec() const override {
    return {LayerKind::kConv1d, in_channels_, filters_, kernel_, 0.0};
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv1d>(*this); }

  /// [kernel_width, in_channels, filters]
  Tensor<T>& kernel() { return params_[0].value; }
  Tensor<T>& bias() { return params_[1].value; }

 private:
  std::size_t in_channels_;
  std::size_t filters_;
  std::size_t kernel_;
  std::vector<Parameter<T>> params_;
  Tensor<T> input_;
  bool cached_ = false;
};

/// Non-overlapping max pooling along the length axis; the trailing
/// remainder is dropped. Ties route the gradient to the first maximum.
template <typename T>
class MaxPool1d final : public Layer<T> {
 public:
  explicit MaxPool1d(std::size_t window);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, std::span<Tensor<T>> grads) override;
  LayerSpec spec() const override { return {LayerKind::kMaxPool1d, 0, 0, window_, 0.0}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<MaxPool1d>(*this); }

  const std::vector<std::size_t>& argmax() const { return argmax_; }

 private:
  std::size_t window_;
  std::vector<std::size_t> input_shape_;
  std::vector<std::size_t> argmax_;
  bool cached_ = false;
};

/// Single LSTM layer over [n, steps, features]; returns the last hidden
/// state [n, units]. Gate column order in the weights is i, f, g, o.
template <typename T>
class Lstm final : public Layer<T> {
 public:
  Lstm(std::size_t inputs, std::size_t units);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, std::span<Tensor<T>> grads) override;
  std::span<Parameter<T>> parameters() override { return params_; }
  std::span<const Parameter<T>> parameters() const override { return params_; }
  void initialize(Rng& rng) override;
  LayerSpec spec() const override { return {LayerKind::kLstm, inputs_, units_, 0, 0.0}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Lstm>(*this); }

  Tensor<T>& input_weight() { return params_[0].value; }
  Tensor<T>& recurrent_weight() { return params_[1].value; }
  Tensor<T>& bias() { return params_[2].value; }

 private:
  std::size_t inputs_;
  std::size_t units_;
  std::vector<Parameter<T>> params_;
  // Per-step caches for backpropagation through time.
  Tensor<T> input_;
  std::vector<std::vector<T>> gates_;   // [steps] of n x 4u, post-activation
  std::vector<std::vector<T>> cells_;   // [steps + 1] of n x u, cells_[0] = 0
  std::vector<std::vector<T>> hidden_;  // [steps + 1] of n x u, hidden_[0] = 0
  bool cached_ = false;
};

/// Inverted dropout: survivors are scaled by 1 / (1 - rate) in training;
/// identity at inference.
template <typename T>
class Dropout final : public Layer<T> {
 public:
  Dropout(double rate, std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out, std::span<Tensor<T>> grads) override;
  LayerSpec spec() const override { return {LayerKind::kDropout, 0, 0, 0, rate_}; }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Dropout>(*this); }

 private:
  double rate_;
  Rng rng_;
  std::vector<T> mask_;
  bool cached_ = false;
};

}  // namespace iotad::nn
