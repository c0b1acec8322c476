#pragma once

#include <span>

#include "iotad/nn/tensor.hpp"

namespace iotad::nn {

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> tanh_act(const Tensor<T>& x);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);
/// Row-wise softmax over the last axis of a rank-2 tensor, max-subtracted.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

/// Index of the largest entry; the lowest index wins ties.
template <typename T>
std::size_t argmax(std::span<const T> row);

template <typename T>
struct LossResult {
  T value;
  Tensor<T> grad;
};

/// Mean over every element of (pred - target)^2.
template <typename T>
LossResult<T> loss_mse(const Tensor<T>& pred, const Tensor<T>& target);

/// Binary cross-entropy on probabilities, clamped to [1e-7, 1 - 1e-7].
/// Mean over elements.
template <typename T>
LossResult<T> loss_bce(const Tensor<T>& prob, const Tensor<T>& target);

/// Sparse categorical cross-entropy from logits [n, classes]; mean over rows.
template <typename T>
LossResult<T> loss_sparse_ce(const Tensor<T>& logits, std::span<const int> targets);

}  // namespace iotad::nn
