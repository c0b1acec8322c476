#include "iotad/nn/functional.hpp"

#include <algorithm>
#include <cmath>

namespace iotad::nn {
namespace {

constexpr double kProbEpsilon = 1e-7;

template <typename T>
void require_equal_shapes(const Tensor<T>& a, const Tensor<T>& b, const char* where) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kShapeMismatch, std::string(where) + ": shapes " +
                                               Tensor<T>::shape_string(a.shape()) + " and " +
                                               Tensor<T>::shape_string(b.shape()) + " differ");
  }
}

}  // namespace

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.values()) v = v > T(0) ? v : T(0);
  return y;
}

template <typename T>
Tensor<T> tanh_act(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.values()) v = std::tanh(v);
  return y;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  Tensor<T> y = x;
  for (auto& v : y.values()) {
    v = v >= T(0) ? T(1) / (T(1) + std::exp(-v)) : std::exp(v) / (T(1) + std::exp(v));
  }
  return y;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  require_rank(logits, 2, "softmax");
  Tensor<T> out = logits;
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  for (std::size_t i = 0; i < n; ++i) {
    T* row = out.data() + i * k;
    const T top = *std::max_element(row, row + k);
    T sum = T(0);
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = std::exp(row[j] - top);
      sum += row[j];
    }
    for (std::size_t j = 0; j < k; ++j) row[j] /= sum;
  }
  return out;
}

template <typename T>
std::size_t argmax(std::span<const T> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

template <typename T>
LossResult<T> loss_mse(const Tensor<T>& pred, const Tensor<T>& target) {
  require_equal_shapes(pred, target, "mse");
  const std::size_t count = pred.size();
  if (count == 0) throw Error(ErrorCode::kShapeMismatch, "mse: empty input");
  LossResult<T> r{T(0), Tensor<T>(pred.shape())};
  const T scale = T(2) / static_cast<T>(count);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const T diff = pred[i] - target[i];
    sum += static_cast<double>(diff) * diff;
    r.grad[i] = scale * diff;
  }
  r.value = static_cast<T>(sum / static_cast<double>(count));
  return r;
}

template <typename T>
LossResult<T> loss_bce(const Tensor<T>& prob, const Tensor<T>& target) {
  require_equal_shapes(prob, target, "bce");
  const std::size_t count = prob.size();
  if (count == 0) throw Error(ErrorCode::kShapeMismatch, "bce: empty input");
  LossResult<T> r{T(0), Tensor<T>(prob.shape())};
  const T lo = static_cast<T>(kProbEpsilon), hi = static_cast<T>(1.0 - kProbEpsilon);
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const T p = std::clamp(prob[i], lo, hi);
    const T y = target[i];
    sum -= static_cast<double>(y) * std::log(p) + (1.0 - static_cast<double>(y)) * std::log1p(-p);
    r.grad[i] = (p - y) / (p * (T(1) - p) * static_cast<T>(count));
  }
  r.value = static_cast<T>(sum / static_cast<double>(count));
  return r;
}

template <typename T>
LossResult<T> loss_sparse_ce(const Tensor<T>& logits, std::span<const int> targets) {
  require_rank(logits, 2, "sparse_ce");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (targets.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "sparse_ce: " + std::to_string(targets.size()) +
                                               " targets for " + std::to_string(n) + " rows");
  }
  if (n == 0) throw Error(ErrorCode::kShapeMismatch, "sparse_ce: empty input");
  LossResult<T> r{T(0), softmax(logits)};
  double sum = 0.0;
  const T inv_n = T(1) / static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = targets[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k) {
      throw Error(ErrorCode::kCodeOutOfRange, "sparse_ce: target " + std::to_string(y) +
                                                  " outside [0, " + std::to_string(k) + ")");
    }
    const T* row = logits.data() + i * k;
    const T top = *std::max_element(row, row + k);
    double lse = 0.0;
    for (std::size_t j = 0; j < k; ++j) lse += std::exp(static_cast<double>(row[j] - top));
    sum += std::log(lse) - static_cast<double>(row[y] - top);
    T* g = r.grad.data() + i * k;
    g[y] -= T(1);
    for (std::size_t j = 0; j < k; ++j) g[j] *= inv_n;
  }
  r.value = static_cast<T>(sum / static_cast<double>(n));
  return r;
}

#define IOTAD_INSTANTIATE(T)                                                     \
  template Tensor<T> relu(const Tensor<T>&);                                     \
  template Tensor<T> tanh_act(const Tensor<T>&);                                 \
  template Tensor<T> sigmoid(const Tensor<T>&);                                  \
  template Tensor<T> softmax(const Tensor<T>&);                                  \
  template std::size_t argmax(std::span<const T>);                               \
  template LossResult<T> loss_mse(const Tensor<T>&, const Tensor<T>&);           \
  template LossResult<T> loss_bce(const Tensor<T>&, const Tensor<T>&);           \
  template LossResult<T> loss_sparse_ce(const Tensor<T>&, std::span<const int>);

IOTAD_INSTANTIATE(float)
IOTAD_INSTANTIATE(double)

#undef IOTAD_INSTANTIATE

}  // namespace iotad::nn
