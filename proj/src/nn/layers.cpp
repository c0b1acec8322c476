#include "iotad/nn/layers.hpp"

#include <Eigen/Core>

#include <cmath>

namespace iotad::nn {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using StridedMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using RowVectorMap = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <typename T>
using ConstRowVectorMap = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;

template <typename T>
T sigmoid_scalar(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

template <typename T>
void glorot_uniform(Tensor<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-limit, limit));
}

void require_cached(bool cached, const char* layer) {
  if (!cached) {
    throw Error(ErrorCode::kCalledBeforeForward,
                std::string(layer) + ": backward called before forward");
  }
}

template <typename T>
void require_same_shape(const Tensor<T>& grad, const std::vector<std::size_t>& shape,
                        const char* layer) {
  if (grad.shape() != shape) {
    throw Error(ErrorCode::kShapeMismatch, std::string(layer) + ": upstream gradient shape " +
                                               Tensor<T>::shape_string(grad.shape()) +
                                               " differs from output shape " +
                                               Tensor<T>::shape_string(shape));
  }
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDense: return "dense";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kTanh: return "tanh";
    case LayerKind::kSigmoid: return "sigmoid";
    case LayerKind::kConv1d: return "conv1d";
    case LayerKind::kMaxPool1d: return "maxpool1d";
    case LayerKind::kLstm: return "lstm";
    case LayerKind::kDropout: return "dropout";
  }
  return "?";
}

// ---------------------------------------------------------------- Dense

template <typename T>
Dense<T>::Dense(std::size_t inputs, std::size_t units) : inputs_(inputs), units_(units) {
  params_.push_back({"weight", Tensor<T>({inputs, units})});
  params_.push_back({"bias", Tensor<T>({units})});
}

template <typename T>
void Dense<T>::initialize(Rng& rng) {
  glorot_uniform(weight(), inputs_, units_, rng);
  bias().fill(T(0));
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x, Mode) {
  require_rank(x, 2, "dense");
  if (x.dim(1) != inputs_) {
    throw Error(ErrorCode::kShapeMismatch, "dense: input width " + std::to_string(x.dim(1)) +
                                               " but layer expects " + std::to_string(inputs_));
  }
  const std::size_t n = x.dim(0);
  Tensor<T> y({n, units_});
  ConstMatrixMap<T> xm(x.data(), n, inputs_);
  ConstMatrixMap<T> wm(params_[0].value.data(), inputs_, units_);
  ConstRowVectorMap<T> bm(params_[1].value.data(), units_);
  MatrixMap<T> ym(y.data(), n, units_);
  ym.noalias() = xm * wm;
  ym.rowwise() += bm;
  input_ = x;
  cached_ = true;
  return y;
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_out, std::span<Tensor<T>> grads) {
  require_cached(cached_, "dense");
  const std::size_t n = input_.dim(0);
  require_same_shape(grad_out, {n, units_}, "dense");
  ConstMatrixMap<T> xm(input_.data(), n, inputs_);
  ConstMatrixMap<T> gm(grad_out.data(), n, units_);
  ConstMatrixMap<T> wm(params_[0].value.data(), inputs_, units_);
  MatrixMap<T>(grads[0].data(), inputs_, units_).noalias() += xm.transpose() * gm;
  RowVectorMap<T>(grads[1].data(), units_) += gm.colwise().sum();
  Tensor<T> dx({n, inputs_});
  MatrixMap<T>(dx.data(), n, inputs_).noalias() = gm * wm.transpose();
  return dx;
}

// ---------------------------------------------------------------- Activation

template <typename T>
Activation<T>::Activation(LayerKind kind) : kind_(kind) {
  if (kind != LayerKind::kRelu && kind != LayerKind::kTanh && kind != LayerKind::kSigmoid) {
    throw Error(ErrorCode::kInvalidArgument, "activation kind must be relu, tanh or sigmoid");
  }
}

template <typename T>
Tensor<T> Activation<T>::forward(const Tensor<T>& x, Mode) {
  Tensor<T> y = x;
  switch (kind_) {
    case LayerKind::kRelu:
      for (auto& v : y.values()) v = v > T(0) ? v : T(0);
      cache_ = x;
      break;
    case LayerKind::kTanh:
      for (auto& v : y.values()) v = std::tanh(v);
      cache_ = y;
      break;
    default:
      for (auto& v : y.values()) v = sigmoid_scalar(v);
      cache_ = y;
      break;
  }
  cached_ = true;
  return y;
}

template <typename T>
Tensor<T> Activation<T>::backward(const Tensor<T>& grad_out, std::span<Tensor<T>>) {
  require_cached(cached_, "activation");
  require_same_shape(grad_out, cache_.shape(), "activation");
  Tensor<T> dx = grad_out;
  auto d = dx.values();
  const auto c = cache_.values();
  switch (kind_) {
    case LayerKind::kRelu:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] = c[i] > T(0) ? d[i] : T(0);
      break;
    case LayerKind::kTanh:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= T(1) - c[i] * c[i];
      break;
    default:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= c[i] * (T(1) - c[i]);
      break;
  }
  return dx;
}

// ---------------------------------------------------------------- Conv1d

template <typename T>
Conv1d<T>::Conv1d(std::size_t in_channels, std::size_t filters, std::size_t kernel_width)
    : in_channels_(in_channels), filters_(filters), kernel_(kernel_width) {
  if (kernel_width == 0) throw Error(ErrorCode::kInvalidArgument, "conv1d: kernel width is 0");
  params_.push_back({"kernel", Tensor<T>({kernel_width, in_channels, filters})});
  params_.push_back({"bias", Tensor<T>({filters})});
}

template <typename T>
void Conv1d<T>::initialize(Rng& rng) {
  glorot_uniform(kernel(), kernel_ * in_channels_, kernel_ * filters_, rng);
  bias().fill(T(0));
}

template <typename T>
Tensor<T> Conv1d<T>::forward(const Tensor<T>& x, Mode) {
  require_rank(x, 3, "conv1d");
  if (x.dim(2) != in_channels_) {
    throw Error(ErrorCode::kShapeMismatch, "conv1d: input has " + std::to_string(x.dim(2)) +
                                               " channels, layer expects " +
                                               std::to_string(in_channels_));
  }
  const std::size_t n = x.dim(0), length = x.dim(1);
  if (kernel_ > length) {
    throw Error(ErrorCode::kKernelTooWide, "conv1d: kernel width " + std::to_string(kernel_) +
                                               " exceeds input length " + std::to_string(length));
  }
  const std::size_t out_len = length - kernel_ + 1;
  const std::size_t window = kernel_ * in_channels_;
  Tensor<T> y({n, out_len, filters_});
  ConstMatrixMap<T> wm(params_[0].value.data(), window, filters_);
  ConstRowVectorMap<T> bm(params_[1].value.data(), filters_);
  for (std::size_t s = 0; s < n; ++s) {
    // Consecutive windows overlap in memory: row t starts at t * channels.
    ConstStridedMap<T> windows(x.data() + s * length * in_channels_, out_len, window,
                               Eigen::OuterStride<>(static_cast<Eigen::Index>(in_channels_)));
    MatrixMap<T> ym(y.data() + s * out_len * filters_, out_len, filters_);
    ym.noalias() = windows * wm;
    ym.rowwise() += bm;
  }
  input_ = x;
  cached_ = true;
  return y;
}

template <typename T>
Tensor<T> Conv1d<T>::backward(const Tensor<T>& grad_out, std::span<Tensor<T>> grads) {
  require_cached(cached_, "conv1d");
  const std::size_t n = input_.dim(0), length = input_.dim(1);
  const std::size_t out_len = length - kernel_ + 1;
  const std::size_t window = kernel_ * in_channels_;
  require_same_shape(grad_out, {n, out_len, filters_}, "conv1d");
  ConstMatrixMap<T> wm(params_[0].value.data(), window, filters_);
  MatrixMap<T> gw(grads[0].data(), window, filters_);
  RowVectorMap<T> gb(grads[1].data(), filters_);
  Tensor<T> dx(input_.shape());
  RowMatrix<T> dwindows(out_len, window);
  for (std::size_t s = 0; s < n; ++s) {
    ConstStridedMap<T> windows(input_.data() + s * length * in_channels_, out_len, window,
                               Eigen::OuterStride<>(static_cast<Eigen::Index>(in_channels_)));
    ConstMatrixMap<T> gm(grad_out.data() + s * out_len * filters_, out_len, filters_);
    gw.noalias() += windows.transpose() * gm;
    gb += gm.colwise().sum();
    dwindows.noalias() = gm * wm.transpose();
    T* dxs = dx.data() + s * length * in_channels_;
    for (std::size_t t = 0; t < out_len; ++t) {
      T* dst = dxs + t * in_channels_;
      for (std::size_t j = 0; j < window; ++j) dst[j] += dwindows(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j));
    }
  }
  return dx;
}

// ---------------------------------------------------------------- MaxPool1d

template <typename T>
MaxPool1d<T>::MaxPool1d(std::size_t window) : window_(window) {
  if (window == 0) throw Error(ErrorCode::kInvalidArgument, "maxpool1d: window is 0");
}

template <typename T>
Tensor<T> MaxPool1d<T>::forward(const Tensor<T>& x, Mode) {
  require_rank(x, 3, "maxpool1d");
  const std::size_t n = x.dim(0), length = x.dim(1), channels = x.dim(2);
  const std::size_t out_len = length / window_;
  if (out_len == 0) {
    throw Error(ErrorCode::kShapeMismatch, "maxpool1d: window " + std::to_string(window_) +
                                               " exceeds input length " + std::to_string(length));
  }
  Tensor<T> y({n, out_len, channels});
  argmax_.assign(y.size(), 0);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t t = 0; t < out_len; ++t) {
      for (std::size_t c = 0; c < channels; ++c) {
        std::size_t best = (s * length + t * window_) * channels + c;
        for (std::size_t w = 1; w < window_; ++w) {
          const std::size_t idx = (s * length + t * window_ + w) * channels + c;
          if (x[idx] > x[best]) best = idx;
        }
        const std::size_t out_idx = (s * out_len + t) * channels + c;
        y[out_idx] = x[best];
        argmax_[out_idx] = best;
      }
    }
  }
  input_shape_ = x.shape();
  cached_ = true;
  return y;
}

template <typename T>
Tensor<T> MaxPool1d<T>::backward(const Tensor<T>& grad_out, std::span<Tensor<T>>) {
  require_cached(cached_, "maxpool1d");
  if (grad_out.size() != argmax_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "maxpool1d: upstream gradient has wrong size");
  }
  Tensor<T> dx(input_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) dx[argmax_[i]] += grad_out[i];
  return dx;
}

// ---------------------------------------------------------------- Lstm

template <typename T>
Lstm<T>::Lstm(std::size_t inputs, std::size_t units) : inputs_(inputs), units_(units) {
  params_.push_back({"input_weight", Tensor<T>({inputs, 4 * units})});
  params_.push_back({"recurrent_weight", Tensor<T>({units, 4 * units})});
  params_.push_back({"bias", Tensor<T>({4 * units})});
}

template <typename T>
void Lstm<T>::initialize(Rng& rng) {
  glorot_uniform(input_weight(), inputs_, 4 * units_, rng);
  glorot_uniform(recurrent_weight(), units_, 4 * units_, rng);
  bias().fill(T(0));
  // Forget gate occupies columns [u, 2u).
  for (std::size_t j = units_; j < 2 * units_; ++j) bias()[j] = T(1);
}

template <typename T>
Tensor<T> Lstm<T>::forward(const Tensor<T>& x, Mode) {
  require_rank(x, 3, "lstm");
  if (x.dim(2) != inputs_) {
    throw Error(ErrorCode::kShapeMismatch, "lstm: input has " + std::to_string(x.dim(2)) +
                                               " features, layer expects " +
                                               std::to_string(inputs_));
  }
  const std::size_t n = x.dim(0), steps = x.dim(1), u = units_, g4 = 4 * units_;
  const auto stride = static_cast<Eigen::Index>(steps * g4);

  // Input projections for every (sample, step) at once: row s * steps + t.
  RowMatrix<T> projected(static_cast<Eigen::Index>(n * steps), static_cast<Eigen::Index>(g4));
  projected.noalias() = ConstMatrixMap<T>(x.data(), n * steps, inputs_) *
                        ConstMatrixMap<T>(params_[0].value.data(), inputs_, g4);
  ConstMatrixMap<T> wh(params_[1].value.data(), u, g4);
  ConstRowVectorMap<T> bias(params_[2].value.data(), g4);

  gates_.assign(steps, std::vector<T>(n * g4));
  cells_.assign(steps + 1, std::vector<T>(n * u, T(0)));
  hidden_.assign(steps + 1, std::vector<T>(n * u, T(0)));
  for (std::size_t t = 0; t < steps; ++t) {
    MatrixMap<T> z(gates_[t].data(), n, g4);
    z = ConstStridedMap<T>(projected.data() + t * g4, n, g4, Eigen::OuterStride<>(stride));
    z.noalias() += ConstMatrixMap<T>(hidden_[t].data(), n, u) * wh;
    z.rowwise() += bias;
    const T* c_prev = cells_[t].data();
    T* c = cells_[t + 1].data();
    T* h = hidden_[t + 1].data();
    for (std::size_t s = 0; s < n; ++s) {
      T* zs = gates_[t].data() + s * g4;
      for (std::size_t j = 0; j < u; ++j) {
        const T i_g = sigmoid_scalar(zs[j]);
        const T f_g = sigmoid_scalar(zs[u + j]);
        const T g_g = std::tanh(zs[2 * u + j]);
        const T o_g = sigmoid_scalar(zs[3 * u + j]);
        zs[j] = i_g;
        zs[u + j] = f_g;
        zs[2 * u + j] = g_g;
        zs[3 * u + j] = o_g;
        const std::size_t k = s * u + j;
        c[k] = f_g * c_prev[k] + i_g * g_g;
        h[k] = o_g * std::tanh(c[k]);
      }
    }
  }
  input_ = x;
  cached_ = true;
  return Tensor<T>({n, u}, hidden_[steps]);
}

template <typename T>
Tensor<T> Lstm<T>::backward(const Tensor<T>& grad_out, std::span<Tensor<T>> grads) {
  require_cached(cached_, "lstm");
  const std::size_t n = input_.dim(0), steps = input_.dim(1), u = units_, g4 = 4 * units_;
  require_same_shape(grad_out, {n, u}, "lstm");
  const auto stride = static_cast<Eigen::Index>(steps * g4);
  ConstMatrixMap<T> wh(params_[1].value.data(), u, g4);
  MatrixMap<T> gwh(grads[1].data(), u, g4);
  RowVectorMap<T> gb(grads[2].data(), g4);

  RowMatrix<T> dgates_all = RowMatrix<T>::Zero(static_cast<Eigen::Index>(n * steps),
                                               static_cast<Eigen::Index>(g4));
  std::vector<T> dh(grad_out.values().begin(), grad_out.values().end());
  std::vector<T> dc(n * u, T(0));
  RowMatrix<T> dz(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(g4));
  for (std::size_t t = steps; t-- > 0;) {
    const T* gates = gates_[t].data();
    const T* c = cells_[t + 1].data();
    const T* c_prev = cells_[t].data();
    for (std::size_t s = 0; s < n; ++s) {
      const T* gs = gates + s * g4;
      T* dzs = dz.data() + s * g4;
      for (std::size_t j = 0; j < u; ++j) {
        const std::size_t k = s * u + j;
        const T i_g = gs[j], f_g = gs[u + j], g_g = gs[2 * u + j], o_g = gs[3 * u + j];
        const T tanh_c = std::tanh(c[k]);
        const T d_o = dh[k] * tanh_c;
        const T d_c = dc[k] + dh[k] * o_g * (T(1) - tanh_c * tanh_c);
        dzs[j] = d_c * g_g * i_g * (T(1) - i_g);
        dzs[u + j] = d_c * c_prev[k] * f_g * (T(1) - f_g);
        dzs[2 * u + j] = d_c * i_g * (T(1) - g_g * g_g);
        dzs[3 * u + j] = d_o * o_g * (T(1) - o_g);
        dc[k] = d_c * f_g;
      }
    }
    StridedMap<T>(dgates_all.data() + t * g4, n, g4, Eigen::OuterStride<>(stride)) = dz;
    gwh.noalias() += ConstMatrixMap<T>(hidden_[t].data(), n, u).transpose() * dz;
    gb += dz.colwise().sum();
    MatrixMap<T>(dh.data(), n, u).noalias() = dz * wh.transpose();
  }
  ConstMatrixMap<T> xm(input_.data(), n * steps, inputs_);
  ConstMatrixMap<T> wx(params_[0].value.data(), inputs_, g4);
  MatrixMap<T>(grads[0].data(), inputs_, g4).noalias() += xm.transpose() * dgates_all;
  Tensor<T> dx(input_.shape());
  MatrixMap<T>(dx.data(), n * steps, inputs_).noalias() = dgates_all * wx.transpose();
  return dx;
}

// ---------------------------------------------------------------- Dropout

template <typename T>
Dropout<T>::Dropout(double rate, std::uint64_t seed) : rate_(rate), rng_(seed) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "dropout rate must lie in [0, 1)");
  }
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& x, Mode mode) {
  cached_ = true;
  if (mode == Mode::kInfer || rate_ == 0.0) {
    mask_.assign(x.size(), T(1));
    return x;
  }
  const T scale = static_cast<T>(1.0 / (1.0 - rate_));
  mask_.resize(x.size());
  Tensor<T> y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = rng_.uniform() < rate_ ? T(0) : scale;
    y[i] *= mask_[i];
  }
  return y;
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_out, std::span<Tensor<T>>) {
  require_cached(cached_, "dropout");
  if (grad_out.size() != mask_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "dropout: upstream gradient has wrong size");
  }
  Tensor<T> dx = grad_out;
  for (std::size_t i = 0; i < mask_.size(); ++i) dx[i] *= mask_[i];
  return dx;
}

template class Dense<float>;
template class Dense<double>;
template class Activation<float>;
template class Activation<double>;
template class Conv1d<float>;
template class Conv1d<double>;
template class MaxPool1d<float>;
template class MaxPool1d<double>;
template class Lstm<float>;
template class Lstm<double>;
template class Dropout<float>;
template class Dropout<double>;

}  // namespace iotad::nn
