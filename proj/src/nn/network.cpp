#include "iotad/nn/network.hpp"

#include <algorithm>
#include <atomic>

namespace iotad::nn {
namespace {

#ifdef NDEBUG
std::atomic<bool> g_finite_checks{false};
#else
std::atomic<bool> g_finite_checks{true};
#endif

template <typename T>
void check_finite(const Tensor<T>& t, std::size_t layer, const char* pass) {
  if (!t.all_finite()) {
    throw Error(ErrorCode::kDivergence, std::string("non-finite value in ") + pass +
                                            " pass at layer " + std::to_string(layer));
  }
}

}  // namespace

void set_finite_checks(bool enabled) { g_finite_checks = enabled; }
bool finite_checks_enabled() { return g_finite_checks; }

template <typename T>
bool GradientTape<T>::all_zero() const {
  return std::all_of(grads.begin(), grads.end(), [](const Tensor<T>& g) {
    return std::all_of(g.values().begin(), g.values().end(), [](T v) { return v == T(0); });
  });
}

template <typename T>
Sequential<T>::Sequential(const Sequential& other) : forward_done_(false) {
  for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

template <typename T>
Sequential<T>& Sequential<T>::operator=(const Sequential& other) {
  if (this != &other) {
    Sequential copy(other);
    *this = std::move(copy);
  }
  return *this;
}

template <typename T>
void Sequential<T>::add(std::unique_ptr<Layer<T>> layer) {
  layers_.push_back(std::move(layer));
  forward_done_ = false;
}

template <typename T>
std::vector<LayerSpec> Sequential<T>::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(l->spec());
  return out;
}

template <typename T>
void Sequential<T>::initialize(Rng& rng) {
  for (auto& l : layers_) l->initialize(rng);
}

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x, Mode mode) {
  Tensor<T> h = x;
  const bool check = g_finite_checks;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i]->forward(h, mode);
    if (check) check_finite(h, i, "forward");
  }
  forward_done_ = true;
  return h;
}

template <typename T>
BackwardResult<T> Sequential<T>::backward(const Tensor<T>& loss_grad) {
  if (!forward_done_) {
    throw Error(ErrorCode::kCalledBeforeForward, "backward called before forward");
  }
  BackwardResult<T> result;
  for (const auto* p : parameters()) result.tape.grads.emplace_back(p->value.shape());
  const bool check = g_finite_checks;
  // Parameter gradients of layer i start at this offset in the tape.
  std::vector<std::size_t> offsets(layers_.size() + 1, 0);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    offsets[i + 1] = offsets[i] + layers_[i]->parameters().size();
  }
  Tensor<T> g = loss_grad;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    std::span<Tensor<T>> grads(result.tape.grads.data() + offsets[i], offsets[i + 1] - offsets[i]);
    g = layers_[i]->backward(g, grads);
    if (check) check_finite(g, i, "backward");
  }
  result.input_grad = std::move(g);
  return result;
}

template <typename T>
std::vector<Parameter<T>*> Sequential<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (auto& l : layers_) {
    for (auto& p : l->parameters()) out.push_back(&p);
  }
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Sequential<T>::parameters() const {
  std::vector<const Parameter<T>*> out;
  for (const auto& l : layers_) {
    const Layer<T>& layer = *l;
    for (const auto& p : layer.parameters()) out.push_back(&p);
  }
  return out;
}

template <typename T>
std::vector<std::string> Sequential<T>::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer<T>& layer = *layers_[i];
    for (const auto& p : layer.parameters()) out.push_back(std::to_string(i) + "." + p.name);
  }
  return out;
}

template <typename T>
std::size_t Sequential<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto* p : parameters()) total += p->value.size();
  return total;
}

template <typename T>
std::vector<Tensor<T>> Sequential<T>::snapshot() const {
  std::vector<Tensor<T>> out;
  for (const auto* p : parameters()) out.push_back(p->value);
  return out;
}

template <typename T>
void Sequential<T>::restore(const std::vector<Tensor<T>>& values) {
  auto params = parameters();
  if (values.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "restore: expected " + std::to_string(params.size()) +
                                               " tensors, got " + std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].shape() != params[i]->value.shape()) {
      throw Error(ErrorCode::kShapeMismatch, "restore: shape mismatch for parameter " +
                                                 params[i]->name);
    }
    params[i]->value = values[i];
  }
}

template <typename T>
void sgd_step(std::span<Parameter<T>* const> params, const GradientTape<T>& tape, T lr) {
  if (tape.grads.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "sgd_step: tape does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i]->value;
    const auto& g = tape.grads[i];
    if (g.shape() != value.shape()) {
      throw Error(ErrorCode::kShapeMismatch, "sgd_step: gradient shape differs for " +
                                                 params[i]->name);
    }
    for (std::size_t k = 0; k < value.size(); ++k) value[k] -= lr * g[k];
  }
}

template <typename T>
Sgd<T>::Sgd(T learning_rate, T momentum) : lr_(learning_rate), momentum_(momentum) {
  if (!(momentum >= T(0) && momentum < T(1))) {
    throw Error(ErrorCode::kInvalidArgument, "momentum must lie in [0, 1)");
  }
}

template <typename T>
void Sgd<T>::step(Sequential<T>& net, const GradientTape<T>& tape) {
  auto params = net.parameters();
  if (momentum_ == T(0)) {
    sgd_step<T>(params, tape, lr_);
    return;
  }
  if (velocity_.empty()) {
    for (const auto* p : params) velocity_.emplace_back(p->value.shape());
  }
  if (tape.grads.size() != params.size() || velocity_.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "sgd: tape does not match parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& v = velocity_[i];
    auto& value = params[i]->value;
    const auto& g = tape.grads[i];
    for (std::size_t k = 0; k < value.size(); ++k) {
      v[k] = momentum_ * v[k] - lr_ * g[k];
      value[k] += v[k];
    }
  }
}

template struct GradientTape<float>;
template struct GradientTape<double>;
template class Sequential<float>;
template class Sequential<double>;
template class Sgd<float>;
template class Sgd<double>;
template void sgd_step<float>(std::span<Parameter<float>* const>, const GradientTape<float>&, float);
template void sgd_step<double>(std::span<Parameter<double>* const>, const GradientTape<double>&,
                               double);

}  // namespace iotad::nn
