#include "ufnd/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace ufnd {

template <typename T>
double global_grad_norm(std::span<Parameter<T>* const> params) {
  double sq = 0.0;
  for (const auto* p : params) {
    for (auto g : p->grad.values()) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(sq);
}

template <typename T>
double clip_global_norm(std::span<Parameter<T>* const> params, double clip) {
  if (!(clip > 0.0)) throw std::invalid_argument("clip must be positive");
  const double norm = global_grad_norm<T>(params);
  if (norm > clip) {
    const T scale = static_cast<T>(clip / norm);
    for (auto* p : params) {
      for (auto& g : p->grad.values()) g *= scale;
    }
  }
  return norm;
}

template <typename T>
void adam_step(Parameter<T>& param, AdamState<T>& state, const AdamConfig& cfg) {
  if (state.m.shape() != param.value.shape() || state.v.shape() != param.value.shape()) {
    throw ShapeError("adam state " + shape_string(state.m.shape()) + " does not match parameter " +
                     param.name + " " + shape_string(param.value.shape()));
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  for (std::size_t i = 0; i < param.value.size(); ++i) {
    const T g = param.grad[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    param.value[i] -= static_cast<T>(cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
  }
}

template <typename T>
Adam<T>::Adam(std::vector<Parameter<T>*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (!(cfg_.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  states_.reserve(params_.size());
  for (auto* p : params_) states_.emplace_back(p->value.shape());
}

template <typename T>
void Adam<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) adam_step(*params_[i], states_[i], cfg_);
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

#define UFND_INSTANTIATE(T)                                                        \
  template double global_grad_norm(std::span<Parameter<T>* const>);                \
  template double clip_global_norm(std::span<Parameter<T>* const>, double);        \
  template void adam_step(Parameter<T>&, AdamState<T>&, const AdamConfig&);        \
  template class Adam<T>;

UFND_INSTANTIATE(float)
UFND_INSTANTIATE(double)

#undef UFND_INSTANTIATE

}  // namespace ufnd
