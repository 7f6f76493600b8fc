#include "ufnd/classifier.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "linear.hpp"

namespace ufnd {

void HeadConfig::validate() const {
  if (d_in == 0 || h1 == 0 || h2 == 0 || n_classes == 0) {
    throw std::invalid_argument("head widths must be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("head dropout_rate must lie in [0, 1)");
  }
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) {
    throw std::invalid_argument("bn_momentum must lie in [0, 1]");
  }
  if (!(bn_eps > 0.0)) throw std::invalid_argument("bn_eps must be positive");
}

std::size_t param_count(const HeadConfig& c) {
  return (c.d_in * c.h1 + c.h1) + 2 * c.h1 + (c.h1 * c.h2 + c.h2) + 2 * c.h2 +
         (c.h2 * c.n_classes + c.n_classes);
}

template <typename T>
BatchNorm<T>::BatchNorm(const std::string& name, std::size_t width, double mom, double e)
    : gain(name + ".gain", BasicTensor<T>({width}, T(1))),
      bias(name + ".bias", BasicTensor<T>({width}, T(0))),
      running_mean({width}, T(0)),
      running_var({width}, T(1)),
      momentum(mom),
      eps(e) {}

template <typename T>
BasicTensor<T> bn_forward(const BasicTensor<T>& x, BatchNorm<T>& state, Mode mode,
                          BatchNormCache<T>* cache) {
  const std::size_t n = x.rows(), w = x.cols();
  if (w != state.gain.value.size()) {
    throw ShapeError("batch norm width " + std::to_string(state.gain.value.size()) +
                     " does not match input " + shape_string(x.shape()));
  }
  if (mode == Mode::train && n < 2) {
    throw std::logic_error("batch norm in train mode needs a batch of at least 2, got " +
                           std::to_string(n));
  }

  std::vector<double> mean(w, 0.0), var(w, 0.0);
  if (mode == Mode::train) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) mean[j] += x(i, j);
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) var[j] += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
    for (auto& v : var) v /= static_cast<double>(n);
    const double mom = state.momentum;
    for (std::size_t j = 0; j < w; ++j) {
      state.running_mean[j] = static_cast<T>((1.0 - mom) * state.running_mean[j] + mom * mean[j]);
      state.running_var[j] = static_cast<T>((1.0 - mom) * state.running_var[j] + mom * var[j]);
    }
  } else {
    for (std::size_t j = 0; j < w; ++j) {
      mean[j] = state.running_mean[j];
      var[j] = state.running_var[j];
    }
  }

  std::vector<T> inv(w);
  for (std::size_t j = 0; j < w; ++j) inv[j] = static_cast<T>(1.0 / std::sqrt(var[j] + state.eps));

  BasicTensor<T> out(x.shape());
  BasicTensor<T> xhat;
  if (cache) xhat = BasicTensor<T>(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < w; ++j) {
      const T nv = static_cast<T>((x(i, j) - mean[j]) * inv[j]);
      if (cache) xhat(i, j) = nv;
      out(i, j) = state.gain.value[j] * nv + state.bias.value[j];
    }
  }
  if (cache) {
    cache->normalized = std::move(xhat);
    cache->inv_std = std::move(inv);
    cache->mode = mode;
  }
  return out;
}

template <typename T>
BasicTensor<T> bn_backward(const BasicTensor<T>& dy, BatchNorm<T>& state,
                           const BatchNormCache<T>& cache) {
  const std::size_t n = dy.rows(), w = dy.cols();
  BasicTensor<T> dx(dy.shape());
  for (std::size_t j = 0; j < w; ++j) {
    T sum_dxhat = T(0), sum_dxhat_xhat = T(0);
    for (std::size_t i = 0; i < n; ++i) {
      const T g = dy(i, j);
      state.gain.grad[j] += g * cache.normalized(i, j);
      state.bias.grad[j] += g;
      const T dxhat = g * state.gain.value[j];
      sum_dxhat += dxhat;
      sum_dxhat_xhat += dxhat * cache.normalized(i, j);
    }
    const T inv = cache.inv_std[j];
    for (std::size_t i = 0; i < n; ++i) {
      const T dxhat = dy(i, j) * state.gain.value[j];
      if (cache.mode == Mode::train) {
        dx(i, j) = inv / static_cast<T>(n) *
                   (static_cast<T>(n) * dxhat - sum_dxhat - cache.normalized(i, j) * sum_dxhat_xhat);
      } else {
        dx(i, j) = dxhat * inv;
      }
    }
  }
  return dx;
}

template <typename T>
Head<T>::Head(HeadConfig cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  l1_w_ = Parameter<T>("head.l1.weight", xavier_init<T>({cfg_.h1, cfg_.d_in}, rng));
  l1_b_ = Parameter<T>("head.l1.bias", BasicTensor<T>({cfg_.h1}));
  bn1_ = BatchNorm<T>("head.bn1", cfg_.h1, cfg_.bn_momentum, cfg_.bn_eps);
  l2_w_ = Parameter<T>("head.l2.weight", xavier_init<T>({cfg_.h2, cfg_.h1}, rng));
  l2_b_ = Parameter<T>("head.l2.bias", BasicTensor<T>({cfg_.h2}));
  bn2_ = BatchNorm<T>("head.bn2", cfg_.h2, cfg_.bn_momentum, cfg_.bn_eps);
  l3_w_ = Parameter<T>("head.l3.weight", xavier_init<T>({cfg_.n_classes, cfg_.h2}, rng));
  l3_b_ = Parameter<T>("head.l3.bias", BasicTensor<T>({cfg_.n_classes}));
}

template <typename T>
std::uint64_t Head<T>::activation_signature() const {
  std::string bits;
  for (const auto* t : {&cache_.relu1, &cache_.relu2}) {
    bits.reserve(bits.size() + t->size());
    for (auto v : t->storage()) bits.push_back(v > T(0) ? '1' : '0');
  }
  return fnv1a64(bits);
}

template <typename T>
std::vector<Parameter<T>*> Head<T>::parameters() {
  return {&l1_w_, &l1_b_, &bn1_.gain, &bn1_.bias, &l2_w_, &l2_b_,
          &bn2_.gain, &bn2_.bias, &l3_w_, &l3_b_};
}

template <typename T>
std::vector<std::pair<std::string, BasicTensor<T>*>> Head<T>::buffers() {
  return {{"head.bn1.running_mean", &bn1_.running_mean},
          {"head.bn1.running_var", &bn1_.running_var},
          {"head.bn2.running_mean", &bn2_.running_mean},
          {"head.bn2.running_var", &bn2_.running_var}};
}

namespace {

template <typename T>
void relu_inplace(BasicTensor<T>& x) {
  for (auto& v : x.values()) v = v > T(0) ? v : T(0);
}

}  // namespace

template <typename T>
BasicTensor<T> Head<T>::forward(const BasicTensor<T>& pooled, Mode mode, Rng& rng) {
  if (pooled.rank() != 2 || pooled.cols() != cfg_.d_in) {
    throw ShapeError("head expects [batch x " + std::to_string(cfg_.d_in) + "], got " +
                     shape_string(pooled.shape()));
  }
  if (mode == Mode::train && pooled.rows() < 2) {
    throw std::logic_error("classifier head in train mode needs a batch of at least 2");
  }
  traced_widths_ = {pooled.cols()};
  cache_.input = pooled;

  auto z1 = detail::linear(pooled, l1_w_.value, l1_b_.value);
  traced_widths_.push_back(z1.cols());
  cache_.relu1 = bn_forward(z1, bn1_, mode, &cache_.bn1);
  relu_inplace(cache_.relu1);
  cache_.after_drop1 = dropout(cache_.relu1, cfg_.dropout_rate, mode, rng, &cache_.drop1);

  auto z2 = detail::linear(cache_.after_drop1, l2_w_.value, l2_b_.value);
  traced_widths_.push_back(z2.cols());
  cache_.relu2 = bn_forward(z2, bn2_, mode, &cache_.bn2);
  relu_inplace(cache_.relu2);
  cache_.after_drop2 = dropout(cache_.relu2, cfg_.dropout_rate, mode, rng, &cache_.drop2);

  auto z3 = detail::linear(cache_.after_drop2, l3_w_.value, l3_b_.value);
  traced_widths_.push_back(z3.cols());
  cache_.log_probs = log_softmax(z3);
  return cache_.log_probs;
}

template <typename T>
BasicTensor<T> Head<T>::backward(const BasicTensor<T>& d_log_probs) {
  auto dz3 = log_softmax_backward(cache_.log_probs, d_log_probs);
  auto da2 = detail::linear_backward(dz3, cache_.after_drop2, l3_w_, l3_b_);
  for (std::size_t i = 0; i < da2.size(); ++i) {
    if (!cache_.drop2.empty()) da2[i] *= cache_.drop2[i];
    if (cache_.relu2[i] <= T(0)) da2[i] = T(0);
  }
  auto dz2 = bn_backward(da2, bn2_, cache_.bn2);
  auto da1 = detail::linear_backward(dz2, cache_.after_drop1, l2_w_, l2_b_);
  for (std::size_t i = 0; i < da1.size(); ++i) {
    if (!cache_.drop1.empty()) da1[i] *= cache_.drop1[i];
    if (cache_.relu1[i] <= T(0)) da1[i] = T(0);
  }
  auto dz1 = bn_backward(da1, bn1_, cache_.bn1);
  return detail::linear_backward(dz1, cache_.input, l1_w_, l1_b_);
}

template <typename T>
std::vector<int> predict(const BasicTensor<T>& log_probs) {
  std::vector<int> out(log_probs.rows());
  for (std::size_t i = 0; i < log_probs.rows(); ++i) {
    auto r = log_probs.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

#define UFND_INSTANTIATE(T)                                                                    \
  template struct BatchNorm<T>;                                                                \
  template BasicTensor<T> bn_forward(const BasicTensor<T>&, BatchNorm<T>&, Mode,               \
                                     BatchNormCache<T>*);                                      \
  template BasicTensor<T> bn_backward(const BasicTensor<T>&, BatchNorm<T>&,                    \
                                      const BatchNormCache<T>&);                               \
  template class Head<T>;                                                                      \
  template std::vector<int> predict(const BasicTensor<T>&);

UFND_INSTANTIATE(float)
UFND_INSTANTIATE(double)

#undef UFND_INSTANTIATE

}  // namespace ufnd
