#include "ufnd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ufnd {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

template <typename T>
T gelu(T x) {
  return static_cast<T>(0.5 * x * (1.0 + std::erf(x * kInvSqrt2)));
}

template <typename T>
T gelu_grad(T x) {
  const double xd = x;
  const double cdf = 0.5 * (1.0 + std::erf(xd * kInvSqrt2));
  const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xd * xd);
  return static_cast<T>(cdf + xd * pdf);
}

template <typename T>
BasicTensor<T> gelu(const BasicTensor<T>& x) {
  BasicTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gelu(x[i]);
  return out;
}

template <typename T>
BasicTensor<T> log_softmax(const BasicTensor<T>& x) {
  if (x.cols() == 0) throw ShapeError("log_softmax over an empty axis");
  BasicTensor<T> out(x.shape());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto o = out.row(r);
    const T mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (auto v : in) sum += std::exp(static_cast<double>(v - mx));
    // Shift first so entries near the max keep their precision.
    const double log_sum = std::log(sum);
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = static_cast<T>(static_cast<double>(in[j] - mx) - log_sum);
    }
  }
  return out;
}

template <typename T>
BasicTensor<T> log_softmax_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy) {
  if (y.shape() != dy.shape()) {
    throw ShapeError("log_softmax_backward shape mismatch: " + shape_string(y.shape()) + " vs " +
                     shape_string(dy.shape()));
  }
  BasicTensor<T> dx(y.shape());
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto yr = y.row(r);
    auto dyr = dy.row(r);
    auto dxr = dx.row(r);
    T total = T(0);
    for (auto g : dyr) total += g;
    for (std::size_t j = 0; j < yr.size(); ++j) dxr[j] = dyr[j] - std::exp(yr[j]) * total;
  }
  return dx;
}

template <typename T>
void masked_softmax_row(std::span<T> row, std::span<const std::uint8_t> keep) {
  T mx = -std::numeric_limits<T>::infinity();
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (keep[j]) mx = std::max(mx, row[j]);
  }
  if (mx == -std::numeric_limits<T>::infinity()) {
    throw std::logic_error("softmax row has no unmasked positions");
  }
  T sum = T(0);
  for (std::size_t j = 0; j < row.size(); ++j) {
    row[j] = keep[j] ? std::exp(row[j] - mx) : T(0);
    sum += row[j];
  }
  for (auto& v : row) v /= sum;
}

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain,
                          const BasicTensor<T>& bias, T eps, LayerNormCache<T>* cache) {
  const std::size_t d = x.cols();
  if (d == 0) throw ShapeError("layer_norm over an empty axis");
  if (gain.size() != d || bias.size() != d) {
    throw ShapeError("layer_norm gain/bias " + shape_string(gain.shape()) + "/" +
                     shape_string(bias.shape()) + " do not match last axis of " +
                     shape_string(x.shape()));
  }
  BasicTensor<T> out(x.shape());
  if (cache) {
    cache->normalized = BasicTensor<T>(x.shape());
    cache->inv_std.assign(x.rows(), T(0));
  }
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    double mean = 0.0;
    for (auto v : in) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (auto v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + static_cast<double>(eps));
    auto o = out.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const T xhat = static_cast<T>((in[j] - mean) * inv);
      if (cache) cache->normalized(r, j) = xhat;
      o[j] = gain[j] * xhat + bias[j];
    }
    if (cache) cache->inv_std[r] = static_cast<T>(inv);
  }
  return out;
}

template <typename T>
BasicTensor<T> layer_norm_backward(const BasicTensor<T>& dy, const BasicTensor<T>& gain,
                                   const LayerNormCache<T>& cache, BasicTensor<T>& d_gain,
                                   BasicTensor<T>& d_bias) {
  const std::size_t d = dy.cols();
  BasicTensor<T> dx(dy.shape());
  std::vector<T> dxhat(d);
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    auto g = dy.row(r);
    auto xhat = cache.normalized.row(r);
    T sum_dxhat = T(0), sum_dxhat_xhat = T(0);
    for (std::size_t j = 0; j < d; ++j) {
      d_gain[j] += g[j] * xhat[j];
      d_bias[j] += g[j];
      dxhat[j] = g[j] * gain[j];
      sum_dxhat += dxhat[j];
      sum_dxhat_xhat += dxhat[j] * xhat[j];
    }
    const T scale = cache.inv_std[r] / static_cast<T>(d);
    auto o = dx.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      o[j] = scale * (static_cast<T>(d) * dxhat[j] - sum_dxhat - xhat[j] * sum_dxhat_xhat);
    }
  }
  return dx;
}

template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, Mode mode, Rng& rng,
                       std::vector<T>* mask_out) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (mask_out) mask_out->clear();
  if (mode == Mode::eval || rate == 0.0) return x;

  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  BasicTensor<T> out(x.shape());
  if (mask_out) mask_out->resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T m = rng.uniform() < rate ? T(0) : keep_scale;
    out[i] = x[i] * m;
    if (mask_out) (*mask_out)[i] = m;
  }
  return out;
}

template <typename T>
BasicTensor<T> xavier_init(const Shape& shape, Rng& rng) {
  if (shape.size() < 2 || shape[0] == 0 || shape[1] == 0) {
    throw ShapeError("xavier_init expects [fan_out, fan_in] with both >= 1, got " +
                     shape_string(shape));
  }
  const double fan_out = static_cast<double>(shape[shape.size() - 2]);
  const double fan_in = static_cast<double>(shape[shape.size() - 1]);
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  BasicTensor<T> out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
  }
  return out;
}

template <typename T>
NllResult<T> nll_loss(const BasicTensor<T>& log_probs, std::span<const int> targets) {
  if (log_probs.rank() != 2 || log_probs.dim(0) != targets.size()) {
    throw ShapeError("nll_loss expects [batch, classes] log-probs matching " +
                     std::to_string(targets.size()) + " targets, got " +
                     shape_string(log_probs.shape()));
  }
  const std::size_t batch = targets.size();
  const std::size_t classes = log_probs.dim(1);
  if (batch == 0) throw std::invalid_argument("nll_loss on an empty batch");

  NllResult<T> result;
  result.grad = BasicTensor<T>(log_probs.shape());
  double total = 0.0;
  const T g = static_cast<T>(-1.0 / static_cast<double>(batch));
  for (std::size_t i = 0; i < batch; ++i) {
    const int t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= classes) {
      throw std::invalid_argument("nll_loss target " + std::to_string(t) + " out of range at row " +
                                  std::to_string(i));
    }
    total -= log_probs(i, static_cast<std::size_t>(t));
    result.grad(i, static_cast<std::size_t>(t)) = g;
  }
  result.loss = static_cast<T>(total / static_cast<double>(batch));
  return result;
}

#define UFND_INSTANTIATE(T)                                                                     \
  template T gelu(T);                                                                           \
  template T gelu_grad(T);                                                                      \
  template BasicTensor<T> gelu(const BasicTensor<T>&);                                          \
  template BasicTensor<T> log_softmax(const BasicTensor<T>&);                                   \
  template BasicTensor<T> log_softmax_backward(const BasicTensor<T>&, const BasicTensor<T>&);   \
  template void masked_softmax_row(std::span<T>, std::span<const std::uint8_t>);                \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&,              \
                                     const BasicTensor<T>&, T, LayerNormCache<T>*);             \
  template BasicTensor<T> layer_norm_backward(const BasicTensor<T>&, const BasicTensor<T>&,     \
                                              const LayerNormCache<T>&, BasicTensor<T>&,        \
                                              BasicTensor<T>&);                                 \
  template BasicTensor<T> dropout(const BasicTensor<T>&, double, Mode, Rng&, std::vector<T>*); \
  template BasicTensor<T> xavier_init(const Shape&, Rng&);                                      \
  template NllResult<T> nll_loss(const BasicTensor<T>&, std::span<const int>);

UFND_INSTANTIATE(float)
UFND_INSTANTIATE(double)

#undef UFND_INSTANTIATE

}  // namespace ufnd
