#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ufnd/rng.hpp"
#include "ufnd/tensor.hpp"

namespace ufnd {

enum class Mode { train, eval };

// GELU is evaluated with the exact erf form x * Phi(x).
inline constexpr std::string_view gelu_variant = "erf";

template <typename T>
T gelu(T x);
template <typename T>
T gelu_grad(T x);
template <typename T>
BasicTensor<T> gelu(const BasicTensor<T>& x);

// Log-softmax along the last axis with max subtraction.
template <typename T>
BasicTensor<T> log_softmax(const BasicTensor<T>& x);
// Given y = log_softmax(x) and dL/dy, returns dL/dx.
template <typename T>
BasicTensor<T> log_softmax_backward(const BasicTensor<T>& y, const BasicTensor<T>& dy);

// In-place softmax of one row restricted to positions where keep[j] != 0.
// Dropped positions get exactly zero weight. Throws if nothing is kept.
template <typename T>
void masked_softmax_row(std::span<T> row, std::span<const std::uint8_t> keep);

template <typename T>
struct LayerNormCache {
  BasicTensor<T> normalized;  // pre-affine x-hat
  std::vector<T> inv_std;     // per row
};

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain,
                          const BasicTensor<T>& bias, T eps,
                          LayerNormCache<T>* cache = nullptr);

// Returns dL/dx; accumulates into d_gain / d_bias.
template <typename T>
BasicTensor<T> layer_norm_backward(const BasicTensor<T>& dy, const BasicTensor<T>& gain,
                                   const LayerNormCache<T>& cache, BasicTensor<T>& d_gain,
                                   BasicTensor<T>& d_bias);

// Inverted dropout. In eval mode, or when rate == 0, returns x unchanged and
// leaves `mask_out` empty. Otherwise `mask_out` (when given) receives the
// per-entry multiplier (0 or 1/(1-rate)).
template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& x, double rate, Mode mode, Rng& rng,
                       std::vector<T>* mask_out = nullptr);

// Glorot uniform on [-sqrt(6/(fan_in+fan_out)), +sqrt(...)]; shape is
// [fan_out, fan_in] (or any shape whose last two axes are those fans).
template <typename T>
BasicTensor<T> xavier_init(const Shape& shape, Rng& rng);

template <typename T>
struct NllResult {
  T loss = T(0);
  BasicTensor<T> grad;  // dL/dlog_probs
};

// Mean negative log-likelihood over the batch.
template <typename T>
NllResult<T> nll_loss(const BasicTensor<T>& log_probs, std::span<const int> targets);

}  // namespace ufnd
