#pragma once

#include "ufnd/optim.hpp"
#include "ufnd/tensor.hpp"

namespace ufnd::detail {

// y[n, out] = x[n, in] W[out, in]^T + b[out]
template <typename T>
BasicTensor<T> linear(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
  const std::size_t n = x.rows(), in = x.cols(), out = w.dim(0);
  if (w.dim(1) != in || b.size() != out) {
    throw ShapeError("linear: input " + shape_string(x.shape()) + " weight " +
                     shape_string(w.shape()) + " bias " + shape_string(b.shape()));
  }
  BasicTensor<T> y({n, out});
  linalg::mm_nt(x.data(), w.data(), y.data(), n, in, out);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = y.row(i);
    for (std::size_t j = 0; j < out; ++j) r[j] += b[j];
  }
  return y;
}

// Accumulates dW += dy^T x and db += colsum(dy); returns dx = dy W.
template <typename T>
BasicTensor<T> linear_backward(const BasicTensor<T>& dy, const BasicTensor<T>& x,
                               Parameter<T>& w, Parameter<T>& b) {
  const std::size_t n = x.rows(), in = x.cols(), out = w.value.dim(0);
  linalg::mm_tn(dy.data(), x.data(), w.grad.data(), out, n, in, true);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = dy.row(i);
    for (std::size_t j = 0; j < out; ++j) b.grad[j] += r[j];
  }
  BasicTensor<T> dx({n, in});
  linalg::mm(dy.data(), w.value.data(), dx.data(), n, out, in);
  return dx;
}

}  // namespace ufnd::detail
