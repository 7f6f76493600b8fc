#include "ufnd/tensor.hpp"

#include <cmath>
#include <sstream>

namespace ufnd {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor data of length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_string(shape_));
  }
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_string(shape_));
  }
  return shape_[axis];
}

template <typename T>
void BasicTensor<T>::fill(T v) {
  for (auto& x : data_) x = v;
}

template <typename T>
void BasicTensor<T>::reshape(Shape shape) {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  for (auto x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

namespace linalg {

template <typename T>
void mm(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
        bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
  }
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    const T* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = arow[p];
      const T* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void mm_nt(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
           bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* brow = b + j * k;
      T s = T(0);
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      c[i * n + j] = accumulate ? c[i * n + j] + s : s;
    }
  }
}

template <typename T>
void mm_tn(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n,
           bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = T(0);
  }
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      T* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace linalg

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  auto mismatch = [&] {
    return ShapeError("matmul shape mismatch: " + shape_string(a.shape()) + " x " +
                      shape_string(b.shape()));
  };
  if (a.rank() < 2 || a.rank() > 3 || b.rank() < 2 || b.rank() > 3) throw mismatch();

  const bool a_batched = a.rank() == 3;
  const bool b_batched = b.rank() == 3;
  const std::size_t batch = a_batched ? a.dim(0) : (b_batched ? b.dim(0) : 1);
  if (a_batched && b_batched && a.dim(0) != b.dim(0)) throw mismatch();

  const std::size_t m = a.dim(a.rank() - 2);
  const std::size_t k = a.dim(a.rank() - 1);
  const std::size_t kb = b.dim(b.rank() - 2);
  const std::size_t n = b.dim(b.rank() - 1);
  if (k != kb) throw mismatch();

  Shape out_shape = (a_batched || b_batched) ? Shape{batch, m, n} : Shape{m, n};
  BasicTensor<T> out(out_shape);
  for (std::size_t s = 0; s < batch; ++s) {
    const T* ap = a.data() + (a_batched ? s * m * k : 0);
    const T* bp = b.data() + (b_batched ? s * k * n : 0);
    linalg::mm(ap, bp, out.data() + s * m * n, m, k, n);
  }
  return out;
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  if (a.rank() != 2) throw ShapeError("transpose expects rank 2, got " + shape_string(a.shape()));
  const std::size_t m = a.dim(0), n = a.dim(1);
  BasicTensor<T> out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = a(i, j);
  return out;
}

#define UFND_INSTANTIATE(T)                                                                  \
  template class BasicTensor<T>;                                                             \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> transpose(const BasicTensor<T>&);                                  \
  template void linalg::mm(const T*, const T*, T*, std::size_t, std::size_t, std::size_t,    \
                           bool);                                                            \
  template void linalg::mm_nt(const T*, const T*, T*, std::size_t, std::size_t, std::size_t, \
                              bool);                                                         \
  template void linalg::mm_tn(const T*, const T*, T*, std::size_t, std::size_t, std::size_t, \
                              bool);

UFND_INSTANTIATE(float)
UFND_INSTANTIATE(double)

#undef UFND_INSTANTIATE

}  // namespace ufnd
