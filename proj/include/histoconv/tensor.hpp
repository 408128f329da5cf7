#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "histoconv/error.hpp"
#include "histoconv/parallel.hpp"

namespace histoconv {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense row-major tensor. Images are stored channel-last (H x W x C). Values
// are float for training; the double instantiation backs gradient checking.
// Tensors are treated as immutable once built except for the explicit in-place
// parameter updates done by the optimizers.
template <typename T>
class TensorT {
public:
  TensorT() = default;

  explicit TensorT(Shape shape) : shape_(std::move(shape)) {
    validate_extents();
    data_.assign(shape_numel(shape_), T(0));
  }

  TensorT(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    validate_extents();
    if (data_.size() != shape_numel(shape_))
      fail(ErrorCode::internal, "tensor data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape_str(shape_));
  }

  static TensorT zeros(Shape shape) { return TensorT(std::move(shape)); }

  static TensorT full(Shape shape, T value) {
    TensorT t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_[axis]; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& at(std::size_t i) { return data_[i]; }
  const T& at(std::size_t i) const { return data_[i]; }
  T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  T& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data_[((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  TensorT reshaped(Shape new_shape) const {
    if (shape_numel(new_shape) != size())
      fail(ErrorCode::internal,
           "cannot reshape " + shape_str(shape_) + " to " + shape_str(new_shape));
    return TensorT(std::move(new_shape), data_);
  }

  bool all_finite() const {
    for (const T v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  void require_finite(const char* what) const {
    if (!all_finite()) fail(ErrorCode::numeric, std::string("non-finite values in ") + what);
  }

private:
  void validate_extents() const {
    for (const std::size_t e : shape_)
      if (e == 0) fail(ErrorCode::internal, "tensor extent must be positive: " + shape_str(shape_));
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

template <typename T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* op) {
  if (a.shape() != b.shape())
    fail(ErrorCode::internal, std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                  " vs " + shape_str(b.shape()));
}

// Standard matrix product. Each output element accumulates over k in ascending
// order (row-major loop), so results are bit-reproducible for a given build;
// the row parallelism does not change any per-element accumulation order.
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0))
    fail(ErrorCode::internal,
         "matmul: incompatible shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  TensorT<T> out({m, n});
  const T* pa = a.data();
  const T* pb = b.data();
  T* pc = out.data();
  const long long rows = static_cast<long long>(m);
#pragma omp parallel for schedule(static) num_threads(worker_count()) \
    if (m * n * k > 16384 && m > 1)
  for (long long i = 0; i < rows; ++i) {
    T* crow = pc + static_cast<std::size_t>(i) * n;
    const T* arow = pa + static_cast<std::size_t>(i) * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const T aik = arow[kk];
      const T* brow = pb + kk * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return out;
}

template <typename T>
TensorT<T> transposed(const TensorT<T>& a) {
  if (a.rank() != 2) fail(ErrorCode::internal, "transpose expects a matrix, got " + shape_str(a.shape()));
  const std::size_t m = a.extent(0), n = a.extent(1);
  TensorT<T> out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a.at(i, j);
  return out;
}

// Zero padding of the two spatial axes of an H x W x C tensor.
template <typename T>
TensorT<T> pad_zero(const TensorT<T>& x, std::size_t pad_h, std::size_t pad_w) {
  if (x.rank() != 3) fail(ErrorCode::internal, "pad_zero expects HxWxC, got " + shape_str(x.shape()));
  if (pad_h == 0 && pad_w == 0) return x;
  const std::size_t h = x.extent(0), w = x.extent(1), c = x.extent(2);
  TensorT<T> out({h + 2 * pad_h, w + 2 * pad_w, c});
  for (std::size_t i = 0; i < h; ++i) {
    const T* src = x.data() + i * w * c;
    T* dst = out.data() + ((i + pad_h) * (w + 2 * pad_w) + pad_w) * c;
    std::copy(src, src + w * c, dst);
  }
  return out;
}

template <typename T>
TensorT<T> crop_center(const TensorT<T>& x, std::size_t pad_h, std::size_t pad_w) {
  if (x.rank() != 3) fail(ErrorCode::internal, "crop_center expects HxWxC");
  if (pad_h == 0 && pad_w == 0) return x;
  const std::size_t h = x.extent(0) - 2 * pad_h, w = x.extent(1) - 2 * pad_w, c = x.extent(2);
  TensorT<T> out({h, w, c});
  for (std::size_t i = 0; i < h; ++i) {
    const T* src = x.data() + ((i + pad_h) * x.extent(1) + pad_w) * c;
    std::copy(src, src + w * c, out.data() + i * w * c);
  }
  return out;
}

// Pointwise operations. No broadcasting beyond the scalar overloads: shapes
// must match exactly.
template <typename T>
TensorT<T> add(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "add");
  TensorT<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

template <typename T>
TensorT<T> sub(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "sub");
  TensorT<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

template <typename T>
TensorT<T> mul(const TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "mul");
  TensorT<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

template <typename T>
TensorT<T> scale(const TensorT<T>& a, T s) {
  TensorT<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return out;
}

template <typename T>
void add_inplace(TensorT<T>& a, const TensorT<T>& b) {
  require_same_shape(a, b, "add_inplace");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
}

template <typename T>
void fill_zero(TensorT<T>& a) {
  std::fill(a.vec().begin(), a.vec().end(), T(0));
}

}  // namespace histoconv
