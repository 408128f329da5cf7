#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "histoconv/rng.hpp"
#include "histoconv/tensor.hpp"

namespace histoconv {

enum class Mode { train, eval };
enum class Padding { same, valid };

// Fan-scaled uniform init: U(-sqrt(6/(fan_in+fan_out)), +...). Biases start at
// zero. Pinned so that a seed fully determines the initial parameters.
template <typename T>
void init_uniform_fan(TensorT<T>& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = static_cast<T>(rng.uniform(-bound, bound));
}

// One step of a sequential network. forward caches whatever backward needs
// (train mode only); backward consumes the cache and accumulates parameter
// gradients into the layer's grad buffers.
template <typename T>
class Layer {
public:
  virtual ~Layer() = default;

  virtual const char* kind() const = 0;
  virtual TensorT<T> forward(const TensorT<T>& x, Mode mode, Rng& rng) = 0;
  virtual TensorT<T> backward(const TensorT<T>& grad_out) = 0;

  virtual std::vector<TensorT<T>*> params() { return {}; }
  virtual std::vector<TensorT<T>*> grads() { return {}; }

  void zero_grads() {
    for (TensorT<T>* g : grads()) fill_zero(*g);
  }

protected:
  [[noreturn]] void missing_cache() const {
    fail(ErrorCode::internal, std::string(kind()) + " backward called without a cached forward");
  }
};

namespace detail {

// Patch matrix for the windowed weighted sums: one row per output position,
// columns ordered (ki, kj, channel) so the kernel tensor [k1][k2][Cin][Cout]
// flattens directly into the matching (k1*k2*Cin) x Cout matrix.
template <typename T>
TensorT<T> im2col(const TensorT<T>& padded, std::size_t k1, std::size_t k2, std::size_t stride,
                  std::size_t out_h, std::size_t out_w) {
  const std::size_t w = padded.extent(1), c = padded.extent(2);
  TensorT<T> cols({out_h * out_w, k1 * k2 * c});
  for (std::size_t oh = 0; oh < out_h; ++oh) {
    for (std::size_t ow = 0; ow < out_w; ++ow) {
      T* row = cols.data() + (oh * out_w + ow) * k1 * k2 * c;
      for (std::size_t ki = 0; ki < k1; ++ki) {
        const T* src = padded.data() + ((oh * stride + ki) * w + ow * stride) * c;
        std::copy(src, src + k2 * c, row + ki * k2 * c);
      }
    }
  }
  return cols;
}

template <typename T>
void col2im_add(const TensorT<T>& cols, TensorT<T>& padded, std::size_t k1, std::size_t k2,
                std::size_t stride, std::size_t out_h, std::size_t out_w) {
  const std::size_t w = padded.extent(1), c = padded.extent(2);
  for (std::size_t oh = 0; oh < out_h; ++oh) {
    for (std::size_t ow = 0; ow < out_w; ++ow) {
      const T* row = cols.data() + (oh * out_w + ow) * k1 * k2 * c;
      for (std::size_t ki = 0; ki < k1; ++ki) {
        T* dst = padded.data() + ((oh * stride + ki) * w + ow * stride) * c;
        const T* src = row + ki * k2 * c;
        for (std::size_t n = 0; n < k2 * c; ++n) dst[n] += src[n];
      }
    }
  }
}

}  // namespace detail

// 2-D convolution in the CNN sense (cross-correlation against learned
// kernels). Kernels are stored k1 x k2 x Cin x Cout, images H x W x C.
template <typename T>
class Conv2d : public Layer<T> {
public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel_h,
         std::size_t kernel_w, std::size_t stride, Padding padding, Rng& rng)
      : in_ch_(in_channels),
        out_ch_(out_channels),
        k1_(kernel_h),
        k2_(kernel_w),
        stride_(stride),
        padding_(padding),
        kernels_({k1_, k2_, in_ch_, out_ch_}),
        bias_({out_ch_}),
        dkernels_({k1_, k2_, in_ch_, out_ch_}),
        dbias_({out_ch_}) {
    if (stride_ == 0) fail(ErrorCode::config, "conv stride must be >= 1");
    if (padding_ == Padding::same && (k1_ % 2 == 0 || k2_ % 2 == 0))
      fail(ErrorCode::config, "same padding requires odd kernel extents, got " +
                                  std::to_string(k1_) + "x" + std::to_string(k2_));
    init_uniform_fan(kernels_, k1_ * k2_ * in_ch_, k1_ * k2_ * out_ch_, rng);
  }

  const char* kind() const override { return "conv2d"; }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, Rng&) override {
    if (x.rank() != 3 || x.extent(2) != in_ch_)
      fail(ErrorCode::internal, "conv2d expects HxWx" + std::to_string(in_ch_) + ", got " +
                                    shape_str(x.shape()));
    const std::size_t pad_h = padding_ == Padding::same ? (k1_ - 1) / 2 : 0;
    const std::size_t pad_w = padding_ == Padding::same ? (k2_ - 1) / 2 : 0;
    TensorT<T> padded = pad_zero(x, pad_h, pad_w);
    if (padded.extent(0) < k1_ || padded.extent(1) < k2_)
      fail(ErrorCode::data, "conv2d kernel " + std::to_string(k1_) + "x" + std::to_string(k2_) +
                                " larger than padded input " + shape_str(padded.shape()));
    const std::size_t out_h = (padded.extent(0) - k1_) / stride_ + 1;
    const std::size_t out_w = (padded.extent(1) - k2_) / stride_ + 1;

    TensorT<T> cols = detail::im2col(padded, k1_, k2_, stride_, out_h, out_w);
    TensorT<T> out_mat =
        matmul(cols, kernels_.reshaped({k1_ * k2_ * in_ch_, out_ch_}));
    for (std::size_t r = 0; r < out_h * out_w; ++r)
      for (std::size_t oc = 0; oc < out_ch_; ++oc) out_mat.at(r, oc) += bias_[oc];

    if (mode == Mode::train) {
      cols_cache_ = std::move(cols);
      in_h_ = x.extent(0);
      in_w_ = x.extent(1);
      out_h_ = out_h;
      out_w_ = out_w;
      pad_h_ = pad_h;
      pad_w_ = pad_w;
      has_cache_ = true;
    }
    return out_mat.reshaped({out_h, out_w, out_ch_});
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (!has_cache_) this->missing_cache();
    TensorT<T> dy = grad_out.reshaped({out_h_ * out_w_, out_ch_});

    for (std::size_t r = 0; r < dy.extent(0); ++r)
      for (std::size_t oc = 0; oc < out_ch_; ++oc) dbias_[oc] += dy.at(r, oc);

    TensorT<T> dk = matmul(transposed(cols_cache_), dy);
    add_inplace(dkernels_, dk.reshaped(kernels_.shape()));

    TensorT<T> dcols =
        matmul(dy, transposed(kernels_.reshaped({k1_ * k2_ * in_ch_, out_ch_})));
    TensorT<T> dpadded({in_h_ + 2 * pad_h_, in_w_ + 2 * pad_w_, in_ch_});
    detail::col2im_add(dcols, dpadded, k1_, k2_, stride_, out_h_, out_w_);
    has_cache_ = false;
    return crop_center(dpadded, pad_h_, pad_w_);
  }

  std::vector<TensorT<T>*> params() override { return {&kernels_, &bias_}; }
  std::vector<TensorT<T>*> grads() override { return {&dkernels_, &dbias_}; }

  TensorT<T>& kernels() { return kernels_; }
  TensorT<T>& bias() { return bias_; }

private:
  std::size_t in_ch_, out_ch_, k1_, k2_, stride_;
  Padding padding_;
  TensorT<T> kernels_, bias_, dkernels_, dbias_;
  TensorT<T> cols_cache_;
  std::size_t in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0, pad_h_ = 0, pad_w_ = 0;
  bool has_cache_ = false;
};

// 2x2 max pooling with stride 2. Odd trailing rows/columns are dropped; ties
// go to the first occurrence in row-major scan order.
template <typename T>
class MaxPool : public Layer<T> {
public:
  const char* kind() const override { return "maxpool"; }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, Rng&) override {
    if (x.rank() != 3) fail(ErrorCode::internal, "maxpool expects HxWxC, got " + shape_str(x.shape()));
    if (x.extent(0) < 2 || x.extent(1) < 2)
      fail(ErrorCode::data, "maxpool needs spatial extents >= 2, got " + shape_str(x.shape()));
    const std::size_t h = x.extent(0), w = x.extent(1), c = x.extent(2);
    const std::size_t oh = h / 2, ow = w / 2;
    TensorT<T> out({oh, ow, c});
    std::vector<std::size_t> argmax(oh * ow * c);
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        for (std::size_t ch = 0; ch < c; ++ch) {
          std::size_t best = ((2 * i) * w + 2 * j) * c + ch;
          T best_v = x[best];
          for (std::size_t di = 0; di < 2; ++di) {
            for (std::size_t dj = 0; dj < 2; ++dj) {
              const std::size_t idx = ((2 * i + di) * w + 2 * j + dj) * c + ch;
              if (x[idx] > best_v) {
                best_v = x[idx];
                best = idx;
              }
            }
          }
          out.at(i, j, ch) = best_v;
          argmax[(i * ow + j) * c + ch] = best;
        }
      }
    }
    if (mode == Mode::train) {
      argmax_ = std::move(argmax);
      in_shape_ = x.shape();
      has_cache_ = true;
    }
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (!has_cache_) this->missing_cache();
    TensorT<T> dx(in_shape_);
    for (std::size_t i = 0; i < grad_out.size(); ++i) dx[argmax_[i]] += grad_out[i];
    has_cache_ = false;
    return dx;
  }

private:
  std::vector<std::size_t> argmax_;
  Shape in_shape_;
  bool has_cache_ = false;
};

// Gradient at exactly 0 is defined as 0 (strict x > 0 mask).
template <typename T>
class ReLU : public Layer<T> {
public:
  const char* kind() const override { return "relu"; }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, Rng&) override {
    TensorT<T> out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], T(0));
    if (mode == Mode::train) {
      input_ = x;
      has_cache_ = true;
    }
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (!has_cache_) this->missing_cache();
    require_same_shape(grad_out, input_, "relu backward");
    TensorT<T> dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i)
      if (!(input_[i] > T(0))) dx[i] = T(0);
    has_cache_ = false;
    return dx;
  }

private:
  TensorT<T> input_;
  bool has_cache_ = false;
};

template <typename T>
class Sigmoid : public Layer<T> {
public:
  const char* kind() const override { return "sigmoid"; }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, Rng&) override {
    TensorT<T> out = x;
    for (std::size_t i = 0; i < out.size(); ++i)
      out[i] = T(1) / (T(1) + std::exp(-out[i]));
    if (mode == Mode::train) {
      output_ = out;
      has_cache_ = true;
    }
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (!has_cache_) this->missing_cache();
    TensorT<T> dx = grad_out;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= output_[i] * (T(1) - output_[i]);
    has_cache_ = false;
    return dx;
  }

private:
  TensorT<T> output_;
  bool has_cache_ = false;
};

// Inverted dropout: in train mode each element is zeroed with probability
// `rate` and survivors are scaled by 1/(1-rate), so eval mode is the identity
// and caches nothing.
template <typename T>
class Dropout : public Layer<T> {
public:
  explicit Dropout(double rate) : rate_(rate) {
    if (!(rate >= 0.0 && rate < 1.0))
      fail(ErrorCode::config, "dropout rate must be in [0, 1), got " + std::to_string(rate));
  }

  const char* kind() const override { return "dropout"; }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, Rng& rng) override {
    if (mode == Mode::eval || rate_ == 0.0) {
      if (mode == Mode::train) {
        mask_ = TensorT<T>::full(x.shape(), T(1));
        has_cache_ = true;
      }
      return x;
    }
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate_));
    mask_ = TensorT<T>(x.shape());
    TensorT<T> out = x;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const T m = rng.bernoulli(rate_) ? T(0) : keep_scale;
      mask_[i] = m;
      out[i] *= m;
    }
    has_cache_ = true;
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (!has_cache_) this->missing_cache();
    TensorT<T> dx = mul(grad_out, mask_);
    has_cache_ = false;
    return dx;
  }

  double rate() const { return rate_; }
  const TensorT<T>& mask() const { return mask_; }

private:
  double rate_;
  TensorT<T> mask_;
  bool has_cache_ = false;
};

// H x W x C feature map to a single 1 x D row for the dense head.
template <typename T>
class Flatten : public Layer<T> {
public:
  const char* kind() const override { return "flatten"; }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, Rng&) override {
    if (mode == Mode::train) {
      in_shape_ = x.shape();
      has_cache_ = true;
    }
    return x.reshaped({1, x.size()});
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (!has_cache_) this->missing_cache();
    has_cache_ = false;
    return grad_out.reshaped(in_shape_);
  }

private:
  Shape in_shape_;
  bool has_cache_ = false;
};

// x(N x D) * w(D x U) + b, bias broadcast across rows.
template <typename T>
class Dense : public Layer<T> {
public:
  Dense(std::size_t in_features, std::size_t units, Rng& rng)
      : in_(in_features),
        units_(units),
        weights_({in_, units_}),
        bias_({units_}),
        dweights_({in_, units_}),
        dbias_({units_}) {
    init_uniform_fan(weights_, in_, units_, rng);
  }

  const char* kind() const override { return "dense"; }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, Rng&) override {
    if (x.rank() != 2 || x.extent(1) != in_)
      fail(ErrorCode::internal, "dense expects Nx" + std::to_string(in_) + ", got " +
                                    shape_str(x.shape()));
    TensorT<T> out = matmul(x, weights_);
    for (std::size_t r = 0; r < out.extent(0); ++r)
      for (std::size_t u = 0; u < units_; ++u) out.at(r, u) += bias_[u];
    if (mode == Mode::train) {
      input_ = x;
      has_cache_ = true;
    }
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (!has_cache_) this->missing_cache();
    add_inplace(dweights_, matmul(transposed(input_), grad_out));
    for (std::size_t r = 0; r < grad_out.extent(0); ++r)
      for (std::size_t u = 0; u < units_; ++u) dbias_[u] += grad_out.at(r, u);
    TensorT<T> dx = matmul(grad_out, transposed(weights_));
    has_cache_ = false;
    return dx;
  }

  std::vector<TensorT<T>*> params() override { return {&weights_, &bias_}; }
  std::vector<TensorT<T>*> grads() override { return {&dweights_, &dbias_}; }

  TensorT<T>& weights() { return weights_; }
  TensorT<T>& bias() { return bias_; }

private:
  std::size_t in_, units_;
  TensorT<T> weights_, bias_, dweights_, dbias_, input_;
  bool has_cache_ = false;
};

// Row-wise softmax with max subtraction for stability. Standalone backward is
// provided, but the model pairs this layer with the cross-entropy loss and
// uses the fused (probs - onehot)/N gradient instead.
template <typename T>
class Softmax : public Layer<T> {
public:
  const char* kind() const override { return "softmax"; }

  TensorT<T> forward(const TensorT<T>& x, Mode mode, Rng&) override {
    if (x.rank() != 2) fail(ErrorCode::internal, "softmax expects NxC, got " + shape_str(x.shape()));
    TensorT<T> out = x;
    const std::size_t n = x.extent(0), c = x.extent(1);
    for (std::size_t r = 0; r < n; ++r) {
      T* row = out.data() + r * c;
      T mx = row[0];
      for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, row[j]);
      T sum = T(0);
      for (std::size_t j = 0; j < c; ++j) {
        row[j] = std::exp(row[j] - mx);
        sum += row[j];
      }
      for (std::size_t j = 0; j < c; ++j) row[j] /= sum;
    }
    if (mode == Mode::train) {
      output_ = out;
      has_cache_ = true;
    }
    return out;
  }

  TensorT<T> backward(const TensorT<T>& grad_out) override {
    if (!has_cache_) this->missing_cache();
    const std::size_t n = output_.extent(0), c = output_.extent(1);
    TensorT<T> dx({n, c});
    for (std::size_t r = 0; r < n; ++r) {
      T dot = T(0);
      for (std::size_t j = 0; j < c; ++j) dot += grad_out.at(r, j) * output_.at(r, j);
      for (std::size_t j = 0; j < c; ++j)
        dx.at(r, j) = output_.at(r, j) * (grad_out.at(r, j) - dot);
    }
    has_cache_ = false;
    return dx;
  }

private:
  TensorT<T> output_;
  bool has_cache_ = false;
};

// -(1/N) sum log p(true class), probabilities clamped to >= 1e-12 before the
// log. With debug_checks on, rows must sum to 1 within 1e-5 and carry exactly
// one label.
template <typename T>
T cross_entropy_loss(const TensorT<T>& probs, const TensorT<T>& onehot, bool debug_checks = false) {
  require_same_shape(probs, onehot, "cross_entropy_loss");
  if (probs.rank() != 2) fail(ErrorCode::internal, "cross_entropy_loss expects NxC");
  const std::size_t n = probs.extent(0), c = probs.extent(1);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (debug_checks) {
      double row_sum = 0.0, label_sum = 0.0;
      for (std::size_t j = 0; j < c; ++j) {
        row_sum += probs.at(r, j);
        label_sum += onehot.at(r, j);
      }
      if (std::abs(row_sum - 1.0) > 1e-5)
        fail(ErrorCode::numeric, "cross_entropy_loss: probability row " + std::to_string(r) +
                                     " sums to " + std::to_string(row_sum));
      if (std::abs(label_sum - 1.0) > 1e-9)
        fail(ErrorCode::numeric, "cross_entropy_loss: row " + std::to_string(r) +
                                     " must have exactly one label");
    }
    double p_true = 0.0;
    for (std::size_t j = 0; j < c; ++j)
      if (onehot.at(r, j) != T(0)) p_true += static_cast<double>(probs.at(r, j)) *
                                             static_cast<double>(onehot.at(r, j));
    total += -std::log(std::max(p_true, 1e-12));
  }
  return static_cast<T>(total / static_cast<double>(n));
}

// Fused gradient of mean cross-entropy w.r.t. the softmax input: (p - y)/N.
template <typename T>
TensorT<T> softmax_xent_backward(const TensorT<T>& probs, const TensorT<T>& onehot) {
  require_same_shape(probs, onehot, "softmax_xent_backward");
  const T inv_n = T(1) / static_cast<T>(probs.extent(0));
  TensorT<T> g = sub(probs, onehot);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= inv_n;
  return g;
}

}  // namespace histoconv
