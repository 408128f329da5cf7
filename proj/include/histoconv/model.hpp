#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "histoconv/layers.hpp"

namespace histoconv {

// Three conv blocks by default, each halving the spatial extents, then a
// two-layer dense head. Filters must grow block to block; the input must
// survive one 2x2 pool per block exactly.
struct ModelConfig {
  std::size_t input_h = 128;
  std::size_t input_w = 128;
  std::size_t channels = 3;
  std::vector<std::size_t> conv_filters = {32, 64, 128};
  std::size_t kernel = 3;
  std::size_t dense_units = 1024;
  double dropout = 0.5;
  std::size_t classes = 5;

  std::size_t pool_divisor() const { return std::size_t(1) << conv_filters.size(); }

  void validate() const {
    if (conv_filters.empty()) fail(ErrorCode::config, "conv_filters must not be empty");
    for (std::size_t i = 1; i < conv_filters.size(); ++i)
      if (conv_filters[i] <= conv_filters[i - 1])
        fail(ErrorCode::config, "conv_filters must be strictly increasing, got " +
                                    std::to_string(conv_filters[i - 1]) + " then " +
                                    std::to_string(conv_filters[i]));
    for (std::size_t f : conv_filters)
      if (f == 0) fail(ErrorCode::config, "conv filter counts must be >= 1");
    if (kernel % 2 == 0 || kernel == 0)
      fail(ErrorCode::config, "kernel extent must be odd, got " + std::to_string(kernel));
    if (channels == 0) fail(ErrorCode::config, "channels must be >= 1");
    if (dense_units == 0) fail(ErrorCode::config, "dense_units must be >= 1");
    if (classes < 2) fail(ErrorCode::config, "classes must be >= 2, got " + std::to_string(classes));
    if (!(dropout >= 0.0 && dropout < 1.0))
      fail(ErrorCode::config, "dropout must be in [0, 1), got " + std::to_string(dropout));
    const std::size_t d = pool_divisor();
    check_divisible(input_h, d, "height");
    check_divisible(input_w, d, "width");
  }

  std::size_t flatten_width() const {
    const std::size_t d = pool_divisor();
    return (input_h / d) * (input_w / d) * conv_filters.back();
  }

private:
  static void check_divisible(std::size_t v, std::size_t d, const char* which) {
    if (v == 0 || v % d != 0) {
      std::size_t lower = (v / d) * d;
      std::size_t upper = lower + d;
      std::size_t nearest = (lower != 0 && v - lower <= upper - v) ? lower : upper;
      fail(ErrorCode::config, "input " + std::string(which) + " " + std::to_string(v) +
                                  " is not divisible by " + std::to_string(d) +
                                  "; nearest valid size is " + std::to_string(nearest));
    }
  }
};

// Owns the layer stack and presents flat parameter/gradient lists in a fixed
// order (conv blocks first, then the dense head), which is also the
// initialization draw order and the checkpoint blob order.
template <typename T>
class Model {
public:
  Model(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    std::size_t in_ch = cfg_.channels;
    for (std::size_t b = 0; b < cfg_.conv_filters.size(); ++b) {
      auto conv = std::make_unique<Conv2d<T>>(in_ch, cfg_.conv_filters[b], cfg_.kernel,
                                              cfg_.kernel, 1, Padding::same, rng);
      const std::string stem = "conv" + std::to_string(b + 1);
      register_param(stem + ".kernels", conv->params()[0], conv->grads()[0]);
      register_param(stem + ".bias", conv->params()[1], conv->grads()[1]);
      layers_.push_back(std::move(conv));
      layers_.push_back(std::make_unique<ReLU<T>>());
      layers_.push_back(std::make_unique<MaxPool<T>>());
      in_ch = cfg_.conv_filters[b];
    }
    layers_.push_back(std::make_unique<Flatten<T>>());

    auto dense1 = std::make_unique<Dense<T>>(cfg_.flatten_width(), cfg_.dense_units, rng);
    register_param("dense1.weights", dense1->params()[0], dense1->grads()[0]);
    register_param("dense1.bias", dense1->params()[1], dense1->grads()[1]);
    layers_.push_back(std::move(dense1));
    layers_.push_back(std::make_unique<ReLU<T>>());
    layers_.push_back(std::make_unique<Dropout<T>>(cfg_.dropout));

    auto dense2 = std::make_unique<Dense<T>>(cfg_.dense_units, cfg_.classes, rng);
    register_param("dense2.weights", dense2->params()[0], dense2->grads()[0]);
    register_param("dense2.bias", dense2->params()[1], dense2->grads()[1]);
    layers_.push_back(std::move(dense2));
    layers_.push_back(std::make_unique<Softmax<T>>());
  }

  // One image through the full stack; returns the 1 x classes probability row.
  TensorT<T> forward(const TensorT<T>& image, Mode mode, Rng& rng) {
    if (image.rank() != 3 || image.extent(0) != cfg_.input_h || image.extent(1) != cfg_.input_w ||
        image.extent(2) != cfg_.channels)
      fail(ErrorCode::data,
           "model expects " + std::to_string(cfg_.input_h) + "x" + std::to_string(cfg_.input_w) +
               "x" + std::to_string(cfg_.channels) + " input, got " + shape_str(image.shape()));
    TensorT<T> x = image;
    for (auto& layer : layers_) x = layer->forward(x, mode, rng);
    return x;
  }

  // Fused softmax + cross-entropy backward: starts from scale * (probs -
  // onehot) at the softmax input and walks every layer except the softmax
  // itself. Parameter gradients accumulate, so a batch is a sequence of
  // forward/backward_fused pairs with scale = 1/batch_size between zero_grads
  // and the optimizer step.
  void backward_fused(const TensorT<T>& probs, const TensorT<T>& onehot, T scale) {
    require_same_shape(probs, onehot, "backward_fused");
    TensorT<T> g = sub(probs, onehot);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale;
    for (std::size_t li = layers_.size() - 1; li-- > 0;) g = layers_[li]->backward(g);
  }

  void zero_grads() {
    for (auto& layer : layers_) layer->zero_grads();
  }

  const std::vector<TensorT<T>*>& params() { return params_; }
  const std::vector<TensorT<T>*>& grads() { return grads_; }
  const std::vector<std::string>& param_names() const { return names_; }
  const ModelConfig& config() const { return cfg_; }

  TensorT<T>* param_by_name(const std::string& name) {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return params_[i];
    return nullptr;
  }

private:
  void register_param(std::string name, TensorT<T>* p, TensorT<T>* g) {
    names_.push_back(std::move(name));
    params_.push_back(p);
    grads_.push_back(g);
  }

  ModelConfig cfg_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
  std::vector<std::string> names_;
  std::vector<TensorT<T>*> params_;
  std::vector<TensorT<T>*> grads_;
};

}  // namespace histoconv
