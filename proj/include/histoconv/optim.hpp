#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "histoconv/error.hpp"
#include "histoconv/tensor.hpp"

namespace histoconv {

enum class OptimizerKind { sgd, adam, rmsprop, nadam };

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  if (s == "rmsprop") return OptimizerKind::rmsprop;
  if (s == "nadam") return OptimizerKind::nadam;
  fail(ErrorCode::config, "unknown optimizer '" + s + "' (expected sgd, adam, rmsprop or nadam)");
}

inline const char* optimizer_kind_name(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::rmsprop: return "rmsprop";
    case OptimizerKind::nadam: return "nadam";
  }
  fail(ErrorCode::internal, "bad optimizer kind");
}

// The Nadam paper-style momentum schedule divides the lookahead gradient term
// by a bias factor. "per_step" uses 1 - beta1^t, mirroring the m-hat
// correction; "literal" accumulates the product of the per-step beta1 powers,
// giving 1 - beta1^(t(t+1)/2).
enum class NadamDenominator { per_step, literal };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double rho = 0.9;  // rmsprop smoothing
  NadamDenominator nadam_denominator = NadamDenominator::per_step;
  bool nadam_corrected_v = false;

  void validate() const {
    // lr 0 is allowed on purpose: a zero-rate run is the standard control for
    // checking that nothing but the optimizer ever touches the parameters.
    if (!(lr >= 0.0))
      fail(ErrorCode::config, "learning rate must be >= 0, got " + std::to_string(lr));
    if (!(beta1 >= 0.0 && beta1 < 1.0))
      fail(ErrorCode::config, "beta1 must be in [0, 1), got " + std::to_string(beta1));
    if (!(beta2 >= 0.0 && beta2 < 1.0))
      fail(ErrorCode::config, "beta2 must be in [0, 1), got " + std::to_string(beta2));
    if (!(epsilon > 0.0))
      fail(ErrorCode::config, "epsilon must be > 0, got " + std::to_string(epsilon));
    if (!(rho >= 0.0 && rho < 1.0))
      fail(ErrorCode::config, "rho must be in [0, 1), got " + std::to_string(rho));
  }
};

// Decayed rate for a 0-based epoch index: lr / (1 + decay * epoch), so epoch 0
// trains at the configured rate.
inline double apply_decay(double lr, double decay, std::size_t epoch) {
  return lr / (1.0 + decay * static_cast<double>(epoch));
}

// Per-tensor update rules. State tensors (m, v, cache) must match the
// parameter shape; `t` is the 1-based update count. Arithmetic runs in double
// regardless of the parameter type so float32 training and float64 oracle
// checks share one code path.

template <typename T>
void sgd_step(TensorT<T>& w, const TensorT<T>& g, double lr) {
  require_same_shape(w, g, "sgd_step");
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = static_cast<T>(static_cast<double>(w[i]) - lr * static_cast<double>(g[i]));
}

template <typename T>
void adam_step(TensorT<T>& w, const TensorT<T>& g, TensorT<T>& m, TensorT<T>& v,
               std::size_t t, const OptimizerConfig& cfg) {
  require_same_shape(w, g, "adam_step");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
    const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double m_hat = mi / bc1;
    const double v_hat = vi / bc2;
    w[i] = static_cast<T>(static_cast<double>(w[i]) -
                          cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
  }
}

template <typename T>
void rmsprop_step(TensorT<T>& w, const TensorT<T>& g, TensorT<T>& cache,
                  const OptimizerConfig& cfg) {
  require_same_shape(w, g, "rmsprop_step");
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    const double ei = cfg.rho * static_cast<double>(cache[i]) + (1.0 - cfg.rho) * gi * gi;
    cache[i] = static_cast<T>(ei);
    w[i] = static_cast<T>(static_cast<double>(w[i]) -
                          cfg.lr * gi / (std::sqrt(ei) + cfg.epsilon));
  }
}

template <typename T>
void nadam_step(TensorT<T>& w, const TensorT<T>& g, TensorT<T>& m, TensorT<T>& v,
                std::size_t t, const OptimizerConfig& cfg) {
  require_same_shape(w, g, "nadam_step");
  const double td = static_cast<double>(t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, td);
  const double g_denom =
      cfg.nadam_denominator == NadamDenominator::per_step
          ? bc1
          : 1.0 - std::pow(cfg.beta1, td * (td + 1.0) / 2.0);
  const double look = std::pow(cfg.beta1, td + 1.0);
  const double bc2 = 1.0 - std::pow(cfg.beta2, td);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
    const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
    m[i] = static_cast<T>(mi);
    v[i] = static_cast<T>(vi);
    const double m_hat = mi / bc1;
    const double g_hat = gi / g_denom;
    const double m_tilde = look * m_hat + bc1 * g_hat;
    const double v_term = cfg.nadam_corrected_v ? std::sqrt(vi / bc2) : std::sqrt(vi);
    w[i] = static_cast<T>(static_cast<double>(w[i]) -
                          cfg.lr * m_tilde / (v_term + cfg.epsilon));
  }
}

// Stateful wrapper over the step functions: owns the moment buffers for a
// fixed parameter list and a shared 1-based step counter, bumped once per
// step() call before any tensor is touched.
template <typename T>
class Optimizer {
public:
  Optimizer(OptimizerConfig cfg, const std::vector<TensorT<T>*>& params) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.kind == OptimizerKind::adam || cfg_.kind == OptimizerKind::nadam) {
      for (const TensorT<T>* p : params) {
        m_.emplace_back(p->shape());
        v_.emplace_back(p->shape());
      }
    } else if (cfg_.kind == OptimizerKind::rmsprop) {
      for (const TensorT<T>* p : params) cache_.emplace_back(p->shape());
    }
    n_params_ = params.size();
  }

  void step(const std::vector<TensorT<T>*>& params, const std::vector<TensorT<T>*>& grads,
            double lr) {
    if (params.size() != n_params_ || grads.size() != n_params_)
      fail(ErrorCode::internal, "optimizer step with mismatched parameter list");
    ++t_;
    OptimizerConfig cfg = cfg_;
    cfg.lr = lr;
    for (std::size_t i = 0; i < params.size(); ++i) {
      switch (cfg_.kind) {
        case OptimizerKind::sgd:
          sgd_step(*params[i], *grads[i], lr);
          break;
        case OptimizerKind::adam:
          adam_step(*params[i], *grads[i], m_[i], v_[i], t_, cfg);
          break;
        case OptimizerKind::rmsprop:
          rmsprop_step(*params[i], *grads[i], cache_[i], cfg);
          break;
        case OptimizerKind::nadam:
          nadam_step(*params[i], *grads[i], m_[i], v_[i], t_, cfg);
          break;
      }
    }
  }

  std::size_t step_count() const { return t_; }
  const OptimizerConfig& config() const { return cfg_; }

private:
  OptimizerConfig cfg_;
  std::vector<TensorT<T>> m_, v_, cache_;
  std::size_t n_params_ = 0;
  std::size_t t_ = 0;
};

}  // namespace histoconv
