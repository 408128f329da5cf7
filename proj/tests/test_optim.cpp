#include <cmath>

#include "doctest.h"
#include "histoconv/error.hpp"
#include "histoconv/optim.hpp"
#include "support/optim_compare.hpp"
#include "support/oracles.hpp"

using namespace histoconv;

TEST_SUITE("optim") {

TEST_CASE("kind names round trip") {
  for (const char* name : {"sgd", "adam", "rmsprop", "nadam"})
    CHECK(optimizer_kind_name(optimizer_kind_from_string(name)) == std::string(name));
  CHECK_THROWS_WITH_AS(optimizer_kind_from_string("adamw"), doctest::Contains("unknown optimizer"),
                       Error);
}

TEST_CASE("config validation") {
  OptimizerConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.lr = 0.0;  // the zero-rate control run is allowed
  CHECK_NOTHROW(cfg.validate());
  cfg.lr = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = OptimizerConfig{};
  cfg.beta1 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = OptimizerConfig{};
  cfg.beta2 = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = OptimizerConfig{};
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = OptimizerConfig{};
  cfg.rho = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("sgd single step") {
  Tensor64 w = Tensor64::full({1}, 1.0);
  Tensor64 g = Tensor64::full({1}, 0.5);
  sgd_step(w, g, 0.01);
  CHECK(w[0] == doctest::Approx(0.995).epsilon(1e-12));
}

TEST_CASE("sgd closed form on the scalar quadratic") {
  // C(w) = w^2, gradient 2w, lr 0.1: w_t = 0.8^t exactly.
  Tensor64 w = Tensor64::full({1}, 1.0);
  Tensor64 g({1});
  for (int t = 1; t <= 100; ++t) {
    g[0] = 2.0 * w[0];
    sgd_step(w, g, 0.1);
    CHECK(std::abs(w[0] - std::pow(0.8, t)) <= 1e-12);
  }
}

TEST_CASE("sgd stability boundary on the scalar quadratic") {
  // C(w) = L/2 w^2 with L = 4: gradient descent converges iff lr < 2/L.
  const double L = 4.0;
  auto run = [&](double lr) {
    Tensor64 w = Tensor64::full({1}, 1.0);
    Tensor64 g({1});
    for (int t = 0; t < 500; ++t) {
      g[0] = L * w[0];
      sgd_step(w, g, lr);
    }
    return std::abs(w[0]);
  };
  CHECK(run(1.9 / L) < 1e-12);   // |1 - lr L| = 0.9
  CHECK(run(2.1 / L) > 1e10);    // |1 - lr L| = 1.1
}

TEST_CASE("adam first step") {
  OptimizerConfig cfg;
  cfg.lr = 1e-3;
  Tensor64 w = Tensor64::zeros({1});
  Tensor64 g = Tensor64::full({1}, 0.1);
  Tensor64 m = Tensor64::zeros({1}), v = Tensor64::zeros({1});
  adam_step(w, g, m, v, 1, cfg);
  CHECK(std::abs(w[0] - (-0.001)) <= 1e-6);
}

TEST_CASE("adam first-step magnitude is a bias-corrected sign step") {
  OptimizerConfig cfg;
  cfg.lr = 1e-3;
  for (double mag : {1e-6, 1e-4, 1e-2, 1.0, 1e2, 1e4, 1e6}) {
    for (double sign : {1.0, -1.0}) {
      Tensor64 w = Tensor64::zeros({1});
      Tensor64 g = Tensor64::full({1}, sign * mag);
      Tensor64 m = Tensor64::zeros({1}), v = Tensor64::zeros({1});
      adam_step(w, g, m, v, 1, cfg);
      const double step = std::abs(w[0]);
      CHECK(step >= 0.99 * cfg.lr);
      CHECK(step <= cfg.lr);
    }
  }
}

TEST_CASE("rmsprop first step") {
  OptimizerConfig cfg;
  cfg.lr = 1e-3;
  Tensor64 w = Tensor64::zeros({1});
  Tensor64 g = Tensor64::full({1}, 0.5);
  Tensor64 cache = Tensor64::zeros({1});
  rmsprop_step(w, g, cache, cfg);
  CHECK(cache[0] == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(std::abs(w[0] - (-3.1623e-3)) <= 1e-6);
}

TEST_CASE("rmsprop settles into a fixed-size step under a constant gradient") {
  OptimizerConfig cfg;
  cfg.lr = 1e-3;
  Tensor64 w = Tensor64::zeros({1});
  Tensor64 g = Tensor64::full({1}, 0.5);
  Tensor64 cache = Tensor64::zeros({1});
  double prev = 0.0;
  for (int t = 0; t < 500; ++t) {
    prev = w[0];
    rmsprop_step(w, g, cache, cfg);
  }
  // E[g^2] -> g^2, so the step approaches lr * g / |g| = lr.
  CHECK(std::abs(std::abs(w[0] - prev) - cfg.lr) <= 0.01 * cfg.lr);
}

TEST_CASE("nadam first step matches the pinned value") {
  OptimizerConfig cfg;
  cfg.lr = 1e-3;
  Tensor64 w = Tensor64::zeros({1});
  Tensor64 g = Tensor64::full({1}, 1.0);
  Tensor64 m = Tensor64::zeros({1}), v = Tensor64::zeros({1});
  nadam_step(w, g, m, v, 1, cfg);
  // m1=0.1, v1=0.001, mhat=1, ghat=10, mtilde=0.81+1.0=1.81,
  // step = 1e-3 * 1.81 / (sqrt(0.001) + 1e-8)
  const double expected = -1e-3 * 1.81 / (std::sqrt(0.001) + 1e-8);
  CHECK(std::abs(w[0] - expected) <= 1e-6);
  CHECK(std::abs(w[0] - (-0.05724)) <= 5e-6);
}

TEST_CASE("nadam denominator variants agree at t=1 and split afterwards") {
  OptimizerConfig per = {};
  per.lr = 1e-3;
  per.nadam_denominator = NadamDenominator::per_step;
  OptimizerConfig lit = per;
  lit.nadam_denominator = NadamDenominator::literal;

  Tensor64 wp = Tensor64::zeros({1}), wl = Tensor64::zeros({1});
  Tensor64 mp = Tensor64::zeros({1}), vp = Tensor64::zeros({1});
  Tensor64 ml = Tensor64::zeros({1}), vl = Tensor64::zeros({1});
  Tensor64 g = Tensor64::full({1}, 1.0);

  nadam_step(wp, g, mp, vp, 1, per);
  nadam_step(wl, g, ml, vl, 1, lit);
  CHECK(wp[0] == wl[0]);  // triangular exponent t(t+1)/2 equals t at t=1

  nadam_step(wp, g, mp, vp, 2, per);
  nadam_step(wl, g, ml, vl, 2, lit);
  CHECK(wp[0] != wl[0]);
}

TEST_CASE("zero gradient with zero state leaves every optimizer unchanged") {
  OptimizerConfig cfg;
  Tensor64 g = Tensor64::zeros({3});
  const double w0[3] = {1.5, -2.0, 0.25};

  auto fresh = [&]() {
    Tensor64 w({3});
    for (int i = 0; i < 3; ++i) w[i] = w0[i];
    return w;
  };
  auto unchanged = [&](const Tensor64& w) {
    for (int i = 0; i < 3; ++i) CHECK(w[i] == w0[i]);
  };

  Tensor64 w = fresh();
  sgd_step(w, g, 0.1);
  unchanged(w);

  w = fresh();
  Tensor64 m = Tensor64::zeros({3}), v = Tensor64::zeros({3});
  adam_step(w, g, m, v, 1, cfg);
  unchanged(w);

  w = fresh();
  Tensor64 cache = Tensor64::zeros({3});
  rmsprop_step(w, g, cache, cfg);
  unchanged(w);

  w = fresh();
  m = Tensor64::zeros({3});
  v = Tensor64::zeros({3});
  nadam_step(w, g, m, v, 1, cfg);
  unchanged(w);
}

TEST_CASE("first update opposes the gradient sign") {
  Rng rng(55);
  OptimizerConfig cfg;
  for (int rep = 0; rep < 200; ++rep) {
    const double gv = rng.uniform(-10.0, 10.0);
    Tensor64 g = Tensor64::full({1}, gv);

    Tensor64 w = Tensor64::zeros({1});
    sgd_step(w, g, 0.01);
    CHECK(w[0] * gv <= 0.0);

    w = Tensor64::zeros({1});
    Tensor64 m = Tensor64::zeros({1}), v = Tensor64::zeros({1});
    adam_step(w, g, m, v, 1, cfg);
    CHECK(w[0] * gv <= 0.0);

    w = Tensor64::zeros({1});
    Tensor64 cache = Tensor64::zeros({1});
    rmsprop_step(w, g, cache, cfg);
    CHECK(w[0] * gv <= 0.0);

    w = Tensor64::zeros({1});
    m = Tensor64::zeros({1});
    v = Tensor64::zeros({1});
    nadam_step(w, g, m, v, 1, cfg);
    CHECK(w[0] * gv <= 0.0);
  }
}

TEST_CASE("learning-rate decay schedule") {
  CHECK(apply_decay(1e-3, 1e-5, 0) == 1e-3);
  CHECK(apply_decay(1e-3, 1e-5, 100) == doctest::Approx(9.99001e-4).epsilon(1e-9));
  CHECK(apply_decay(5e-2, 0.0, 1000) == 5e-2);
  // monotone non-increasing over epochs
  double prev = apply_decay(1e-2, 1e-3, 0);
  for (std::size_t e = 1; e <= 50; ++e) {
    const double cur = apply_decay(1e-2, 1e-3, e);
    CHECK(cur <= prev);
    prev = cur;
  }
}

TEST_CASE("tensor-path trajectories match the scalar oracles") {
  CHECK(optim_compare::worst_trajectory_gap(50, 100, 77) <= 1e-10);
}

TEST_CASE("stateful optimizer matches the free functions") {
  // The wrapper must produce the same numbers as calling the step functions
  // with its internal counter, for a mixed parameter list.
  Rng rng(88);
  OptimizerConfig cfg;
  cfg.kind = OptimizerKind::adam;
  cfg.lr = 1e-2;

  Tensor64 w1({2, 2}), w2({3});
  for (std::size_t i = 0; i < w1.size(); ++i) w1[i] = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < w2.size(); ++i) w2[i] = rng.uniform(-1.0, 1.0);
  Tensor64 r1 = w1, r2 = w2;  // reference copies
  Tensor64 m1 = Tensor64::zeros(w1.shape()), v1 = Tensor64::zeros(w1.shape());
  Tensor64 m2 = Tensor64::zeros(w2.shape()), v2 = Tensor64::zeros(w2.shape());

  Optimizer<double> opt(cfg, {&w1, &w2});
  for (std::size_t t = 1; t <= 20; ++t) {
    Tensor64 g1(w1.shape()), g2(w2.shape());
    for (std::size_t i = 0; i < g1.size(); ++i) g1[i] = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < g2.size(); ++i) g2[i] = rng.uniform(-1.0, 1.0);
    opt.step({&w1, &w2}, {&g1, &g2}, cfg.lr);
    adam_step(r1, g1, m1, v1, t, cfg);
    adam_step(r2, g2, m2, v2, t, cfg);
  }
  CHECK(opt.step_count() == 20);
  for (std::size_t i = 0; i < w1.size(); ++i) CHECK(w1[i] == r1[i]);
  for (std::size_t i = 0; i < w2.size(); ++i) CHECK(w2[i] == r2[i]);
}

TEST_CASE("each optimizer crushes a well-conditioned quadratic at its best sweep rate") {
  // C(w) = 1/2 sum a_i w_i^2 with a in [1, 10]; the published sweep's best
  // rate per optimizer must cut C by a large factor within 500 steps.
  const double a[5] = {1.0, 2.5, 5.0, 7.5, 10.0};
  struct Case {
    OptimizerKind kind;
    double lr;
    double w0;
    double factor;
  };
  // Adaptive optimizers take near-constant-size steps, so their start point
  // scales with the learning rate; plain SGD contracts from anywhere. Adam
  // covers roughly lr per step and then rings around the minimum at a few
  // multiples of lr, which caps its 500-step cut near 2e2; the others land
  // far below their bars. The run is deterministic, so these are not flaky.
  const Case cases[] = {
      {OptimizerKind::sgd, 1e-2, 0.5, 1000.0},
      {OptimizerKind::adam, 1e-4, 0.03, 100.0},
      {OptimizerKind::rmsprop, 1e-3, 0.3, 1000.0},
      {OptimizerKind::nadam, 1e-4, 0.03, 1000.0},
  };
  for (const Case& c : cases) {
    CAPTURE(optimizer_kind_name(c.kind));
    OptimizerConfig cfg;
    cfg.kind = c.kind;
    cfg.lr = c.lr;
    Tensor64 w({5});
    for (int i = 0; i < 5; ++i) w[i] = (i % 2 ? -1.0 : 1.0) * c.w0;
    auto cost = [&]() {
      double s = 0;
      for (int i = 0; i < 5; ++i) s += 0.5 * a[i] * w[i] * w[i];
      return s;
    };
    const double c0 = cost();
    Optimizer<double> opt(cfg, {&w});
    double best = c0;
    for (int t = 0; t < 500; ++t) {
      Tensor64 g({5});
      for (int i = 0; i < 5; ++i) g[i] = a[i] * w[i];
      opt.step({&w}, {&g}, c.lr);
      best = std::min(best, cost());
    }
    CHECK(best * c.factor <= c0);
  }
}

}  // TEST_SUITE
