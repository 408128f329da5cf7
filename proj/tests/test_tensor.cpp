#include <cmath>

#include "doctest.h"
#include "histoconv/error.hpp"
#include "histoconv/rng.hpp"
#include "histoconv/tensor.hpp"
#include "support/oracles.hpp"

using namespace histoconv;

namespace {

Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("shape and element access") {
  Tensor t({2, 3, 4});
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  t.at(1, 2, 3) = 5.0f;
  CHECK(t[23] == 5.0f);
  CHECK(shape_numel({2, 3, 4}) == 24);
  CHECK(shape_str({2, 3, 4}) == "[2x3x4]");
}

TEST_CASE("zeros, full and reshaped") {
  Tensor z = Tensor::zeros({3, 3});
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0f);
  Tensor f = Tensor::full({2, 2}, 1.5f);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == 1.5f);
  Tensor r = f.reshaped({4});
  CHECK(r.rank() == 1);
  CHECK(r.extent(0) == 4);
  CHECK_THROWS_AS(f.reshaped({5}), Error);
}

TEST_CASE("finiteness checks") {
  Tensor t({2});
  t[0] = 1.0f;
  t[1] = 0.0f;
  CHECK(t.all_finite());
  t[1] = std::numeric_limits<float>::quiet_NaN();
  CHECK_FALSE(t.all_finite());
  CHECK_THROWS_AS(t.require_finite("unit test"), Error);
}

TEST_CASE("matmul identity") {
  Rng rng(1);
  Tensor a = random_tensor({2, 2}, rng);
  Tensor eye({2, 2});
  eye.at(0, 0) = 1.0f;
  eye.at(1, 1) = 1.0f;
  Tensor out = matmul(eye, a);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out[i] == a[i]);
}

TEST_CASE("matmul column selection") {
  Tensor a({2, 2});
  a.at(0, 0) = 1.0f;
  a.at(0, 1) = 2.0f;
  a.at(1, 0) = 3.0f;
  a.at(1, 1) = 4.0f;
  Tensor b({2, 1});
  b.at(0, 0) = 0.0f;
  b.at(1, 0) = 1.0f;
  Tensor out = matmul(a, b);
  CHECK(out.at(0, 0) == 2.0f);
  CHECK(out.at(1, 0) == 4.0f);
}

TEST_CASE("matmul against a triple-loop oracle") {
  Rng rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    Tensor a = random_tensor({5, 7}, rng);
    Tensor b = random_tensor({7, 3}, rng);
    // float path: the library accumulates in float, the oracle in double, so
    // the comparison allows for single-precision summation error
    Tensor got = matmul(a, b);
    Tensor want = oracle::matmul(a, b);
    for (std::size_t i = 0; i < got.size(); ++i) {
      const double rel = std::abs(got[i] - want[i]) /
                         std::max(1e-6, static_cast<double>(std::abs(want[i])));
      CHECK(rel <= 1e-4);
    }
    // double path: both sides accumulate in double, so agreement is tight
    Tensor64 a64(a.shape()), b64(b.shape());
    for (std::size_t i = 0; i < a.size(); ++i) a64[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) b64[i] = b[i];
    Tensor64 got64 = matmul(a64, b64);
    Tensor64 want64 = oracle::matmul(a64, b64);
    for (std::size_t i = 0; i < got64.size(); ++i) {
      const double rel = std::abs(got64[i] - want64[i]) /
                         std::max(1e-12, std::abs(want64[i]));
      CHECK(rel <= 1e-12);
    }
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Tensor a({2, 3}), b({4, 5});
  try {
    matmul(a, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("2x3") != std::string::npos);
    CHECK(std::string(e.what()).find("4x5") != std::string::npos);
  }
}

TEST_CASE("matmul associativity within tolerance") {
  Rng rng(7);
  for (int rep = 0; rep < 5; ++rep) {
    Tensor a = random_tensor({8, 8}, rng), b = random_tensor({8, 8}, rng),
           c = random_tensor({8, 8}, rng);
    Tensor left = matmul(matmul(a, b), c);
    Tensor right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.size(); ++i)
      CHECK(std::abs(left[i] - right[i]) <= 1e-4);
  }
}

TEST_CASE("pad_zero basics") {
  Rng rng(3);
  Tensor x = random_tensor({4, 5, 2}, rng);

  SUBCASE("pad 0 is the identity") {
    Tensor p = pad_zero(x, 0, 0);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(p[i] == x[i]);
  }
  SUBCASE("1x1 input, pad 1") {
    Tensor one({1, 1, 1});
    one[0] = 5.0f;
    Tensor p = pad_zero(one, 1, 1);
    CHECK(p.extent(0) == 3);
    CHECK(p.extent(1) == 3);
    CHECK(p.at(1, 1, 0) == 5.0f);
    double sum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += p[i];
    CHECK(sum == 5.0);
  }
  SUBCASE("padding adds nothing to the sum") {
    double sx = 0, sp = 0;
    Tensor p = pad_zero(x, 2, 3);
    for (std::size_t i = 0; i < x.size(); ++i) sx += x[i];
    for (std::size_t i = 0; i < p.size(); ++i) sp += p[i];
    CHECK(sx == doctest::Approx(sp).epsilon(1e-6));
  }
  SUBCASE("pad then center-crop is the identity for pads 0..3") {
    for (std::size_t pad = 0; pad <= 3; ++pad) {
      Tensor back = crop_center(pad_zero(x, pad, pad), pad, pad);
      REQUIRE(back.shape() == x.shape());
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == x[i]);
    }
  }
}

TEST_CASE("elementwise operations") {
  Rng rng(9);
  Tensor x = random_tensor({3, 4}, rng);
  Tensor zeros = Tensor::zeros({3, 4});

  Tensor a = add(x, zeros);
  Tensor s = scale(x, 1.0f);
  Tensor d = sub(x, x);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(a[i] == x[i]);
    CHECK(s[i] == x[i]);
    CHECK(d[i] == 0.0f);
  }
  Tensor m = mul(x, x);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(m[i] == x[i] * x[i]);

  Tensor other({4, 3});
  CHECK_THROWS_AS(add(x, other), Error);
  CHECK_THROWS_AS(mul(x, other), Error);
}

TEST_CASE("transpose") {
  Rng rng(11);
  Tensor x = random_tensor({3, 5}, rng);
  Tensor t = transposed(x);
  REQUIRE(t.extent(0) == 5);
  REQUIRE(t.extent(1) == 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j) CHECK(t.at(j, i) == x.at(i, j));
}

}  // TEST_SUITE

TEST_SUITE("rng") {

TEST_CASE("same seed, same stream") {
  Rng a(123456), b(123456);
  for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 100; ++i)
    if (a.next_u64() == b.next_u64()) ++same;
  CHECK(same == 0);
}

TEST_CASE("uniform stays inside its interval") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.uniform(-2.5, 3.5);
    CHECK(v >= -2.5);
    CHECK(v < 3.5);
  }
  const double z = rng.uniform(0.0, 0.0);
  CHECK(z == 0.0);
}

TEST_CASE("below covers the range evenly enough") {
  Rng rng(17);
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 100000; ++i) ++hits[rng.below(10)];
  for (int h : hits) {
    CHECK(h > 9000);
    CHECK(h < 11000);
  }
}

TEST_CASE("derive produces independent named streams") {
  const std::uint64_t s1 = Rng::derive(42, 1, 0);
  const std::uint64_t s2 = Rng::derive(42, 2, 0);
  const std::uint64_t s3 = Rng::derive(42, 1, 1);
  CHECK(s1 != s2);
  CHECK(s1 != s3);
  CHECK(s2 != s3);
  CHECK(Rng::derive(42, 1, 0) == s1);
}

TEST_CASE("shuffle is deterministic and a permutation") {
  std::vector<int> base(20);
  for (int i = 0; i < 20; ++i) base[i] = i;

  std::vector<int> a = base, b = base;
  Rng r1(99), r2(99);
  shuffle(a, r1);
  shuffle(b, r2);
  CHECK(a == b);

  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == base);
}

}  // TEST_SUITE
