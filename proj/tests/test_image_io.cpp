#include <cmath>

#include "doctest.h"
#include "histoconv/error.hpp"
#include "histoconv/image_io.hpp"
#include "histoconv/rng.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace histoconv;

TEST_SUITE("image_io") {

TEST_CASE("png round trip preserves 8-bit levels exactly") {
  fixtures::TempDir tmp("png");
  Tensor img({4, 8, 3});
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<float>((i * 7) % 256) / 255.0f;
  const std::string path = tmp.file("levels.png");
  write_png(path, img);
  Tensor back = read_png(path);
  REQUIRE(back.shape() == img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(back[i] == img[i]);
}

TEST_CASE("white decodes to exactly 1.0 and black to 0.0") {
  fixtures::TempDir tmp("png");
  Tensor img({2, 2, 3});
  img.at(0, 0, 0) = 1.0f;
  img.at(0, 0, 1) = 1.0f;
  img.at(0, 0, 2) = 1.0f;
  const std::string path = tmp.file("bw.png");
  write_png(path, img);
  Tensor back = read_png(path);
  CHECK(back.at(0, 0, 0) == 1.0f);
  CHECK(back.at(1, 1, 2) == 0.0f);
}

TEST_CASE("write quantizes to the nearest 8-bit level") {
  fixtures::TempDir tmp("png");
  Tensor img({1, 4, 3});
  img.at(0, 0, 0) = 0.4999f;
  img.at(0, 1, 0) = 1.7f;   // clamps to 1
  img.at(0, 2, 0) = -0.3f;  // clamps to 0
  img.at(0, 3, 0) = 100.0f / 255.0f;
  const std::string path = tmp.file("quant.png");
  write_png(path, img);
  Tensor back = read_png(path);
  CHECK(back.at(0, 0, 0) == static_cast<float>(std::lround(0.4999 * 255.0)) / 255.0f);
  CHECK(back.at(0, 1, 0) == 1.0f);
  CHECK(back.at(0, 2, 0) == 0.0f);
  CHECK(back.at(0, 3, 0) == 100.0f / 255.0f);
}

TEST_CASE("read errors are descriptive") {
  fixtures::TempDir tmp("png");
  CHECK_THROWS_AS(read_png(tmp.file("missing.png")), Error);
  const std::string junk = tmp.file("junk.png");
  fixtures::write_text(junk, "this is not a png");
  CHECK_THROWS_AS(read_png(junk), Error);
}

TEST_CASE("write rejects non-rgb tensors") {
  fixtures::TempDir tmp("png");
  Tensor gray({4, 4, 1});
  CHECK_THROWS_AS(write_png(tmp.file("gray.png"), gray), Error);
}

TEST_CASE("equal-size resize is the identity") {
  Rng rng(1);
  Tensor img({6, 9, 3});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(rng.uniform());
  Tensor out = resize_bilinear(img, 6, 9);
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(out[i] - img[i]) <= 1e-6f);
}

TEST_CASE("checkerboard upsampled 2x2 to 3x3") {
  Tensor img({2, 2, 3});
  for (std::size_t c = 0; c < 3; ++c) {
    img.at(0, 0, c) = 0.0f;
    img.at(0, 1, c) = 1.0f;
    img.at(1, 0, c) = 1.0f;
    img.at(1, 1, c) = 0.0f;
  }
  Tensor out = resize_bilinear(img, 3, 3);
  const float mid = 127.5f / 255.0f;
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(out.at(0, 0, c) == 0.0f);  // corners copied exactly
    CHECK(out.at(0, 2, c) == 1.0f);
    CHECK(out.at(2, 0, c) == 1.0f);
    CHECK(out.at(2, 2, c) == 0.0f);
    CHECK(std::abs(out.at(0, 1, c) - mid) <= 1e-4f);
    CHECK(std::abs(out.at(1, 0, c) - mid) <= 1e-4f);
    CHECK(std::abs(out.at(1, 1, c) - mid) <= 1e-4f);
    CHECK(std::abs(out.at(2, 1, c) - mid) <= 1e-4f);
  }
}

TEST_CASE("resize matches the per-pixel oracle") {
  Rng rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const std::size_t in_h = 3 + rng.below(14), in_w = 3 + rng.below(14);
    const std::size_t out_h = 2 + rng.below(20), out_w = 2 + rng.below(20);
    Tensor img({in_h, in_w, 3});
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(rng.uniform());
    Tensor got = resize_bilinear(img, out_h, out_w);
    Tensor want = oracle::resize_bilinear_ref(img, out_h, out_w);
    REQUIRE(got.shape() == want.shape());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - want[i]) <= 1e-6f);
  }
}

TEST_CASE("upsizing copies the four corners exactly") {
  Rng rng(3);
  Tensor img({5, 7, 3});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<float>(rng.uniform());
  Tensor out = resize_bilinear(img, 11, 13);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(out.at(0, 0, c) == img.at(0, 0, c));
    CHECK(out.at(0, 12, c) == img.at(0, 6, c));
    CHECK(out.at(10, 0, c) == img.at(4, 0, c));
    CHECK(out.at(10, 12, c) == img.at(4, 6, c));
  }
}

}  // TEST_SUITE
