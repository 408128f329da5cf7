#include "histoconv/augment.hpp"

#include <algorithm>
#include <cmath>

#include "histoconv/error.hpp"

namespace histoconv {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

void AugmentConfig::validate() const {
  if (!(zoom_range >= 0.0 && zoom_range < 1.0))
    fail(ErrorCode::config, "zoom_range must be in [0, 1), got " + std::to_string(zoom_range));
  if (!(shear_range >= 0.0 && shear_range < kPi / 2))
    fail(ErrorCode::config, "shear_range must be in [0, pi/2), got " + std::to_string(shear_range));
  if (!(rotation_range >= 0.0))
    fail(ErrorCode::config, "rotation_range must be >= 0, got " + std::to_string(rotation_range));
  if (!(width_shift_range >= 0.0))
    fail(ErrorCode::config,
         "width_shift_range must be >= 0, got " + std::to_string(width_shift_range));
  if (!(height_shift_range >= 0.0))
    fail(ErrorCode::config,
         "height_shift_range must be >= 0, got " + std::to_string(height_shift_range));
}

AffineTransform make_affine(double theta, double zoom, double shear, double tx, double ty,
                            std::size_t height, std::size_t width) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cs = std::cos(shear), ss = std::sin(shear);

  // Forward linear part A = Shear * zoom * Rot.
  const double a00 = zoom * (ct - ss * st);
  const double a01 = zoom * (-st - ss * ct);
  const double a10 = zoom * (cs * st);
  const double a11 = zoom * (cs * ct);

  const double det = a00 * a11 - a01 * a10;
  if (std::abs(det) < 1e-12)
    fail(ErrorCode::numeric, "affine transform is singular (zoom " + std::to_string(zoom) +
                                 ", shear " + std::to_string(shear) + ")");
  const double i00 = a11 / det, i01 = -a01 / det;
  const double i10 = -a10 / det, i11 = a00 / det;

  const double cx = (static_cast<double>(width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(height) - 1.0) / 2.0;

  // src = A^-1 * (dst - c - t) + c
  AffineTransform t;
  t.m[0] = i00;
  t.m[1] = i01;
  t.m[2] = cx - (i00 * (cx + tx) + i01 * (cy + ty));
  t.m[3] = i10;
  t.m[4] = i11;
  t.m[5] = cy - (i10 * (cx + tx) + i11 * (cy + ty));
  return t;
}

TransformDraw sample_transform(const AugmentConfig& cfg, std::size_t height, std::size_t width,
                               Rng& rng) {
  cfg.validate();
  const double theta_deg = rng.uniform(-cfg.rotation_range, cfg.rotation_range);
  const double zoom = rng.uniform(1.0 - cfg.zoom_range, 1.0 + cfg.zoom_range);
  const double shear = rng.uniform(-cfg.shear_range, cfg.shear_range);
  const double w = static_cast<double>(width), h = static_cast<double>(height);
  const double tx = rng.uniform(-cfg.width_shift_range * w, cfg.width_shift_range * w);
  const double ty = rng.uniform(-cfg.height_shift_range * h, cfg.height_shift_range * h);

  TransformDraw draw;
  draw.transform = make_affine(theta_deg * kPi / 180.0, zoom, shear, tx, ty, height, width);
  draw.flip = cfg.horizontal_flip && rng.bernoulli(0.5);
  return draw;
}

Tensor apply_affine(const Tensor& img, const AffineTransform& t) {
  if (img.rank() != 3)
    fail(ErrorCode::internal, "apply_affine expects HxWxC, got " + shape_str(img.shape()));
  const std::size_t h = img.extent(0), w = img.extent(1), c = img.extent(2);
  if (h < 2 || w < 2)
    fail(ErrorCode::data, "apply_affine needs spatial extents >= 2, got " + shape_str(img.shape()));

  const long max_x = static_cast<long>(w) - 1;
  const long max_y = static_cast<long>(h) - 1;
  Tensor out(img.shape());
  for (std::size_t y = 0; y < h; ++y) {
    const double yd = static_cast<double>(y);
    for (std::size_t x = 0; x < w; ++x) {
      const double xd = static_cast<double>(x);
      const long sx = std::clamp(std::lround(t.m[0] * xd + t.m[1] * yd + t.m[2]), 0L, max_x);
      const long sy = std::clamp(std::lround(t.m[3] * xd + t.m[4] * yd + t.m[5]), 0L, max_y);
      const float* src = img.data() + (static_cast<std::size_t>(sy) * w +
                                       static_cast<std::size_t>(sx)) * c;
      std::copy(src, src + c, out.data() + (y * w + x) * c);
    }
  }
  return out;
}

Tensor hflip(const Tensor& img) {
  if (img.rank() != 3)
    fail(ErrorCode::internal, "hflip expects HxWxC, got " + shape_str(img.shape()));
  const std::size_t h = img.extent(0), w = img.extent(1), c = img.extent(2);
  Tensor out(img.shape());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const float* src = img.data() + (y * w + (w - 1 - x)) * c;
      std::copy(src, src + c, out.data() + (y * w + x) * c);
    }
  return out;
}

Tensor augment_image(const Tensor& img, const AugmentConfig& cfg, Rng& rng) {
  if (img.rank() != 3)
    fail(ErrorCode::internal, "augment_image expects HxWxC, got " + shape_str(img.shape()));
  const TransformDraw draw = sample_transform(cfg, img.extent(0), img.extent(1), rng);
  Tensor out = apply_affine(img, draw.transform);
  if (draw.flip) out = hflip(out);
  return out;
}

}  // namespace histoconv
