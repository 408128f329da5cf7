#pragma once

#include "histoconv/rng.hpp"
#include "histoconv/tensor.hpp"

namespace histoconv {

// Ranges follow the usual image-generator conventions: rotation in degrees
// drawn from [-r, +r], zoom factor from [1-z, 1+z] (isotropic), shear angle in
// radians from [-s, +s], shifts as fractions of the image extents. Sampling
// outside the source is edge-clamped ("nearest" fill).
struct AugmentConfig {
  double zoom_range = 0.2;
  double shear_range = 0.2;
  double rotation_range = 42.0;
  double width_shift_range = 0.2;
  double height_shift_range = 0.2;
  bool horizontal_flip = true;

  void validate() const;
  bool is_identity() const {
    return zoom_range == 0.0 && shear_range == 0.0 && rotation_range == 0.0 &&
           width_shift_range == 0.0 && height_shift_range == 0.0 && !horizontal_flip;
  }
};

// Inverse mapping from output pixel coordinates (x = column, y = row) to
// input coordinates:
//   src_x = m[0]*x + m[1]*y + m[2]
//   src_y = m[3]*x + m[4]*y + m[5]
struct AffineTransform {
  double m[6] = {1, 0, 0, 0, 1, 0};
};

struct TransformDraw {
  AffineTransform transform;
  bool flip = false;
};

// Composes shift, shear, zoom and rotation (applied to the image in the order
// rotation, zoom, shear, shift) about the image center ((w-1)/2, (h-1)/2).
// Angles in radians; tx/ty in pixels. The forward linear part is
//   A = Shear(s) * (z * I) * Rot(theta),
// with Rot = [[cos,-sin],[sin,cos]] and Shear = [[1,-sin s],[0,cos s]] acting
// on (x, y) with y pointing down the rows; the returned matrix is the inverse
// map A^-1 with the matching offset.
AffineTransform make_affine(double theta, double zoom, double shear, double tx, double ty,
                            std::size_t height, std::size_t width);

// Draw order is pinned: rotation, zoom, shear, x shift, y shift, then the
// flip coin (only consumed when horizontal_flip is enabled).
TransformDraw sample_transform(const AugmentConfig& cfg, std::size_t height, std::size_t width,
                               Rng& rng);

// Nearest-neighbor resampling of an HxWxC image under the inverse map;
// coordinates round half away from zero and clamp to the image border.
Tensor apply_affine(const Tensor& img, const AffineTransform& t);

// Column j maps to column W-1-j.
Tensor hflip(const Tensor& img);

// Full per-image pipeline: one transform draw, resample, then optional flip.
Tensor augment_image(const Tensor& img, const AugmentConfig& cfg, Rng& rng);

}  // namespace histoconv
