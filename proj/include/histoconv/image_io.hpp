#pragma once

#include <string>

#include "histoconv/tensor.hpp"

namespace histoconv {

// Decodes any PNG (palette, grayscale, 16-bit, alpha) to HxWx3 float RGB in
// [0, 1] (8-bit values divided by 255).
Tensor read_png(const std::string& path);

// Writes an HxWx3 tensor as 8-bit RGB; values are clamped to [0, 1] and
// scaled by 255 with round-to-nearest.
void write_png(const std::string& path, const Tensor& img);

// Bilinear resize with endpoint-aligned sampling: output index i samples
// source position i * (in - 1) / (out - 1), so the four corners are copied
// exactly and an equal-size resize is the identity. A singleton output extent
// samples position 0.
Tensor resize_bilinear(const Tensor& img, std::size_t out_h, std::size_t out_w);

}  // namespace histoconv
