#include "histoconv/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include <png.h>

#include "histoconv/error.hpp"

namespace histoconv {

Tensor read_png(const std::string& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;

  if (!png_image_begin_read_from_file(&image, path.c_str()))
    fail(ErrorCode::data, "cannot read PNG '" + path + "': " + image.message);

  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    fail(ErrorCode::data, "cannot decode PNG '" + path + "': " + msg);
  }

  const std::size_t h = image.height, w = image.width;
  Tensor out({h, w, 3});
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<float>(buffer[i]) / 255.0f;
  return out;
}

void write_png(const std::string& path, const Tensor& img) {
  if (img.rank() != 3 || img.extent(2) != 3)
    fail(ErrorCode::internal, "write_png expects HxWx3, got " + shape_str(img.shape()));

  const std::size_t h = img.extent(0), w = img.extent(1);
  std::vector<png_byte> buffer(h * w * 3);
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const float v = std::clamp(img[i], 0.0f, 1.0f);
    buffer[i] = static_cast<png_byte>(std::lround(v * 255.0f));
  }

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = PNG_FORMAT_RGB;

  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr))
    fail(ErrorCode::data, "cannot write PNG '" + path + "': " + image.message);
}

Tensor resize_bilinear(const Tensor& img, std::size_t out_h, std::size_t out_w) {
  if (img.rank() != 3)
    fail(ErrorCode::internal, "resize_bilinear expects HxWxC, got " + shape_str(img.shape()));
  if (out_h == 0 || out_w == 0)
    fail(ErrorCode::config, "resize target extents must be >= 1");
  const std::size_t in_h = img.extent(0), in_w = img.extent(1), c = img.extent(2);

  const double sy = out_h > 1 ? static_cast<double>(in_h - 1) / static_cast<double>(out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(in_w - 1) / static_cast<double>(out_w - 1) : 0.0;

  Tensor out({out_h, out_w, c});
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const double fy = static_cast<double>(oy) * sy;
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double fx = static_cast<double>(ox) * sx;
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < c; ++ch) {
        const double top = (1.0 - wx) * img.at(y0, x0, ch) + wx * img.at(y0, x1, ch);
        const double bot = (1.0 - wx) * img.at(y1, x0, ch) + wx * img.at(y1, x1, ch);
        out.at(oy, ox, ch) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

}  // namespace histoconv
