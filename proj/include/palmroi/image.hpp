#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "palmroi/geometry.hpp"

namespace palmroi {

/// 8-bit interleaved RGB raster, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  static constexpr int kChannels = 3;

  Image() = default;
  Image(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0});

  bool empty() const { return width <= 0 || height <= 0; }
  std::uint8_t* px(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * kChannels; }
  const std::uint8_t* px(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * kChannels;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

enum class Border {
  clamp,     // reads outside the raster take the nearest edge pixel
  constant,  // reads outside the raster return black
};

/// Bilinear read at continuous coordinates; pixel (i, j) has its centre at
/// (i + 0.5, j + 0.5).
std::array<double, 3> sample_bilinear(const Image& img, Point2D p, Border border = Border::clamp);

/// out(x, y) = src(dst_to_src(x + 0.5, y + 0.5)), rounded to 8 bits.
Image warp(const Image& src, const Affine2D& dst_to_src, int out_w, int out_h,
           Border border = Border::clamp);

Image resize_bilinear(const Image& src, int out_w, int out_h);

/// Lossless 90 degree clockwise (on screen) rotation. A continuous point
/// p maps to (height - p.y, p.x).
Image rotate90_cw(const Image& src);

}  // namespace palmroi
