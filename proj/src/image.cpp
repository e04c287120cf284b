#include "palmroi/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace palmroi {

namespace {

std::uint8_t to_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

}  // namespace

Image::Image(int w, int h, std::array<std::uint8_t, 3> fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw std::invalid_argument("negative image size");
  data.resize(static_cast<std::size_t>(w) * h * kChannels);
  for (std::size_t i = 0; i < data.size(); i += kChannels) {
    data[i] = fill[0];
    data[i + 1] = fill[1];
    data[i + 2] = fill[2];
  }
}

std::array<double, 3> sample_bilinear(const Image& img, Point2D p, Border border) {
  if (border == Border::constant &&
      (p.x < 0.0 || p.y < 0.0 || p.x >= img.width || p.y >= img.height)) {
    return {0.0, 0.0, 0.0};
  }
  const double fx = p.x - 0.5;
  const double fy = p.y - 0.5;
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const double wx = fx - x0f;
  const double wy = fy - y0f;
  auto clamp_x = [&](double v) { return static_cast<int>(std::clamp(v, 0.0, img.width - 1.0)); };
  auto clamp_y = [&](double v) { return static_cast<int>(std::clamp(v, 0.0, img.height - 1.0)); };
  const int x0 = clamp_x(x0f), x1 = clamp_x(x0f + 1.0);
  const int y0 = clamp_y(y0f), y1 = clamp_y(y0f + 1.0);

  const std::uint8_t* p00 = img.px(x0, y0);
  const std::uint8_t* p10 = img.px(x1, y0);
  const std::uint8_t* p01 = img.px(x0, y1);
  const std::uint8_t* p11 = img.px(x1, y1);
  std::array<double, 3> out{};
  for (int c = 0; c < Image::kChannels; ++c) {
    const double top = p00[c] + wx * (p10[c] - p00[c]);
    const double bottom = p01[c] + wx * (p11[c] - p01[c]);
    out[c] = top + wy * (bottom - top);
  }
  return out;
}

Image warp(const Image& src, const Affine2D& dst_to_src, int out_w, int out_h, Border border) {
  if (src.empty()) throw std::invalid_argument("warp: empty source image");
  Image out(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const auto v = sample_bilinear(src, dst_to_src.apply({x + 0.5, y + 0.5}), border);
      std::uint8_t* dst = out.px(x, y);
      for (int c = 0; c < Image::kChannels; ++c) dst[c] = to_u8(v[c]);
    }
  }
  return out;
}

Image resize_bilinear(const Image& src, int out_w, int out_h) {
  if (out_w <= 0 || out_h <= 0) throw std::invalid_argument("resize: output size must be positive");
  if (src.width == out_w && src.height == out_h) return src;
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  return warp(src, Affine2D{{sx, 0.0, 0.0, 0.0, sy, 0.0}}, out_w, out_h);
}

Image rotate90_cw(const Image& src) {
  Image out(src.height, src.width);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      // screen-clockwise: (x, y) -> (H - 1 - y, x)
      std::copy_n(src.px(x, y), Image::kChannels, out.px(src.height - 1 - y, x));
    }
  }
  return out;
}

}  // namespace palmroi
