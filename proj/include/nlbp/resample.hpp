#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nlbp/core.hpp"

namespace nlbp {

/// Bilinear resample of a source window to out_w x out_h. Pixel centers map as
/// src = (dst + 0.5) * scale - 0.5, which makes a same-size resample an exact
/// copy. Samples are clamped to the window, values rounded half-up.
inline GrayImage resample_bilinear(const GrayImage& img, const Rect& src,
                                   int out_w, int out_h) {
  if (src.empty()) throw std::invalid_argument("resample_bilinear: empty source");
  if (!img.bounds().contains(src))
    throw std::invalid_argument("resample_bilinear: source outside image");
  if (out_w < 1 || out_h < 1)
    throw std::invalid_argument("resample_bilinear: empty output");
  GrayImage out(out_w, out_h);
  const double sx = static_cast<double>(src.w) / out_w;
  const double sy = static_cast<double>(src.h) / out_h;
  for (int dy = 0; dy < out_h; ++dy) {
    double fy = (dy + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(src.h - 1));
    int y0 = static_cast<int>(fy);
    int y1 = std::min(y0 + 1, src.h - 1);
    double wy = fy - y0;
    for (int dx = 0; dx < out_w; ++dx) {
      double fx = (dx + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(src.w - 1));
      int x0 = static_cast<int>(fx);
      int x1 = std::min(x0 + 1, src.w - 1);
      double wx = fx - x0;
      double top = (1.0 - wx) * img.at(src.x + x0, src.y + y0) +
                   wx * img.at(src.x + x1, src.y + y0);
      double bot = (1.0 - wx) * img.at(src.x + x0, src.y + y1) +
                   wx * img.at(src.x + x1, src.y + y1);
      double v = (1.0 - wy) * top + wy * bot;
      out.at(dx, dy) = static_cast<std::uint8_t>(
          std::clamp(std::floor(v + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

inline GrayImage crop(const GrayImage& img, const Rect& r) {
  if (!img.bounds().contains(r) || r.empty())
    throw std::invalid_argument("crop: rect outside image");
  GrayImage out(r.w, r.h);
  for (int y = 0; y < r.h; ++y)
    for (int x = 0; x < r.w; ++x) out.at(x, y) = img.at(r.x + x, r.y + y);
  return out;
}

}  // namespace nlbp
