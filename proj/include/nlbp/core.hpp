#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlbp {

/// Axis-aligned pixel rectangle: origin (x, y), extent w x h, half-open.
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }
  int bottom() const { return y + h; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(w) * static_cast<std::int64_t>(h);
  }
  bool empty() const { return w <= 0 || h <= 0; }
  bool contains(const Rect& r) const {
    return r.x >= x && r.y >= y && r.right() <= right() && r.bottom() <= bottom();
  }
  friend bool operator==(const Rect& a, const Rect& b) {
    return a.x == b.x && a.y == b.y && a.w == b.w && a.h == b.h;
  }
};

inline Rect intersect(const Rect& a, const Rect& b) {
  int x0 = std::max(a.x, b.x);
  int y0 = std::max(a.y, b.y);
  int x1 = std::min(a.right(), b.right());
  int y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return Rect{};
  return Rect{x0, y0, x1 - x0, y1 - y0};
}

/// Intersection-over-union of two rectangles, in [0, 1].
inline double iou(const Rect& a, const Rect& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::int64_t inter = intersect(a, b).area();
  if (inter == 0) return 0.0;
  std::int64_t uni = a.area() + b.area() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Single-channel 8-bit image, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height) {
    if (width < 1 || height < 1)
      throw std::invalid_argument("GrayImage: dimensions must be >= 1");
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1)
      throw std::invalid_argument("GrayImage: dimensions must be >= 1");
    if (pixels_.size() != static_cast<std::size_t>(width) * height)
      throw std::invalid_argument("GrayImage: pixel count != width*height");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  Rect bounds() const { return Rect{0, 0, width_, height_}; }

  std::uint8_t at(int x, int y) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t& at(int x, int y) {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::uint8_t* data() { return pixels_.data(); }
  const std::uint8_t* data() const { return pixels_.data(); }

  friend bool operator==(const GrayImage& a, const GrayImage& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.pixels_ == b.pixels_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Interleaved multi-channel 8-bit image (1 = gray, 3 = RGB, 4 = RGBA).
struct ColorImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;  // row-major, channel-interleaved

  std::uint8_t at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

/// Fixed integer-weight luminance (BT.601, weights sum to 256) so results are
/// identical on every platform. Alpha channels are ignored.
inline GrayImage to_grayscale(const ColorImage& src) {
  if (src.width < 1 || src.height < 1)
    throw std::invalid_argument("to_grayscale: empty image");
  if (src.data.size() !=
      static_cast<std::size_t>(src.width) * src.height * src.channels)
    throw std::invalid_argument("to_grayscale: data size mismatch");
  GrayImage out(src.width, src.height);
  if (src.channels == 1) {
    std::copy(src.data.begin(), src.data.end(), out.data());
    return out;
  }
  if (src.channels != 3 && src.channels != 4)
    throw std::invalid_argument("to_grayscale: unsupported channel count " +
                                std::to_string(src.channels));
  const std::size_t n = static_cast<std::size_t>(src.width) * src.height;
  const std::uint8_t* p = src.data.data();
  std::uint8_t* q = out.data();
  for (std::size_t i = 0; i < n; ++i, p += src.channels) {
    unsigned v = 77u * p[0] + 150u * p[1] + 29u * p[2];
    q[i] = static_cast<std::uint8_t>((v + 128u) >> 8);
  }
  return out;
}

}  // namespace nlbp
