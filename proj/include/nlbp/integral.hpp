#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nlbp/core.hpp"

namespace nlbp {

/// Summed-area table. table(x, y) holds the sum of all pixels with
/// coordinates strictly below (x, y); any rectangle sum costs 4 lookups.
/// 64-bit accumulators: a full 640x480 frame of 255s needs ~7.8e7, and chained
/// sums in training overflow 32 bits long before that.
class IntegralImage {
 public:
  explicit IntegralImage(const GrayImage& img)
      : width_(img.width()), height_(img.height()) {
    table_.assign(static_cast<std::size_t>(width_ + 1) * (height_ + 1), 0);
    for (int y = 0; y < height_; ++y) {
      std::int64_t row = 0;
      const std::int64_t* above = &table_[static_cast<std::size_t>(y) * (width_ + 1)];
      std::int64_t* cur = &table_[static_cast<std::size_t>(y + 1) * (width_ + 1)];
      for (int x = 0; x < width_; ++x) {
        row += img.at(x, y);
        cur[x + 1] = above[x + 1] + row;
      }
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }

  /// Cumulative value at table coordinates (0..width, 0..height).
  std::int64_t at(int x, int y) const {
    return table_[static_cast<std::size_t>(y) * (width_ + 1) + x];
  }

  bool in_bounds(const Rect& r) const {
    return r.x >= 0 && r.y >= 0 && r.w >= 1 && r.h >= 1 && r.right() <= width_ &&
           r.bottom() <= height_;
  }

  std::int64_t rect_sum(const Rect& r) const {
    if (!in_bounds(r)) throw std::out_of_range("rect_sum: rect outside image");
    return rect_sum_unchecked(r);
  }

  std::int64_t rect_sum_unchecked(const Rect& r) const {
    const std::size_t stride = static_cast<std::size_t>(width_ + 1);
    const std::int64_t* t = table_.data();
    std::size_t top = static_cast<std::size_t>(r.y) * stride;
    std::size_t bot = static_cast<std::size_t>(r.bottom()) * stride;
    return t[bot + r.right()] - t[bot + r.x] - t[top + r.right()] + t[top + r.x];
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> table_;
};

/// Mean brightness of a rectangle.
inline double region_mean(const IntegralImage& ii, const Rect& r) {
  if (r.w < 1 || r.h < 1)
    throw std::invalid_argument("region_mean: empty rect");
  return static_cast<double>(ii.rect_sum(r)) / static_cast<double>(r.area());
}

/// 3x3 cell partition of a rect. Cells get floor(w/3) x floor(h/3); the
/// rightmost column and bottom row absorb the remainder. Edges[i]..edges[i+1)
/// bound cell column/row i.
struct CellPartition {
  std::array<int, 4> xs;
  std::array<int, 4> ys;

  Rect cell(int row, int col) const {
    return Rect{xs[col], ys[row], xs[col + 1] - xs[col], ys[row + 1] - ys[row]};
  }
};

inline CellPartition split_cells(const Rect& r) {
  if (r.w < 3 || r.h < 3)
    throw std::invalid_argument("split_cells: rect must be at least 3x3");
  int cw = r.w / 3;
  int ch = r.h / 3;
  return CellPartition{{r.x, r.x + cw, r.x + 2 * cw, r.right()},
                       {r.y, r.y + ch, r.y + 2 * ch, r.bottom()}};
}

/// Means of the nine cells, index n = 3*row + col. Each mean uses the cell's
/// true pixel count.
inline std::array<double, 9> subregion_means(const IntegralImage& ii,
                                             const Rect& r) {
  CellPartition p = split_cells(r);
  if (!ii.in_bounds(r))
    throw std::out_of_range("subregion_means: rect outside image");
  std::array<double, 9> means{};
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      Rect c = p.cell(row, col);
      means[static_cast<std::size_t>(3 * row + col)] =
          static_cast<double>(ii.rect_sum_unchecked(c)) /
          static_cast<double>(c.area());
    }
  }
  return means;
}

}  // namespace nlbp
