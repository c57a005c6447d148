#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlbp/integral.hpp"

namespace nlbp {

enum class FeatureKind { kCensus, kLbp, kHaar };

enum class HaarTemplate {
  kEdgeHorizontal,  // top half vs bottom half
  kEdgeVertical,    // left half vs right half
  kLineHorizontal,  // outer thirds vs middle horizontal band
  kLineVertical,    // outer thirds vs middle vertical band
  kDiagonal,        // TL+BR quadrants vs TR+BL quadrants
};

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::kCensus: return "cs";
    case FeatureKind::kLbp: return "lbp";
    case FeatureKind::kHaar: return "haar";
  }
  return "?";
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "cs") return FeatureKind::kCensus;
  if (s == "lbp") return FeatureKind::kLbp;
  if (s == "haar") return FeatureKind::kHaar;
  throw std::invalid_argument("unknown feature kind: " + s);
}

inline const char* to_string(HaarTemplate t) {
  switch (t) {
    case HaarTemplate::kEdgeHorizontal: return "edge_h";
    case HaarTemplate::kEdgeVertical: return "edge_v";
    case HaarTemplate::kLineHorizontal: return "line_h";
    case HaarTemplate::kLineVertical: return "line_v";
    case HaarTemplate::kDiagonal: return "diag";
  }
  return "?";
}

inline HaarTemplate haar_template_from_string(const std::string& s) {
  if (s == "edge_h") return HaarTemplate::kEdgeHorizontal;
  if (s == "edge_v") return HaarTemplate::kEdgeVertical;
  if (s == "line_h") return HaarTemplate::kLineHorizontal;
  if (s == "line_v") return HaarTemplate::kLineVertical;
  if (s == "diag") return HaarTemplate::kDiagonal;
  throw std::invalid_argument("unknown haar template: " + s);
}

constexpr std::array<HaarTemplate, 5> kAllHaarTemplates = {
    HaarTemplate::kEdgeHorizontal, HaarTemplate::kEdgeVertical,
    HaarTemplate::kLineHorizontal, HaarTemplate::kLineVertical,
    HaarTemplate::kDiagonal};

/// The detection window within which features are placed, local coordinates.
struct Aperture {
  int width = 0;
  int height = 0;
  friend bool operator==(const Aperture&, const Aperture&) = default;
};

/// Default window sizes for the two detector families this library targets:
/// carriage-number plates (wide) and single digits (tall). The narrow digit
/// window is for glyphs that occupy less width than a full digit cell.
inline constexpr Aperture kNumberAperture{54, 18};
inline constexpr Aperture kDigitAperture{12, 24};
inline constexpr Aperture kNarrowDigitAperture{8, 24};

/// A feature: family + rectangle in aperture-local coordinates.
struct FeatureDescriptor {
  FeatureKind kind = FeatureKind::kCensus;
  HaarTemplate tmpl = HaarTemplate::kEdgeHorizontal;  // haar only
  Rect rect;

  friend bool operator==(const FeatureDescriptor& a, const FeatureDescriptor& b) {
    if (a.kind != b.kind || !(a.rect == b.rect)) return false;
    return a.kind != FeatureKind::kHaar || a.tmpl == b.tmpl;
  }
};

/// Code range of a feature: 512 for census, 256 for LBP. Haar responses are
/// quantized by the classifier layer (see HaarBinning), not here.
inline int code_range(FeatureKind kind, int haar_bins = 0) {
  switch (kind) {
    case FeatureKind::kCensus: return 512;
    case FeatureKind::kLbp: return 256;
    case FeatureKind::kHaar: return haar_bins;
  }
  return 0;
}

// --- code computation ------------------------------------------------------
//
// Cell-vs-mean comparisons are done in exact integer arithmetic
// (cell_sum * total_area vs total_sum * cell_area), so codes are invariant
// under any exact affine brightness change and never depend on float rounding.
// Largest product: 255*640*480 * 640*480 ~ 2.4e13, well inside int64.

/// 9-bit code: bit n (n = 3*row + col, LSB first) is set iff the cell mean is
/// >= the whole-rect mean.
inline int census_code(const IntegralImage& ii, const Rect& r) {
  CellPartition p = split_cells(r);  // validates w,h >= 3
  std::int64_t total = ii.rect_sum(r);
  std::int64_t area = r.area();
  int code = 0;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      Rect c = p.cell(row, col);
      std::int64_t cs = ii.rect_sum_unchecked(c);
      if (cs * area >= total * c.area()) code |= 1 << (3 * row + col);
    }
  }
  return code;
}

/// 8-bit code comparing the eight outer cell means against the center cell
/// mean. Bit k follows the outer cells clockwise from top-left, LSB first.
inline int lbp_code(const IntegralImage& ii, const Rect& r) {
  CellPartition p = split_cells(r);
  if (!ii.in_bounds(r)) throw std::out_of_range("lbp_code: rect outside image");
  static constexpr std::array<std::array<int, 2>, 8> kOuter = {{
      {0, 0}, {0, 1}, {0, 2}, {1, 2}, {2, 2}, {2, 1}, {2, 0}, {1, 0}}};
  Rect center = p.cell(1, 1);
  std::int64_t center_sum = ii.rect_sum_unchecked(center);
  std::int64_t center_area = center.area();
  int code = 0;
  for (int k = 0; k < 8; ++k) {
    Rect c = p.cell(kOuter[static_cast<std::size_t>(k)][0],
                    kOuter[static_cast<std::size_t>(k)][1]);
    std::int64_t cs = ii.rect_sum_unchecked(c);
    if (cs * center_area >= center_sum * c.area()) code |= 1 << k;
  }
  return code;
}

/// Split-dimension granularity of a template: responses are defined only for
/// rect sizes divisible by these units.
inline std::array<int, 2> haar_units(HaarTemplate t) {
  switch (t) {
    case HaarTemplate::kEdgeHorizontal: return {1, 2};
    case HaarTemplate::kEdgeVertical: return {2, 1};
    case HaarTemplate::kLineHorizontal: return {1, 3};
    case HaarTemplate::kLineVertical: return {3, 1};
    case HaarTemplate::kDiagonal: return {2, 2};
  }
  return {1, 1};
}

/// Signed response: (sum over light region) - (sum over dark region).
/// Conventions: edges are light-top/light-left; lines are light outer thirds
/// around a dark middle band; diagonal is light TL+BR.
inline std::int64_t haar_response(const IntegralImage& ii, const Rect& r,
                                  HaarTemplate t) {
  auto [uw, uh] = haar_units(t);
  if (r.w < uw || r.h < uh || r.w % uw != 0 || r.h % uh != 0)
    throw std::invalid_argument("haar_response: rect incompatible with template");
  if (!ii.in_bounds(r))
    throw std::out_of_range("haar_response: rect outside image");
  switch (t) {
    case HaarTemplate::kEdgeHorizontal: {
      int hh = r.h / 2;
      Rect top{r.x, r.y, r.w, hh};
      Rect bottom{r.x, r.y + hh, r.w, hh};
      return ii.rect_sum_unchecked(top) - ii.rect_sum_unchecked(bottom);
    }
    case HaarTemplate::kEdgeVertical: {
      int hw = r.w / 2;
      Rect left{r.x, r.y, hw, r.h};
      Rect right{r.x + hw, r.y, hw, r.h};
      return ii.rect_sum_unchecked(left) - ii.rect_sum_unchecked(right);
    }
    case HaarTemplate::kLineHorizontal: {
      int th = r.h / 3;
      Rect mid{r.x, r.y + th, r.w, th};
      // light outer thirds minus dark middle: (total - mid) - mid
      return ii.rect_sum_unchecked(r) - 2 * ii.rect_sum_unchecked(mid);
    }
    case HaarTemplate::kLineVertical: {
      int tw = r.w / 3;
      Rect mid{r.x + tw, r.y, tw, r.h};
      return ii.rect_sum_unchecked(r) - 2 * ii.rect_sum_unchecked(mid);
    }
    case HaarTemplate::kDiagonal: {
      int hw = r.w / 2;
      int hh = r.h / 2;
      Rect tl{r.x, r.y, hw, hh};
      Rect br{r.x + hw, r.y + hh, hw, hh};
      Rect tr{r.x + hw, r.y, hw, hh};
      Rect bl{r.x, r.y + hh, hw, hh};
      return ii.rect_sum_unchecked(tl) + ii.rect_sum_unchecked(br) -
             ii.rect_sum_unchecked(tr) - ii.rect_sum_unchecked(bl);
    }
  }
  return 0;
}

// --- scaled placement ------------------------------------------------------

/// A detection window over an integral image: aperture-local feature rects are
/// scaled by `scale` and offset by (x0, y0). scale 1 with offset (0, 0) is the
/// training-patch view.
struct WindowView {
  const IntegralImage* image = nullptr;
  int x0 = 0;
  int y0 = 0;
  double scale = 1.0;
};

namespace detail {
inline int hround(double v) { return static_cast<int>(std::floor(v + 0.5)); }
}  // namespace detail

/// Scaled window extent for an aperture (round-half-up).
inline std::array<int, 2> scaled_window_size(Aperture ap, double scale) {
  return {detail::hround(ap.width * scale), detail::hround(ap.height * scale)};
}

/// Pyramid of window scales min_scale * scale_step^k, keeping every scale
/// whose window still fits the frame (and stays under max_scale).
inline std::vector<double> scan_scales(Aperture ap, int frame_w, int frame_h,
                                       double min_scale, double scale_step,
                                       double max_scale) {
  if (!(scale_step > 1.0)) throw std::invalid_argument("scan_scales: scale_step <= 1");
  if (!(min_scale > 0.0)) throw std::invalid_argument("scan_scales: min_scale <= 0");
  std::vector<double> scales;
  for (double s = min_scale; s <= max_scale; s *= scale_step) {
    auto [ww, wh] = scaled_window_size(ap, s);
    if (ww > frame_w || wh > frame_h) break;
    scales.push_back(s);
  }
  return scales;
}

/// Window step at a pyramid level: the base stride scaled with the window.
inline int effective_stride(int stride, double scale) {
  return std::max(1, detail::hround(stride * scale));
}

/// Places a census/LBP rect into a window: positions and sizes scale with
/// round-half-up, sizes never drop below 3, and the rect is shifted (not
/// shrunk) back inside the window if rounding pushed it over the edge.
inline Rect place_code_rect(const Rect& local, Aperture ap, const WindowView& win) {
  auto [ww, wh] = scaled_window_size(ap, win.scale);
  int w = std::max(3, detail::hround(local.w * win.scale));
  int h = std::max(3, detail::hround(local.h * win.scale));
  w = std::min(w, ww);
  h = std::min(h, wh);
  int x = detail::hround(local.x * win.scale);
  int y = detail::hround(local.y * win.scale);
  x = std::min(x, ww - w);
  y = std::min(y, wh - h);
  return Rect{win.x0 + std::max(0, x), win.y0 + std::max(0, y), w, h};
}

/// Haar variant: the template's unit blocks are scaled first so divisibility
/// is preserved exactly at every scale.
inline Rect place_haar_rect(const Rect& local, HaarTemplate t, Aperture ap,
                            const WindowView& win) {
  auto [uw, uh] = haar_units(t);
  auto [ww, wh] = scaled_window_size(ap, win.scale);
  int bw = std::max(1, detail::hround(static_cast<double>(local.w) / uw * win.scale));
  int bh = std::max(1, detail::hround(static_cast<double>(local.h) / uh * win.scale));
  while (bw * uw > ww && bw > 1) --bw;
  while (bh * uh > wh && bh > 1) --bh;
  int w = bw * uw;
  int h = bh * uh;
  int x = detail::hround(local.x * win.scale);
  int y = detail::hround(local.y * win.scale);
  x = std::min(x, ww - w);
  y = std::min(y, wh - h);
  return Rect{win.x0 + std::max(0, x), win.y0 + std::max(0, y), w, h};
}

// --- enumeration -----------------------------------------------------------

/// Position/size lattice for feature enumeration. Bounded pools keep the weak
/// learner search tractable; everything here is configurable.
struct FeatureLattice {
  int stride = 1;
  int min_w = 3;
  int min_h = 3;
  int step_w = 3;
  int step_h = 3;
};

inline FeatureLattice default_lattice(FeatureKind kind,
                                      HaarTemplate t = HaarTemplate::kEdgeHorizontal) {
  if (kind != FeatureKind::kHaar) return FeatureLattice{1, 3, 3, 3, 3};
  auto [uw, uh] = haar_units(t);
  FeatureLattice lat;
  lat.stride = 2;
  lat.min_w = uw == 1 ? 2 : 2 * uw;
  lat.min_h = uh == 1 ? 2 : 2 * uh;
  lat.step_w = uw == 1 ? 2 : uw;
  lat.step_h = uh == 1 ? 2 : uh;
  return lat;
}

/// All lattice placements of one family inside the aperture. Deterministic
/// order: height, then width, then y, then x, all ascending. For haar,
/// incompatible sizes on a custom lattice are skipped.
inline std::vector<FeatureDescriptor> enumerate_features(
    Aperture ap, FeatureKind kind, const FeatureLattice& lat,
    HaarTemplate t = HaarTemplate::kEdgeHorizontal) {
  if (lat.stride < 1 || lat.step_w < 1 || lat.step_h < 1)
    throw std::invalid_argument("enumerate_features: invalid lattice");
  if (kind != FeatureKind::kHaar && (lat.min_w < 3 || lat.min_h < 3))
    throw std::invalid_argument(
        "enumerate_features: census/LBP features need at least 3x3");
  std::vector<FeatureDescriptor> out;
  auto units = kind == FeatureKind::kHaar ? haar_units(t) : std::array<int, 2>{1, 1};
  for (int h = lat.min_h; h <= ap.height; h += lat.step_h) {
    if (h % units[1] != 0) continue;
    for (int w = lat.min_w; w <= ap.width; w += lat.step_w) {
      if (w % units[0] != 0) continue;
      for (int y = 0; y + h <= ap.height; y += lat.stride) {
        for (int x = 0; x + w <= ap.width; x += lat.stride) {
          FeatureDescriptor f;
          f.kind = kind;
          f.tmpl = t;
          f.rect = Rect{x, y, w, h};
          out.push_back(f);
        }
      }
    }
  }
  if (out.empty())
    throw std::invalid_argument(
        "enumerate_features: aperture " + std::to_string(ap.width) + "x" +
        std::to_string(ap.height) + " admits no " + to_string(kind) +
        " features on this lattice");
  return out;
}

/// Default training pool: one family on its default lattice; haar pools all
/// five templates back to back.
inline std::vector<FeatureDescriptor> default_feature_pool(Aperture ap,
                                                           FeatureKind kind) {
  if (kind != FeatureKind::kHaar)
    return enumerate_features(ap, kind, default_lattice(kind));
  std::vector<FeatureDescriptor> pool;
  for (HaarTemplate t : kAllHaarTemplates) {
    auto part = enumerate_features(ap, kind, default_lattice(kind, t), t);
    pool.insert(pool.end(), part.begin(), part.end());
  }
  return pool;
}

}  // namespace nlbp
