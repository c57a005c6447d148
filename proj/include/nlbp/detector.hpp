#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nlbp/classifiers.hpp"
#include "nlbp/dataset.hpp"
#include "nlbp/features.hpp"
#include "nlbp/io_util.hpp"
#include "nlbp/parallel.hpp"

namespace nlbp {

struct Detection {
  Rect rect;  // frame coordinates
  double score = 0.0;  // final-stage score
  std::string label;
  double scale = 1.0;
};

struct ScanConfig {
  int stride = 2;
  double scale_step = 1.25;
  double min_scale = 1.0;
  double max_scale = std::numeric_limits<double>::infinity();
  double nms_iou = 0.3;

  void validate() const {
    if (stride < 1) throw std::invalid_argument("stride < 1");
    if (!(scale_step > 1.0)) throw std::invalid_argument("scale_step <= 1");
    if (!(nms_iou > 0.0 && nms_iou < 1.0)) throw std::invalid_argument("nms_iou outside (0, 1)");
  }
};

/// Window counts as they flow through the cascade; stage k+1 never sees more
/// windows than stage k.
struct ScanStats {
  std::vector<std::int64_t> windows_per_stage;
  std::int64_t accepted = 0;
  int levels = 0;
};

/// Slides the cascade across the scale pyramid. One integral image serves all
/// levels; feature rects scale with the window. Rows within a level run in
/// parallel, results merge in (scale, y, x) order.
inline std::vector<Detection> scan(const GrayImage& frame, const Cascade& cascade,
                                   const ScanConfig& cfg, ScanStats* stats = nullptr,
                                   std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  if (cascade.stages.empty()) throw std::invalid_argument("scan: cascade has no stages");
  ScanStats local;
  local.windows_per_stage.assign(cascade.stages.size(), 0);
  std::vector<Detection> out;
  std::vector<double> scales =
      scan_scales(cascade.aperture, frame.width(), frame.height(), cfg.min_scale,
                  cfg.scale_step, cfg.max_scale);
  if (scales.empty() && warnings)
    warnings->push_back("frame " + std::to_string(frame.width()) + "x" +
                        std::to_string(frame.height()) +
                        " smaller than the detection window; nothing scanned");
  IntegralImage ii(frame);
  for (double s : scales) {
    ++local.levels;
    auto [ww, wh] = scaled_window_size(cascade.aperture, s);
    int step = effective_stride(cfg.stride, s);
    std::int64_t n_rows = (frame.height() - wh) / step + 1;
    int workers = worker_budget();
    std::int64_t chunks = std::min<std::int64_t>(workers, n_rows);
    struct ChunkOut {
      std::vector<Detection> dets;
      std::vector<std::int64_t> per_stage;
    };
    std::vector<ChunkOut> chunk_out(static_cast<std::size_t>(std::max<std::int64_t>(1, chunks)));
    std::int64_t rows_per_chunk = (n_rows + chunks - 1) / chunks;
    parallel_for(
        chunks,
        [&](std::int64_t c) {
          ChunkOut& co = chunk_out[static_cast<std::size_t>(c)];
          co.per_stage.assign(cascade.stages.size(), 0);
          std::int64_t r_begin = c * rows_per_chunk;
          std::int64_t r_end = std::min(r_begin + rows_per_chunk, n_rows);
          for (std::int64_t r = r_begin; r < r_end; ++r) {
            int y = static_cast<int>(r) * step;
            for (int x = 0; x + ww <= frame.width(); x += step) {
              WindowView win{&ii, x, y, s};
              double score = 0.0;
              bool ok = true;
              for (std::size_t st = 0; st < cascade.stages.size(); ++st) {
                ++co.per_stage[st];
                score = cascade.stages[st].score(win, cascade.aperture);
                if (!(score > cascade.stages[st].theta)) {
                  ok = false;
                  break;
                }
              }
              if (ok)
                co.dets.push_back(
                    Detection{Rect{x, y, ww, wh}, score, cascade.label, s});
            }
          }
        },
        static_cast<int>(chunks));
    for (ChunkOut& co : chunk_out) {
      for (std::size_t st = 0; st < co.per_stage.size(); ++st)
        local.windows_per_stage[st] += co.per_stage[st];
      out.insert(out.end(), co.dets.begin(), co.dets.end());
    }
  }
  local.accepted = static_cast<std::int64_t>(out.size());
  if (stats) *stats = std::move(local);
  return out;
}

/// Greedy non-maximum suppression: detections ordered by (score desc, label
/// asc, x, y); one is dropped when its IoU with an already-kept detection
/// reaches nms_iou. Label ordering makes cross-label conflicts resolve to the
/// lower digit on exact score ties.
inline std::vector<Detection> group_detections(std::vector<Detection> dets,
                                               double nms_iou) {
  if (!(nms_iou > 0.0 && nms_iou < 1.0))
    throw std::invalid_argument("group_detections: nms_iou outside (0, 1)");
  std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.label != b.label) return a.label < b.label;
    if (a.rect.x != b.rect.x) return a.rect.x < b.rect.x;
    return a.rect.y < b.rect.y;
  });
  std::vector<Detection> kept;
  for (Detection& d : dets) {
    bool suppressed = false;
    for (const Detection& k : kept)
      if (iou(d.rect, k.rect) >= nms_iou) {
        suppressed = true;
        break;
      }
    if (!suppressed) kept.push_back(std::move(d));
  }
  return kept;
}

// --- number reading --------------------------------------------------------

/// The number detector plus one cascade per digit 0..9.
struct DetectorEnsemble {
  Cascade number;
  std::vector<Cascade> digits;  // digits[i].label == std::to_string(i)

  void validate() const {
    if (number.stages.empty())
      throw std::invalid_argument("ensemble: number cascade has no stages");
    if (digits.size() != 10)
      throw std::invalid_argument("ensemble: expected 10 digit cascades, got " +
                                  std::to_string(digits.size()));
    for (std::size_t i = 0; i < digits.size(); ++i)
      if (digits[i].label != std::to_string(i))
        throw std::invalid_argument("ensemble: digit cascade " + std::to_string(i) +
                                    " is labeled '" + digits[i].label + "'");
  }
};

struct NumberReading {
  Rect plate;  // frame coordinates
  double plate_score = 0.0;
  std::string digits;  // left-to-right
  std::vector<Detection> digit_detections;  // in the normalized strip's coordinates
};

/// Plate search, strip normalization to 240x76, digit search by all ten digit
/// cascades, cross-label suppression, then left-to-right assembly.
inline std::vector<NumberReading> read_number(const GrayImage& frame,
                                              const DetectorEnsemble& ensemble,
                                              const ScanConfig& plate_cfg,
                                              const ScanConfig& digit_cfg) {
  ensemble.validate();
  std::vector<NumberReading> out;
  std::vector<Detection> plates =
      group_detections(scan(frame, ensemble.number, plate_cfg), plate_cfg.nms_iou);
  for (const Detection& plate : plates) {
    NumberReading reading;
    reading.plate = plate.rect;
    reading.plate_score = plate.score;
    GrayImage strip = normalize_number_plate(frame, plate.rect);
    std::vector<Detection> all;
    for (const Cascade& digit : ensemble.digits) {
      std::vector<Detection> dets = scan(strip, digit, digit_cfg);
      all.insert(all.end(), dets.begin(), dets.end());
    }
    std::vector<Detection> kept = group_detections(std::move(all), digit_cfg.nms_iou);
    std::sort(kept.begin(), kept.end(), [](const Detection& a, const Detection& b) {
      if (a.rect.x != b.rect.x) return a.rect.x < b.rect.x;
      if (a.rect.y != b.rect.y) return a.rect.y < b.rect.y;
      return a.label < b.label;
    });
    for (const Detection& d : kept) reading.digits += d.label;
    reading.digit_detections = std::move(kept);
    out.push_back(std::move(reading));
  }
  return out;
}

// --- detection records -----------------------------------------------------

/// One stable, diff-friendly line per detection:
/// image_id label x y w h score scale
inline std::string format_detection_line(const std::string& image_id,
                                         const Detection& d) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s %s %d %d %d %d %.17g %.17g", image_id.c_str(),
                d.label.c_str(), d.rect.x, d.rect.y, d.rect.w, d.rect.h, d.score,
                d.scale);
  return buf;
}

inline std::pair<std::string, Detection> parse_detection_line(const std::string& line) {
  std::istringstream ls(line);
  std::string image_id;
  Detection d;
  if (!(ls >> image_id >> d.label >> d.rect.x >> d.rect.y >> d.rect.w >> d.rect.h >>
        d.score >> d.scale))
    throw std::runtime_error("bad detection record: " + line);
  return {std::move(image_id), std::move(d)};
}

inline void write_detections(const std::filesystem::path& path,
                             const std::vector<std::pair<std::string, Detection>>& records) {
  std::ostringstream out;
  for (const auto& [id, d] : records) out << format_detection_line(id, d) << "\n";
  write_text_file(path, out.str());
}

inline std::vector<std::pair<std::string, Detection>> read_detections(
    const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<std::pair<std::string, Detection>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(parse_detection_line(line));
  }
  return out;
}

// --- bootstrap negative mining ---------------------------------------------

/// Hard-negative source scanning full frames: yields lattice windows that the
/// cascade built so far still accepts and that stay clear of every marked
/// box. A cursor persists across calls, so successive mining rounds walk
/// fresh windows; the walk is deterministic and ends after one full sweep.
class FrameScanSource : public NegativeSource {
 public:
  FrameScanSource(std::vector<GrayImage> frames,
                  std::vector<std::vector<Rect>> exclusions, DatasetConfig cfg)
      : frames_(std::move(frames)), exclusions_(std::move(exclusions)), cfg_(cfg) {
    cfg_.validate();
    if (exclusions_.size() != frames_.size())
      throw std::invalid_argument("FrameScanSource: exclusion list count != frame count");
    for (const GrayImage& f : frames_) integrals_.emplace_back(f);
  }

  std::vector<GrayImage> mine(const Cascade& so_far, int count) override {
    std::vector<GrayImage> out;
    if (frames_.empty() || count <= 0) return out;
    std::uint64_t inspected = 0;
    const std::uint64_t budget = total_windows();
    while (static_cast<int>(out.size()) < count && inspected < budget) {
      Cursor c = cursor_;
      advance();
      ++inspected;
      const GrayImage& frame = frames_[c.frame];
      std::vector<double> scales = frame_scales(c.frame);
      if (c.scale_idx >= scales.size()) continue;
      double s = scales[c.scale_idx];
      auto [ww, wh] = scaled_window_size(cfg_.aperture, s);
      int step = effective_stride(cfg_.scan_stride, s);
      int x = static_cast<int>(c.col) * step;
      int y = static_cast<int>(c.row) * step;
      if (x + ww > frame.width() || y + wh > frame.height()) continue;
      Rect win{x, y, ww, wh};
      bool clear = true;
      for (const Rect& ex : exclusions_[c.frame])
        if (iou(win, ex) >= cfg_.overlap_threshold) {
          clear = false;
          break;
        }
      if (!clear) continue;
      if (!so_far.stages.empty()) {
        WindowView view{&integrals_[c.frame], x, y, s};
        if (!so_far.evaluate(view).accepted) continue;
      }
      out.push_back(extract_patch(frame, win, cfg_.aperture));
    }
    return out;
  }

 private:
  struct Cursor {
    std::size_t frame = 0;
    std::size_t scale_idx = 0;
    std::size_t row = 0;
    std::size_t col = 0;
  };

  std::vector<double> frame_scales(std::size_t fi) const {
    return scan_scales(cfg_.aperture, frames_[fi].width(), frames_[fi].height(),
                       cfg_.min_scale, cfg_.scale_step, cfg_.max_scale);
  }

  std::pair<std::size_t, std::size_t> grid_dims(std::size_t fi, double s) const {
    auto [ww, wh] = scaled_window_size(cfg_.aperture, s);
    int step = effective_stride(cfg_.scan_stride, s);
    std::size_t cols = static_cast<std::size_t>((frames_[fi].width() - ww) / step + 1);
    std::size_t rows = static_cast<std::size_t>((frames_[fi].height() - wh) / step + 1);
    return {rows, cols};
  }

  std::uint64_t total_windows() const {
    std::uint64_t n = 0;
    for (std::size_t fi = 0; fi < frames_.size(); ++fi)
      for (double s : frame_scales(fi)) {
        auto [rows, cols] = grid_dims(fi, s);
        n += static_cast<std::uint64_t>(rows) * cols;
      }
    return std::max<std::uint64_t>(n, 1);
  }

  void advance() {
    Cursor& c = cursor_;
    std::vector<double> scales = frame_scales(c.frame);
    auto [rows, cols] = c.scale_idx < scales.size()
                            ? grid_dims(c.frame, scales[c.scale_idx])
                            : std::pair<std::size_t, std::size_t>{0, 0};
    if (++c.col < cols) return;
    c.col = 0;
    if (++c.row < rows) return;
    c.row = 0;
    if (++c.scale_idx < scales.size()) return;
    c.scale_idx = 0;
    if (++c.frame >= frames_.size()) c.frame = 0;
  }

  std::vector<GrayImage> frames_;
  std::vector<std::vector<Rect>> exclusions_;
  DatasetConfig cfg_;
  std::vector<IntegralImage> integrals_;
  Cursor cursor_;
};

}  // namespace nlbp
