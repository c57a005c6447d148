#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nlbp/core.hpp"
#include "nlbp/features.hpp"
#include "nlbp/io_util.hpp"
#include "nlbp/resample.hpp"
#include "nlbp/rng.hpp"

namespace nlbp {

inline constexpr int kPlateWidth = 240;
inline constexpr int kPlateHeight = 76;

/// One marked box in a source image.
struct Annotation {
  std::string image_id;
  Rect box;
  std::string label;  // "number" or a digit "0".."9"
};

/// Column positions (0-based) in a sidecar annotation line. Defaults match
/// the native "label x y w h" layout; remap for third-party annotation dumps.
struct AnnotationColumns {
  int label = 0;
  int x = 1;
  int y = 2;
  int w = 3;
  int h = 4;

  int min_columns() const {
    return std::max({label, x, y, w, h}) + 1;
  }
};

/// Parses one sidecar file (one line per box, '#' comments allowed).
inline std::vector<Annotation> load_annotation_file(const std::filesystem::path& path,
                                                    const std::string& image_id,
                                                    const AnnotationColumns& cols = {}) {
  std::string body = read_text_file(path);
  std::istringstream in(body);
  std::vector<Annotation> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> fields;
    std::string tok;
    while (ls >> tok) {
      if (tok[0] == '#') break;
      fields.push_back(tok);
    }
    if (fields.empty()) continue;
    if (static_cast<int>(fields.size()) < cols.min_columns())
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected at least " +
                               std::to_string(cols.min_columns()) + " columns, got " +
                               std::to_string(fields.size()));
    auto as_int = [&](int col) {
      const std::string& s = fields[static_cast<std::size_t>(col)];
      std::size_t pos = 0;
      int v;
      try {
        v = std::stoi(s, &pos);
      } catch (const std::exception&) {
        pos = 0;
        v = 0;
      }
      if (pos != s.size())
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": bad integer '" + s + "'");
      return v;
    };
    Annotation a;
    a.image_id = image_id;
    a.label = fields[static_cast<std::size_t>(cols.label)];
    a.box = Rect{as_int(cols.x), as_int(cols.y), as_int(cols.w), as_int(cols.h)};
    if (a.box.w <= 0 || a.box.h <= 0)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": degenerate box");
    out.push_back(std::move(a));
  }
  return out;
}

struct DatasetConfig {
  Aperture aperture;
  double overlap_threshold = 0.75;  // in (0, 1]
  std::uint64_t seed = 0;
  int scan_stride = 1;
  double scale_step = 1.25;
  double min_scale = 1.0;
  double max_scale = std::numeric_limits<double>::infinity();

  void validate() const {
    if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0))
      throw std::invalid_argument("overlap_threshold must be in (0, 1]");
    if (aperture.width < 3 || aperture.height < 3)
      throw std::invalid_argument("aperture too small");
    if (scan_stride < 1) throw std::invalid_argument("scan_stride < 1");
    if (!(scale_step > 1.0)) throw std::invalid_argument("scale_step <= 1");
  }
};

/// Where a patch came from: enough to re-extract it from the source image.
struct PatchProvenance {
  std::string image_id;
  Rect window;
  double scale = 1.0;
};

struct SampleSet {
  Aperture aperture;
  std::vector<GrayImage> positives;
  std::vector<GrayImage> negatives;
  std::vector<PatchProvenance> pos_prov;
  std::vector<PatchProvenance> neg_prov;
};

/// Crops a window and resamples it to the aperture. A scale-1 window is a
/// pixel-exact copy.
inline GrayImage extract_patch(const GrayImage& image, const Rect& window, Aperture ap) {
  return resample_bilinear(image, window, ap.width, ap.height);
}

/// Exports every scan-lattice window whose IoU with `box` meets the overlap
/// threshold. Candidate positions are limited to windows that intersect the
/// box at all, which loses nothing: IoU > 0 requires intersection. Scales
/// whose window/box area ratio is already below the threshold are skipped
/// (IoU can never exceed the smaller-to-larger area ratio).
inline void extract_positives_for_box(const GrayImage& image, const std::string& image_id,
                                      const Rect& box, const DatasetConfig& cfg,
                                      SampleSet& out,
                                      std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  if (!(Rect{0, 0, image.width(), image.height()}.contains(box)))
    throw std::invalid_argument("annotation box outside image: " + image_id);
  const double t = cfg.overlap_threshold;
  std::vector<double> scales = scan_scales(cfg.aperture, image.width(), image.height(),
                                           cfg.min_scale, cfg.scale_step, cfg.max_scale);
  std::size_t emitted_before = out.positives.size();
  for (double s : scales) {
    auto [ww, wh] = scaled_window_size(cfg.aperture, s);
    double a_win = static_cast<double>(ww) * wh;
    double a_box = static_cast<double>(box.area());
    if (std::min(a_win, a_box) / std::max(a_win, a_box) < t) continue;
    int step = effective_stride(cfg.scan_stride, s);
    // lattice positions intersecting the box, clamped to the frame
    auto lattice_range = [&](int lo_raw, int hi_raw, int max_pos) {
      int lo = std::max(0, lo_raw);
      lo = (lo + step - 1) / step * step;  // snap up to the lattice
      int hi = std::min(hi_raw, max_pos);
      return std::pair<int, int>{lo, hi};
    };
    auto [y_lo, y_hi] = lattice_range(box.y - wh + 1, box.bottom() - 1,
                                      image.height() - wh);
    auto [x_lo, x_hi] = lattice_range(box.x - ww + 1, box.right() - 1,
                                      image.width() - ww);
    for (int y = y_lo; y <= y_hi; y += step) {
      for (int x = x_lo; x <= x_hi; x += step) {
        Rect win{x, y, ww, wh};
        if (iou(win, box) >= t) {
          out.positives.push_back(extract_patch(image, win, cfg.aperture));
          out.pos_prov.push_back(PatchProvenance{image_id, win, s});
        }
      }
    }
  }
  if (out.positives.size() == emitted_before && warnings)
    warnings->push_back("box " + std::to_string(box.x) + "," + std::to_string(box.y) +
                        " " + std::to_string(box.w) + "x" + std::to_string(box.h) +
                        " in " + image_id +
                        " matched no lattice window at overlap >= " + std::to_string(t));
}

/// A frame contributing negatives; `exclusions` are all marked boxes
/// (any label) that sampled windows must stay clear of.
struct NegativeFrame {
  const GrayImage* image = nullptr;
  std::string image_id;
  std::vector<Rect> exclusions;
};

/// Seeded uniform sample (without replacement) of lattice windows whose IoU
/// with every exclusion box stays under the overlap threshold. Returns fewer
/// than `count` with a warning when the pool is too small.
inline void sample_negatives(std::span<const NegativeFrame> frames,
                             const DatasetConfig& cfg, std::int64_t count,
                             SampleSet& out,
                             std::vector<std::string>* warnings = nullptr) {
  cfg.validate();
  struct Candidate {
    std::int32_t frame;
    std::int32_t scale_idx;
    std::int32_t x, y;
  };
  std::vector<Candidate> pool;
  std::vector<std::vector<double>> frame_scales(frames.size());
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const NegativeFrame& fr = frames[fi];
    frame_scales[fi] = scan_scales(cfg.aperture, fr.image->width(), fr.image->height(),
                                   cfg.min_scale, cfg.scale_step, cfg.max_scale);
    for (std::size_t si = 0; si < frame_scales[fi].size(); ++si) {
      double s = frame_scales[fi][si];
      auto [ww, wh] = scaled_window_size(cfg.aperture, s);
      int step = effective_stride(cfg.scan_stride, s);
      for (int y = 0; y + wh <= fr.image->height(); y += step) {
        for (int x = 0; x + ww <= fr.image->width(); x += step) {
          Rect win{x, y, ww, wh};
          bool clear = true;
          for (const Rect& ex : fr.exclusions)
            if (iou(win, ex) >= cfg.overlap_threshold) {
              clear = false;
              break;
            }
          if (clear)
            pool.push_back(Candidate{static_cast<std::int32_t>(fi),
                                     static_cast<std::int32_t>(si), x, y});
        }
      }
    }
  }
  std::vector<std::int64_t> picked;
  if (static_cast<std::int64_t>(pool.size()) <= count) {
    picked.resize(pool.size());
    std::iota(picked.begin(), picked.end(), std::int64_t{0});
    if (static_cast<std::int64_t>(pool.size()) < count && warnings)
      warnings->push_back("negative pool has only " + std::to_string(pool.size()) +
                          " windows, requested " + std::to_string(count));
  } else {
    Rng rng(derive_seed(cfg.seed, {hash_string("negatives")}));
    picked = sample_without_replacement(static_cast<std::int64_t>(pool.size()), count, rng);
    std::sort(picked.begin(), picked.end());
  }
  for (std::int64_t idx : picked) {
    const Candidate& c = pool[static_cast<std::size_t>(idx)];
    const NegativeFrame& fr = frames[static_cast<std::size_t>(c.frame)];
    double s = frame_scales[static_cast<std::size_t>(c.frame)]
                           [static_cast<std::size_t>(c.scale_idx)];
    auto [ww, wh] = scaled_window_size(cfg.aperture, s);
    Rect win{c.x, c.y, ww, wh};
    out.negatives.push_back(extract_patch(*fr.image, win, cfg.aperture));
    out.neg_prov.push_back(PatchProvenance{fr.image_id, win, s});
  }
}

/// Seeded 3:1 split by source id; train receives ceil(3n/4) ids. Splitting
/// by id keeps all patches of one image on one side.
inline std::pair<std::vector<std::string>, std::vector<std::string>> split_3to1(
    std::vector<std::string> ids, std::uint64_t seed) {
  if (ids.empty()) throw std::invalid_argument("split_3to1: empty id list");
  Rng rng(derive_seed(seed, {hash_string("split-3to1")}));
  seeded_shuffle(ids, rng);
  std::size_t n_train = (3 * ids.size() + 3) / 4;
  std::vector<std::string> train(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::string> test(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  return {std::move(train), std::move(test)};
}

/// Crops the plate box and resamples to the canonical 240x76 strip.
inline GrayImage normalize_number_plate(const GrayImage& image, const Rect& box) {
  if (box.w <= 0 || box.h <= 0)
    throw std::invalid_argument("normalize_number_plate: degenerate box");
  if (!(Rect{0, 0, image.width(), image.height()}.contains(box)))
    throw std::invalid_argument("normalize_number_plate: box outside image");
  return resample_bilinear(image, box, kPlateWidth, kPlateHeight);
}

// --- manifest + patch store ------------------------------------------------

inline constexpr const char* kManifestMagic = "nlbp-samples 1";
inline constexpr const char* kPatchMagic = "NLBPPATCH1";

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Writes manifest.txt (provenance, human-readable, diff-friendly) and
/// patches.bin (raw patch bytes) into `dir`. Output is byte-stable for a
/// given SampleSet.
inline void save_sample_set(const SampleSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream m;
  m << kManifestMagic << "\n";
  m << "aperture " << set.aperture.width << " " << set.aperture.height << "\n";
  m << "positives " << set.positives.size() << "\n";
  m << "negatives " << set.negatives.size() << "\n";
  m << "# class image_id x y w h scale\n";
  auto emit = [&](const char* cls, const std::vector<PatchProvenance>& prov) {
    for (const PatchProvenance& p : prov)
      m << cls << " " << p.image_id << " " << p.window.x << " " << p.window.y << " "
        << p.window.w << " " << p.window.h << " " << detail::format_double(p.scale)
        << "\n";
  };
  emit("pos", set.pos_prov);
  emit("neg", set.neg_prov);
  write_text_file(dir / "manifest.txt", m.str());

  std::ofstream bin(dir / "patches.bin", std::ios::binary | std::ios::trunc);
  if (!bin) throw std::runtime_error("cannot write " + (dir / "patches.bin").string());
  bin.write(kPatchMagic, static_cast<std::streamsize>(std::strlen(kPatchMagic)));
  auto write_u32 = [&](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    bin.write(reinterpret_cast<const char*>(b), 4);
  };
  write_u32(static_cast<std::uint32_t>(set.positives.size()));
  write_u32(static_cast<std::uint32_t>(set.negatives.size()));
  write_u32(static_cast<std::uint32_t>(set.aperture.width));
  write_u32(static_cast<std::uint32_t>(set.aperture.height));
  auto dump = [&](const std::vector<GrayImage>& patches) {
    for (const GrayImage& p : patches)
      bin.write(reinterpret_cast<const char*>(p.data()),
                static_cast<std::streamsize>(p.pixels().size()));
  };
  dump(set.positives);
  dump(set.negatives);
  bin.flush();
  if (!bin) throw std::runtime_error("write failed: " + (dir / "patches.bin").string());
}

inline SampleSet load_sample_set(const std::filesystem::path& dir) {
  SampleSet set;
  std::istringstream m(read_text_file(dir / "manifest.txt"));
  std::string line;
  if (!std::getline(m, line) || line != kManifestMagic)
    throw std::runtime_error((dir / "manifest.txt").string() + ": not a sample manifest");
  std::size_t n_pos = 0, n_neg = 0;
  {
    std::string key;
    m >> key >> set.aperture.width >> set.aperture.height;
    if (key != "aperture") throw std::runtime_error("manifest: expected aperture line");
    m >> key >> n_pos;
    if (key != "positives") throw std::runtime_error("manifest: expected positives line");
    m >> key >> n_neg;
    if (key != "negatives") throw std::runtime_error("manifest: expected negatives line");
    std::getline(m, line);  // rest of the negatives line
  }
  while (std::getline(m, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string cls;
    PatchProvenance p;
    std::string scale_tok;
    if (!(ls >> cls >> p.image_id >> p.window.x >> p.window.y >> p.window.w >>
          p.window.h >> scale_tok))
      throw std::runtime_error("manifest: bad sample line: " + line);
    p.scale = std::stod(scale_tok);
    if (cls == "pos") set.pos_prov.push_back(std::move(p));
    else if (cls == "neg") set.neg_prov.push_back(std::move(p));
    else throw std::runtime_error("manifest: unknown class '" + cls + "'");
  }
  if (set.pos_prov.size() != n_pos || set.neg_prov.size() != n_neg)
    throw std::runtime_error("manifest: sample lines do not match declared counts");

  std::string bin = read_text_file(dir / "patches.bin");
  std::size_t off = std::strlen(kPatchMagic);
  if (bin.size() < off || bin.compare(0, off, kPatchMagic) != 0)
    throw std::runtime_error((dir / "patches.bin").string() + ": bad magic");
  auto read_u32 = [&]() {
    if (off + 4 > bin.size()) throw std::runtime_error("patches.bin: truncated header");
    std::uint32_t v = static_cast<std::uint8_t>(bin[off]) |
                      static_cast<std::uint32_t>(static_cast<std::uint8_t>(bin[off + 1])) << 8 |
                      static_cast<std::uint32_t>(static_cast<std::uint8_t>(bin[off + 2])) << 16 |
                      static_cast<std::uint32_t>(static_cast<std::uint8_t>(bin[off + 3])) << 24;
    off += 4;
    return v;
  };
  std::uint32_t bp = read_u32(), bn = read_u32(), bw = read_u32(), bh = read_u32();
  if (bp != n_pos || bn != n_neg)
    throw std::runtime_error("patches.bin: counts disagree with manifest");
  if (bw != static_cast<std::uint32_t>(set.aperture.width) ||
      bh != static_cast<std::uint32_t>(set.aperture.height))
    throw std::runtime_error("patches.bin: aperture disagrees with manifest");
  std::size_t patch_bytes = static_cast<std::size_t>(bw) * bh;
  if (bin.size() - off != (static_cast<std::size_t>(bp) + bn) * patch_bytes)
    throw std::runtime_error("patches.bin: size does not match patch count");
  auto take = [&](std::vector<GrayImage>& dst, std::uint32_t count) {
    for (std::uint32_t i = 0; i < count; ++i) {
      std::vector<std::uint8_t> px(patch_bytes);
      std::memcpy(px.data(), bin.data() + off, patch_bytes);
      off += patch_bytes;
      dst.emplace_back(static_cast<int>(bw), static_cast<int>(bh), std::move(px));
    }
  };
  take(set.positives, bp);
  take(set.negatives, bn);
  return set;
}

}  // namespace nlbp
