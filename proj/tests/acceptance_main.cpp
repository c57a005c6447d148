// Release gate. Each numbered check prints exactly one [PASS]/[FAIL]/[SKIP]
// line with its measured numbers; the process exits nonzero if any check
// fails. Thresholds are fixed constants here, not flags.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "nlbp/nlbp.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace nlbp;
namespace fs = std::filesystem;

namespace {

enum class Outcome { kPass, kFail, kSkip };

struct Report {
  Outcome outcome = Outcome::kFail;
  std::string detail;
};

Report pass(std::string detail) { return {Outcome::kPass, std::move(detail)}; }
Report fail(std::string detail) { return {Outcome::kFail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Integral-image sums equal the per-pixel loop for every rect of 500
//    random images up to 32x32, in under 10 seconds.

constexpr double kIntegralTimeLimit = 10.0;

Report check_integral_sums() {
  auto t0 = std::chrono::steady_clock::now();
  Rng rng(0xACC1);
  std::int64_t rects = 0;
  for (int i = 0; i < 500; ++i) {
    int w = rng.uniform_int(1, 32);
    int h = rng.uniform_int(1, 32);
    GrayImage img = synth::noise_image(rng, w, h);
    IntegralImage ii(img);
    for (int y1 = 0; y1 < h; ++y1)
      for (int y2 = y1; y2 < h; ++y2)
        for (int x1 = 0; x1 < w; ++x1)
          for (int x2 = x1; x2 < w; ++x2) {
            Rect r{x1, y1, x2 - x1 + 1, y2 - y1 + 1};
            ++rects;
            if (ii.rect_sum(r) != oracle::rect_sum(img, r))
              return fail(fmt("mismatch on image %d rect %d,%d,%d,%d", i, r.x, r.y,
                              r.w, r.h));
          }
  }
  double secs = seconds_since(t0);
  if (secs >= kIntegralTimeLimit)
    return fail(fmt("took %.1fs (limit %.0fs)", secs, kIntegralTimeLimit));
  return pass(fmt("500 images, %lld rects, %.1fs", static_cast<long long>(rects), secs));
}

// ---------------------------------------------------------------------------
// 2. Census and block-LBP codes equal the pixel-loop reference on 10,000
//    random (image, rect) pairs and stay inside their code ranges.

Report check_code_oracle() {
  Rng rng(0xACC2);
  for (int i = 0; i < 10000; ++i) {
    int w = rng.uniform_int(8, 28);
    int h = rng.uniform_int(8, 28);
    GrayImage img = synth::noise_image(rng, w, h);
    IntegralImage ii(img);
    int rw = rng.uniform_int(3, w);
    int rh = rng.uniform_int(3, h);
    Rect r{static_cast<int>(rng.below(w - rw + 1)),
           static_cast<int>(rng.below(h - rh + 1)), rw, rh};
    int cs = census_code(ii, r);
    int lbp = lbp_code(ii, r);
    if (cs < 0 || cs >= 512) return fail(fmt("census code %d out of range", cs));
    if (lbp < 0 || lbp >= 256) return fail(fmt("lbp code %d out of range", lbp));
    if (cs != oracle::census_code(img, r))
      return fail(fmt("census mismatch at pair %d", i));
    if (lbp != oracle::lbp_code(img, r))
      return fail(fmt("lbp mismatch at pair %d", i));
  }
  return pass("10000 pairs, codes in range");
}

// ---------------------------------------------------------------------------
// 3. Census and LBP codes are invariant under brightness scaling in [0.5, 2]
//    and shifts in [-50, 50] on 1,000 random windows.

Report check_illumination_invariance() {
  // (numerator-of-2 scale, shift) pairs chosen so transformed pixels stay in
  // [0, 255] for even base pixels in [100, 120]
  const std::pair<int, int> transforms[] = {{1, -50}, {1, 50}, {2, -50}, {2, 50},
                                            {3, -50}, {3, 33}, {4, -50}, {4, 15}};
  Rng rng(0xACC3);
  int windows = 0;
  for (int i = 0; i < 50; ++i) {
    GrayImage base = synth::noise_image(rng, 26, 22, 100, 120);
    for (int y = 0; y < base.height(); ++y)
      for (int x = 0; x < base.width(); ++x)
        base.at(x, y) = static_cast<std::uint8_t>(base.at(x, y) & ~1);
    IntegralImage ii(base);
    std::vector<Rect> rects;
    for (int k = 0; k < 20; ++k) {
      int rw = rng.uniform_int(3, base.width());
      int rh = rng.uniform_int(3, base.height());
      rects.push_back(Rect{static_cast<int>(rng.below(base.width() - rw + 1)),
                           static_cast<int>(rng.below(base.height() - rh + 1)), rw, rh});
    }
    windows += static_cast<int>(rects.size());
    for (auto [num2, shift] : transforms) {
      GrayImage warped(base.width(), base.height());
      for (int y = 0; y < base.height(); ++y)
        for (int x = 0; x < base.width(); ++x)
          warped.at(x, y) =
              static_cast<std::uint8_t>(base.at(x, y) * num2 / 2 + shift);
      IntegralImage wii(warped);
      for (const Rect& r : rects) {
        if (census_code(ii, r) != census_code(wii, r))
          return fail(fmt("census changed under a=%d/2 b=%d", num2, shift));
        if (lbp_code(ii, r) != lbp_code(wii, r))
          return fail(fmt("lbp changed under a=%d/2 b=%d", num2, shift));
      }
    }
  }
  return pass(fmt("%d windows x 8 transforms", windows));
}

// ---------------------------------------------------------------------------
// 4. On 50 random training sets every boosting round selects a weak with
//    weighted error < 0.5 and the running training error stays under the
//    product bound prod_t 2*sqrt(e_t(1-e_t)).

constexpr double kBoundSlack = 1e-12;

Report check_boosting_invariants() {
  std::vector<FeatureDescriptor> pool = enumerate_features(
      kDigitAperture, FeatureKind::kCensus, FeatureLattice{2, 6, 9, 6, 9});
  int total_rounds = 0;
  for (std::uint64_t task = 0; task < 50; ++task) {
    auto [pos, neg] =
        synth::glyph_task(derive_seed(0xACC4, {task}), 30, 60, kDigitAperture);
    TrainingSet ts = TrainingSet::build(pool, pos, neg, kDigitAperture);
    StrongTrainResult strong = train_strong(ts, StageTargets{0.995, 0.05, 8});
    double bound = 1.0;
    for (const RoundRecord& r : strong.rounds) {
      ++total_rounds;
      if (!(r.weighted_error < 0.5))
        return fail(fmt("task %llu: weighted error %.6f not < 0.5",
                        static_cast<unsigned long long>(task), r.weighted_error));
      bound *= 2.0 * std::sqrt(r.weighted_error * (1.0 - r.weighted_error));
      if (!(r.train_error <= bound + kBoundSlack))
        return fail(fmt("task %llu: training error %.6g above bound %.6g",
                        static_cast<unsigned long long>(task), r.train_error, bound));
    }
  }
  return pass(fmt("50 training sets, %d rounds", total_rounds));
}

// ---------------------------------------------------------------------------
// 5. Raising the decision threshold never increases the false-accept rate
//    and never decreases the false-reject rate on a fixed scored sample set.

Report check_threshold_monotonicity() {
  auto [train_pos, train_neg] = synth::glyph_task(0xACC5, 100, 200, kDigitAperture);
  std::vector<FeatureDescriptor> pool = enumerate_features(
      kDigitAperture, FeatureKind::kCensus, FeatureLattice{2, 6, 9, 6, 9});
  TrainingSet ts = TrainingSet::build(pool, train_pos, train_neg, kDigitAperture);
  StrongClassifier sc = train_strong(ts, StageTargets{0.99, 0.3, 12}).classifier;

  auto [eval_pos, eval_neg] = synth::glyph_task(0xACC5 + 1, 150, 300, kDigitAperture);
  auto scores = [&](const std::vector<GrayImage>& patches) {
    std::vector<double> s;
    for (const GrayImage& p : patches) {
      IntegralImage ii(p);
      s.push_back(sc.score(WindowView{&ii, 0, 0, 1.0}, kDigitAperture));
    }
    return s;
  };
  std::vector<double> pos_scores = scores(eval_pos);
  std::vector<double> neg_scores = scores(eval_neg);

  std::vector<double> thetas = pos_scores;
  thetas.insert(thetas.end(), neg_scores.begin(), neg_scores.end());
  thetas.push_back(-1.0);
  std::sort(thetas.begin(), thetas.end());
  double prev_far = 1.0, prev_frr = 0.0;
  for (double theta : thetas) {
    auto above = [&](const std::vector<double>& s) {
      return static_cast<double>(
                 std::count_if(s.begin(), s.end(), [&](double v) { return v > theta; })) /
             static_cast<double>(s.size());
    };
    double far = above(neg_scores);
    double frr = 1.0 - above(pos_scores);
    if (far > prev_far + 1e-15 || frr < prev_frr - 1e-15)
      return fail(fmt("at theta %.6f: far %.4f (prev %.4f) frr %.4f (prev %.4f)",
                      theta, far, prev_far, frr, prev_frr));
    prev_far = far;
    prev_frr = frr;
  }
  return pass(fmt("%zu thresholds swept", thetas.size()));
}

// ---------------------------------------------------------------------------
// 6. A cascade decision equals the AND of its stage decisions on 10,000
//    random windows, and the scanner equals brute-force window
//    re-classification on whole frames.

Cascade random_census_cascade(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureDescriptor> pool =
      default_feature_pool(kDigitAperture, FeatureKind::kCensus);
  Cascade c;
  c.label = "rand";
  c.kind = FeatureKind::kCensus;
  c.aperture = kDigitAperture;
  for (int s = 0; s < 3; ++s) {
    StrongClassifier sc;
    double weight_sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      WeakClassifier w;
      w.feature = pool[static_cast<std::size_t>(rng.below(
          static_cast<std::int64_t>(pool.size())))];
      w.lut.resize(512);
      for (auto& bit : w.lut) bit = static_cast<std::uint8_t>(rng.below(2));
      sc.weaks.push_back(std::move(w));
      double wt = rng.uniform(0.5, 1.5);
      sc.weights.push_back(wt);
      weight_sum += wt;
    }
    sc.theta = 0.45 * weight_sum;
    c.stages.push_back(std::move(sc));
  }
  return c;
}

Report check_cascade_soundness() {
  Cascade cascade = random_census_cascade(0xACC6);
  Rng rng(0xACC6 + 1);
  for (int i = 0; i < 10000; ++i) {
    GrayImage patch = synth::noise_image(rng, 12, 24);
    IntegralImage ii(patch);
    WindowView win{&ii, 0, 0, 1.0};
    bool all = true;
    int first_reject = -1;
    for (std::size_t s = 0; s < cascade.stages.size(); ++s) {
      bool ok = cascade.stages[s].score(win, cascade.aperture) > cascade.stages[s].theta;
      if (!ok && all) first_reject = static_cast<int>(s);
      all = all && ok;
    }
    Cascade::Result r = cascade.evaluate(win);
    if (r.accepted != all || r.rejected_stage != first_reject)
      return fail(fmt("window %d: cascade %d/%d vs stage-AND %d/%d", i, r.accepted,
                      r.rejected_stage, all, first_reject));
  }

  ScanConfig cfg;
  std::int64_t detections = 0;
  for (int trial = 0; trial < 2; ++trial) {
    GrayImage frame = synth::noise_image(rng, 128, 64);
    std::vector<Detection> fast = scan(frame, cascade, cfg);
    std::vector<Detection> slow = oracle::scan(frame, cascade, cfg);
    if (fast.size() != slow.size())
      return fail(fmt("scan found %zu windows, oracle %zu", fast.size(), slow.size()));
    for (std::size_t i = 0; i < fast.size(); ++i)
      if (fast[i].rect != slow[i].rect || fast[i].score != slow[i].score ||
          fast[i].scale != slow[i].scale)
        return fail(fmt("scan record %zu differs from oracle", i));
    detections += static_cast<std::int64_t>(fast.size());
  }
  return pass(fmt("10000 windows, 2 frames, %lld scan hits",
                  static_cast<long long>(detections)));
}

// ---------------------------------------------------------------------------
// 7. Two invocations of the command-line trainer with the same inputs and
//    seed produce byte-identical model and trace files.

int run_tool(const std::string& args) {
  std::string cmd =
      std::string(NLBP_CLI_PATH) + " " + args + " >/dev/null 2>/dev/null";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_annotated_corpus(const fs::path& dir, int n_frames) {
  fs::create_directories(dir);
  Rng rng(0x0C0);
  for (int i = 0; i < n_frames; ++i) {
    double gx = rng.uniform(-1.2, 1.2), gy = rng.uniform(-1.2, 1.2);
    int base = rng.uniform_int(110, 150);
    GrayImage frame(100, 70);
    for (int y = 0; y < 70; ++y)
      for (int x = 0; x < 100; ++x) {
        double v = base + gx * (x - 50) + gy * (y - 35);
        frame.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    synth::jitter_pixels(frame, rng, 5);
    GrayImage glyph = synth::glyph_positive(rng, kDigitAperture, 7);
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 12; ++x) frame.at(10 + x, 12 + y) = glyph.at(x, y);
    std::string stem = "frame-" + std::to_string(i);
    write_pgm(dir / (stem + ".pgm"), frame);
    write_text_file(dir / (stem + ".txt"), "7 10 12 12 24\n");
  }
}

Report check_training_determinism() {
  fs::path root = fs::temp_directory_path() / "nlbp_acceptance_determinism";
  fs::remove_all(root);
  write_annotated_corpus(root / "images", 4);
  if (run_tool("prepare --images " + (root / "images").string() + " --out " +
               (root / "data").string() + " --label 7 --negatives 200 --seed 3") != 0)
    return fail("prepare run failed");
  std::string train_args = "train --samples " + (root / "data").string() +
                           " --features cs --label 7 --stages 2 --rounds 6"
                           " --far-target 0.3 --seed 9 --out ";
  if (run_tool(train_args + (root / "run1").string()) != 0)
    return fail("first training run failed");
  if (run_tool(train_args + (root / "run2").string()) != 0)
    return fail("second training run failed");
  for (const char* name : {"model.json", "trace.json"}) {
    if (read_text_file(root / "run1" / name) != read_text_file(root / "run2" / name))
      return fail(fmt("%s differs between runs", name));
  }
  fs::remove_all(root);
  return pass("model.json and trace.json byte-identical across two runs");
}

// ---------------------------------------------------------------------------
// 8. End-to-end synthetic task: a census cascade trained with default
//    settings on ~2000 positives / 20000 negatives (3:1 split), with the
//    usual bootstrap source feeding later stages fresh hard negatives,
//    reaches FAR <= 1e-3 and FRR <= 5% on the held-out quarter within 15
//    minutes.

constexpr double kTaskFarLimit = 1e-3;
constexpr double kTaskFrrLimit = 0.05;
constexpr double kTaskTimeLimit = 900.0;

Report check_end_to_end_task() {
  auto t0 = std::chrono::steady_clock::now();
  auto [pos, neg] = synth::glyph_task(0xACC8, 2000, 20000, kDigitAperture);
  std::vector<GrayImage> train_pos(pos.begin(), pos.begin() + 1500);
  std::vector<GrayImage> test_pos(pos.begin() + 1500, pos.end());
  std::vector<GrayImage> train_neg(neg.begin(), neg.begin() + 15000);
  std::vector<GrayImage> test_neg(neg.begin() + 15000, neg.end());

  CascadeConfig cfg;  // default stage targets, budget and pool
  cfg.kind = FeatureKind::kCensus;
  cfg.aperture = kDigitAperture;
  cfg.seed = 0x5EED08;
  Rng mrng(derive_seed(0xACC8, {hash_string("mine")}));
  synth::GeneratedNegatives miner([&] {
    std::vector<GrayImage> out;
    out.reserve(500);
    for (int i = 0; i < 500; ++i)
      out.push_back(synth::textured_negative(mrng, kDigitAperture));
    return out;
  });
  CascadeTrainResult trained =
      train_cascade(std::move(train_pos), std::move(train_neg), cfg, &miner, "glyph");

  EvalMetrics m = measure(trained.cascade, test_pos, test_neg);
  double secs = seconds_since(t0);
  std::string summary = fmt(
      "far %.2e (limit %.0e), frr %.2f%% (limit %.0f%%), %d stages, %d weaks, %.0fs",
      m.far.value_or(1.0), kTaskFarLimit, 100.0 * m.frr.value_or(1.0),
      100.0 * kTaskFrrLimit, m.stage_count, m.feature_count, secs);
  if (secs >= kTaskTimeLimit) return fail(summary + " (over time budget)");
  if (!m.far || !m.frr) return fail("metrics unavailable");
  if (*m.far > kTaskFarLimit || *m.frr > kTaskFrrLimit) return fail(summary);
  return pass(summary);
}

// ---------------------------------------------------------------------------
// 9. Feature economy: trained to the same budget on the same task, the
//    census detector uses no more weak classifiers than the LBP detector,
//    which uses no more than the Haar detector. The task varies brightness
//    and contrast per patch — the regime the comparison-based codes are
//    built for; a fixed-illumination task would let a single raw-intensity
//    threshold win regardless of feature kind.

Report check_feature_economy() {
  auto [pos, neg] = synth::glyph_task(0xACC9, 800, 8000, kDigitAperture);
  Rng arng(derive_seed(0xACC9, {hash_string("aug")}));
  for (GrayImage& p : pos) synth::brightness_jitter(p, arng);
  for (GrayImage& n : neg) synth::brightness_jitter(n, arng);
  std::vector<GrayImage> train_pos(pos.begin(), pos.begin() + 600);
  std::vector<GrayImage> train_neg(neg.begin(), neg.begin() + 6000);

  const FeatureLattice lattice{1, 3, 6, 3, 6};  // identical rect grid per kind
  int counts[3] = {0, 0, 0};
  const FeatureKind kinds[3] = {FeatureKind::kCensus, FeatureKind::kLbp,
                                FeatureKind::kHaar};
  for (int k = 0; k < 3; ++k) {
    CascadeConfig cfg;
    cfg.kind = kinds[k];
    cfg.aperture = kDigitAperture;
    cfg.stage = StageTargets{0.995, 0.5, 60};
    cfg.max_stages = 12;
    cfg.far_budget = 1e-3;
    cfg.seed = 0x5EED09;
    cfg.pool = enumerate_features(kDigitAperture, kinds[k], lattice);
    // every kind mines from the same generator stream, so each one reaches
    // the common budget instead of stalling when easy negatives run out
    Rng mrng(derive_seed(0xACC9, {hash_string("mine")}));
    synth::GeneratedNegatives miner([&] {
      std::vector<GrayImage> out;
      out.reserve(500);
      for (int i = 0; i < 500; ++i) {
        GrayImage p = synth::textured_negative(mrng, kDigitAperture);
        synth::brightness_jitter(p, mrng);
        out.push_back(std::move(p));
      }
      return out;
    });
    CascadeTrainResult trained = train_cascade(std::vector<GrayImage>(train_pos),
                                               std::vector<GrayImage>(train_neg), cfg,
                                               &miner, "glyph");
    counts[k] = trained.cascade.feature_count();
  }
  std::string summary =
      fmt("weak counts: cs %d, lbp %d, haar %d", counts[0], counts[1], counts[2]);
  if (counts[0] <= counts[1] && counts[1] <= counts[2]) return pass(summary);
  return fail(summary);
}

// ---------------------------------------------------------------------------
// 10. The number of exported positive windows never grows as the overlap
//     threshold rises through 0.5 .. 0.9.

Report check_overlap_monotonicity() {
  Rng rng(0xACCA);
  GrayImage frame_a = synth::noise_image(rng, 200, 100);
  GrayImage frame_b = synth::noise_image(rng, 180, 90);
  const double thresholds[] = {0.5, 0.6, 0.7, 0.75, 0.8, 0.9};
  std::vector<std::size_t> counts;
  for (double t : thresholds) {
    DatasetConfig cfg;
    cfg.aperture = kNumberAperture;
    cfg.overlap_threshold = t;
    cfg.scan_stride = 1;
    SampleSet set;
    set.aperture = cfg.aperture;
    extract_positives_for_box(frame_a, "a", Rect{17, 23, 54, 18}, cfg, set);
    extract_positives_for_box(frame_a, "a", Rect{90, 60, 60, 20}, cfg, set);
    extract_positives_for_box(frame_b, "b", Rect{31, 57, 54, 18}, cfg, set);
    counts.push_back(set.positives.size());
  }
  std::string summary = "counts:";
  for (std::size_t c : counts) summary += fmt(" %zu", c);
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[i - 1]) return fail(summary + " (increase detected)");
  if (counts.front() <= counts.back())
    return fail(summary + " (sweep did not discriminate)");
  return pass(summary);
}

// ---------------------------------------------------------------------------
// 11. Optional real-data check, run only when NLBP_DATASET_DIR points to a
//     directory of PNM frames with annotation sidecars: trains the number
//     detector (census, overlap 0.75) and any annotated digit detectors,
//     comparing against the published error levels.

constexpr double kRealNumberFarLimit = 1e-4;   // 2x the published average 5e-5
constexpr double kRealNumberFrrLimit = 0.10;   // ceiling; the reference curve
                                               // is only published as a figure
const double kRealDigitFrrPercent[10] = {2.48, 31.13, 1.25, 2.88, 3.76,
                                         2.77,  7.39,  4.84, 2.32, 0.66};

struct RealFrame {
  std::string id;
  GrayImage image;
  std::vector<Annotation> boxes;
};

Report check_real_dataset() {
  const char* env = std::getenv("NLBP_DATASET_DIR");
  if (env == nullptr || *env == '\0')
    return {Outcome::kSkip,
            "set NLBP_DATASET_DIR to a directory of PNM frames with .txt sidecars"};

  std::vector<RealFrame> frames;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(env))
    if (entry.is_regular_file() && has_pnm_extension(entry.path()))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& p : files) {
    fs::path sidecar = p;
    sidecar.replace_extension(".txt");
    if (!fs::exists(sidecar)) continue;
    RealFrame f;
    f.id = p.stem().string();
    f.image = read_gray_pnm(p);
    f.boxes = load_annotation_file(sidecar, f.id);
    frames.push_back(std::move(f));
  }
  if (frames.size() < 8) return fail(fmt("only %zu annotated frames found", frames.size()));

  std::vector<std::string> ids;
  for (const RealFrame& f : frames) ids.push_back(f.id);
  auto [train_ids, test_ids] = split_3to1(ids, 0);

  auto build_side = [&](const std::vector<std::string>& side,
                        const std::string& label, const DatasetConfig& cfg,
                        std::int64_t n_negs) {
    SampleSet set;
    set.aperture = cfg.aperture;
    std::vector<NegativeFrame> neg_frames;
    for (const RealFrame& f : frames) {
      if (std::find(side.begin(), side.end(), f.id) == side.end()) continue;
      for (const Annotation& a : f.boxes)
        if (a.label == label)
          extract_positives_for_box(f.image, f.id, a.box, cfg, set);
      NegativeFrame nf;
      nf.image = &f.image;
      nf.image_id = f.id;
      for (const Annotation& a : f.boxes) nf.exclusions.push_back(a.box);
      neg_frames.push_back(std::move(nf));
    }
    sample_negatives(neg_frames, cfg, n_negs, set);
    return set;
  };

  auto run_target = [&](const std::string& label, Aperture ap, EvalMetrics& out) {
    DatasetConfig dcfg;
    dcfg.aperture = ap;
    dcfg.overlap_threshold = 0.75;
    dcfg.scan_stride = 2;
    SampleSet train = build_side(train_ids, label, dcfg, 15000);
    SampleSet test = build_side(test_ids, label, dcfg, 5000);
    if (train.positives.empty() || test.positives.empty()) return false;
    CascadeConfig cfg;
    cfg.kind = FeatureKind::kCensus;
    cfg.aperture = ap;
    cfg.seed = 0x5EED11;
    CascadeTrainResult trained = train_cascade(std::move(train.positives),
                                               std::move(train.negatives), cfg,
                                               nullptr, label);
    out = measure(trained.cascade, test.positives, test.negatives);
    return true;
  };

  EvalMetrics number;
  if (!run_target("number", kNumberAperture, number))
    return fail("no usable 'number' annotations");
  std::string summary = fmt("number: far %.2e frr %.2f%%", number.far.value_or(1.0),
                            100.0 * number.frr.value_or(1.0));
  bool ok = number.far.value_or(1.0) <= kRealNumberFarLimit &&
            number.frr.value_or(1.0) <= kRealNumberFrrLimit;

  for (int d = 0; d < 10; ++d) {
    if (d == 1) continue;  // published as pathological for this aperture
    std::string label = std::to_string(d);
    bool present = false;
    for (const RealFrame& f : frames)
      for (const Annotation& a : f.boxes) present = present || a.label == label;
    if (!present) continue;
    EvalMetrics dm;
    if (!run_target(label, kDigitAperture, dm)) continue;
    double frr_pct = 100.0 * dm.frr.value_or(1.0);
    summary += fmt("; %d: %.2f%%", d, frr_pct);
    if (frr_pct > 2.0 * kRealDigitFrrPercent[d]) ok = false;
  }
  return ok ? pass(summary) : fail(summary);
}

}  // namespace

int main() {
  struct Check {
    int id;
    const char* title;
    Report (*run)();
  };
  const Check checks[] = {
      {1, "integral sums match the per-pixel oracle on every rect", check_integral_sums},
      {2, "census/LBP codes match the pixel-loop oracle", check_code_oracle},
      {3, "codes are invariant to brightness scale and shift", check_illumination_invariance},
      {4, "boosting rounds beat chance and obey the error bound", check_boosting_invariants},
      {5, "raising the threshold trades FAR against FRR monotonically", check_threshold_monotonicity},
      {6, "cascade decisions equal stage-wise AND; scan equals brute force", check_cascade_soundness},
      {7, "command-line training is byte-for-byte deterministic", check_training_determinism},
      {8, "default census cascade masters the synthetic task", check_end_to_end_task},
      {9, "census needs no more weaks than LBP, LBP no more than Haar", check_feature_economy},
      {10, "positive exports never grow with the overlap threshold", check_overlap_monotonicity},
      {11, "real-dataset error levels (optional)", check_real_dataset},
  };
  int failures = 0;
  for (const Check& c : checks) {
    Report r = c.run();
    const char* tag = r.outcome == Outcome::kPass   ? "[PASS]"
                      : r.outcome == Outcome::kSkip ? "[SKIP]"
                                                    : "[FAIL]";
    std::printf("%s %02d %s — %s\n", tag, c.id, c.title, r.detail.c_str());
    std::fflush(stdout);
    failures += r.outcome == Outcome::kFail;
  }
  if (failures > 0) std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
