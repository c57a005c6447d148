#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlbp/features.hpp"
#include "nlbp/parallel.hpp"
#include "nlbp/rng.hpp"

namespace nlbp {

/// Raised when boosting cannot continue (no weak beats chance, or the
/// negative pool cannot be replenished).
class TrainingHaltError : public std::runtime_error {
 public:
  explicit TrainingHaltError(const std::string& what) : std::runtime_error(what) {}
};

/// Equal-width quantization of haar responses into `bins` buckets between the
/// (0.5%, 99.5%) percentiles of the training responses; outliers land in the
/// edge buckets.
struct HaarBinning {
  double lo = 0.0;
  double width = 0.0;
  int bins = 64;

  int bin_of(double response) const {
    if (width <= 0.0) return 0;
    double b = std::floor((response - lo) / width);
    if (b < 0.0) return 0;
    if (b >= bins) return bins - 1;
    return static_cast<int>(b);
  }
};

inline HaarBinning make_haar_binning(std::vector<double> responses, int bins) {
  HaarBinning bn;
  bn.bins = bins;
  if (responses.empty()) return bn;
  auto percentile = [&](double q) {
    std::size_t k = static_cast<std::size_t>(
        std::llround(q * static_cast<double>(responses.size() - 1)));
    std::nth_element(responses.begin(), responses.begin() + static_cast<std::ptrdiff_t>(k),
                     responses.end());
    return responses[k];
  };
  double lo = percentile(0.005);
  double hi = percentile(0.995);
  bn.lo = lo;
  bn.width = hi > lo ? (hi - lo) / bins : 0.0;
  return bn;
}

/// Single-feature binary decision: a {0,1} lookup table over the feature's
/// code, built from class-conditional code histograms.
struct WeakClassifier {
  FeatureDescriptor feature;
  std::vector<std::uint8_t> lut;  // length 512 (census), 256 (LBP), bins (haar)
  HaarBinning binning;            // haar only

  int code_at(const WindowView& win, Aperture ap) const {
    switch (feature.kind) {
      case FeatureKind::kCensus:
        return census_code(*win.image, place_code_rect(feature.rect, ap, win));
      case FeatureKind::kLbp:
        return lbp_code(*win.image, place_code_rect(feature.rect, ap, win));
      case FeatureKind::kHaar: {
        Rect placed = place_haar_rect(feature.rect, feature.tmpl, ap, win);
        double raw = static_cast<double>(haar_response(*win.image, placed, feature.tmpl));
        // Responses grow with window area; rescale to the aperture-local
        // reference so the training-time bins stay valid at any scale.
        double norm = raw * (static_cast<double>(feature.rect.area()) /
                             static_cast<double>(placed.area()));
        return binning.bin_of(norm);
      }
    }
    return 0;
  }

  int evaluate(const WindowView& win, Aperture ap) const {
    return lut[static_cast<std::size_t>(code_at(win, ap))];
  }
};

/// Weighted vote of weak classifiers with decision threshold theta; the
/// decision uses a strict comparison (score must exceed theta).
struct StrongClassifier {
  std::vector<WeakClassifier> weaks;
  std::vector<double> weights;
  double theta = 0.0;

  double score(const WindowView& win, Aperture ap) const {
    double s = 0.0;
    for (std::size_t k = 0; k < weaks.size(); ++k)
      s += weights[k] * weaks[k].evaluate(win, ap);
    return s;
  }
  bool decide(const WindowView& win, Aperture ap) const {
    return score(win, ap) > theta;
  }
};

/// Strong classifiers in series; a window is accepted iff every stage accepts.
struct Cascade {
  std::string label;
  FeatureKind kind = FeatureKind::kCensus;
  Aperture aperture;
  std::vector<StrongClassifier> stages;

  struct Result {
    bool accepted = false;
    int rejected_stage = -1;  // first rejecting stage, -1 if accepted
    double final_score = 0.0;  // score of the last evaluated stage
  };

  Result evaluate(const WindowView& win) const {
    Result res;
    for (std::size_t s = 0; s < stages.size(); ++s) {
      res.final_score = stages[s].score(win, aperture);
      if (!(res.final_score > stages[s].theta)) {
        res.rejected_stage = static_cast<int>(s);
        return res;
      }
    }
    res.accepted = true;
    return res;
  }

  int stage_count() const { return static_cast<int>(stages.size()); }
  int feature_count() const {
    int n = 0;
    for (const auto& s : stages) n += static_cast<int>(s.weaks.size());
    return n;
  }
};

// --- training sets ---------------------------------------------------------

/// Precomputed per-(feature, sample) codes for boosting. Feature-major layout:
/// codes[f * n_samples + i].
struct TrainingSet {
  std::vector<FeatureDescriptor> features;
  std::vector<HaarBinning> binnings;  // per feature; unused for census/LBP
  std::vector<int> bin_counts;        // lut length per feature
  std::vector<std::uint16_t> codes;
  std::vector<std::uint8_t> labels;  // 1 positive, 0 negative
  std::int64_t n_samples = 0;
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;

  std::uint16_t code(std::int64_t feature_idx, std::int64_t sample_idx) const {
    return codes[static_cast<std::size_t>(feature_idx * n_samples + sample_idx)];
  }

  static TrainingSet build(std::vector<FeatureDescriptor> features,
                           std::span<const GrayImage> positives,
                           std::span<const GrayImage> negatives, Aperture ap,
                           int haar_bins = 64) {
    TrainingSet ts;
    ts.features = std::move(features);
    ts.n_pos = static_cast<std::int64_t>(positives.size());
    ts.n_neg = static_cast<std::int64_t>(negatives.size());
    ts.n_samples = ts.n_pos + ts.n_neg;
    if (ts.n_samples == 0) throw std::invalid_argument("TrainingSet: no samples");
    ts.labels.resize(static_cast<std::size_t>(ts.n_samples));
    std::fill(ts.labels.begin(), ts.labels.begin() + ts.n_pos, std::uint8_t{1});
    std::fill(ts.labels.begin() + ts.n_pos, ts.labels.end(), std::uint8_t{0});

    std::vector<IntegralImage> integrals;
    integrals.reserve(static_cast<std::size_t>(ts.n_samples));
    auto check = [&](const GrayImage& p) {
      if (p.width() != ap.width || p.height() != ap.height)
        throw std::invalid_argument("TrainingSet: patch size != aperture");
      integrals.emplace_back(p);
    };
    for (const auto& p : positives) check(p);
    for (const auto& p : negatives) check(p);

    const std::int64_t nf = static_cast<std::int64_t>(ts.features.size());
    ts.binnings.resize(static_cast<std::size_t>(nf));
    ts.bin_counts.resize(static_cast<std::size_t>(nf));
    ts.codes.resize(static_cast<std::size_t>(nf * ts.n_samples));
    parallel_chunks(nf, [&](std::int64_t fb, std::int64_t fe) {
      std::vector<double> responses;
      for (std::int64_t f = fb; f < fe; ++f) {
        const FeatureDescriptor& fd = ts.features[static_cast<std::size_t>(f)];
        std::uint16_t* row = &ts.codes[static_cast<std::size_t>(f * ts.n_samples)];
        switch (fd.kind) {
          case FeatureKind::kCensus:
            ts.bin_counts[static_cast<std::size_t>(f)] = 512;
            for (std::int64_t i = 0; i < ts.n_samples; ++i)
              row[i] = static_cast<std::uint16_t>(
                  census_code(integrals[static_cast<std::size_t>(i)], fd.rect));
            break;
          case FeatureKind::kLbp:
            ts.bin_counts[static_cast<std::size_t>(f)] = 256;
            for (std::int64_t i = 0; i < ts.n_samples; ++i)
              row[i] = static_cast<std::uint16_t>(
                  lbp_code(integrals[static_cast<std::size_t>(i)], fd.rect));
            break;
          case FeatureKind::kHaar: {
            ts.bin_counts[static_cast<std::size_t>(f)] = haar_bins;
            responses.resize(static_cast<std::size_t>(ts.n_samples));
            for (std::int64_t i = 0; i < ts.n_samples; ++i)
              responses[static_cast<std::size_t>(i)] = static_cast<double>(
                  haar_response(integrals[static_cast<std::size_t>(i)], fd.rect, fd.tmpl));
            HaarBinning bn = make_haar_binning(responses, haar_bins);
            ts.binnings[static_cast<std::size_t>(f)] = bn;
            for (std::int64_t i = 0; i < ts.n_samples; ++i)
              row[i] = static_cast<std::uint16_t>(
                  bn.bin_of(responses[static_cast<std::size_t>(i)]));
            break;
          }
        }
      }
    });
    return ts;
  }
};

// --- weak training ---------------------------------------------------------

struct WeakTrainResult {
  std::vector<std::uint8_t> lut;
  double error = 0.0;
};

namespace detail {

struct WeakScratch {
  std::vector<double> hist_pos;
  std::vector<double> hist_neg;
};

/// Builds the weighted class-conditional histograms for one feature and
/// returns the weighted error of the per-code vote: positive iff the bin
/// carries more positive than negative weight. The same pseudo-mass is added
/// to both bins, so it cancels in the comparison; codes never seen in
/// training tie, and ties vote background — false accepts are the scarce
/// budget in a cascade, and a code with no positive evidence must not pass.
/// Per-bin majority is also the rule of minimum weighted error.
inline double weak_histograms(const TrainingSet& ts, std::int64_t f,
                              std::span<const double> w, WeakScratch& scratch) {
  const int bins = ts.bin_counts[static_cast<std::size_t>(f)];
  scratch.hist_pos.assign(static_cast<std::size_t>(bins), 0.0);
  scratch.hist_neg.assign(static_cast<std::size_t>(bins), 0.0);
  const std::uint16_t* row = &ts.codes[static_cast<std::size_t>(f * ts.n_samples)];
  for (std::int64_t i = 0; i < ts.n_samples; ++i) {
    if (ts.labels[static_cast<std::size_t>(i)])
      scratch.hist_pos[row[i]] += w[static_cast<std::size_t>(i)];
    else
      scratch.hist_neg[row[i]] += w[static_cast<std::size_t>(i)];
  }
  double err = 0.0;
  for (int c = 0; c < bins; ++c) {
    err += scratch.hist_pos[static_cast<std::size_t>(c)] >
                   scratch.hist_neg[static_cast<std::size_t>(c)]
               ? scratch.hist_neg[static_cast<std::size_t>(c)]
               : scratch.hist_pos[static_cast<std::size_t>(c)];
  }
  return err;
}

inline std::vector<std::uint8_t> lut_from_scratch(const TrainingSet& ts,
                                                  std::int64_t f,
                                                  const WeakScratch& scratch) {
  const int bins = ts.bin_counts[static_cast<std::size_t>(f)];
  std::vector<std::uint8_t> lut(static_cast<std::size_t>(bins), 0);
  for (int c = 0; c < bins; ++c) {
    lut[static_cast<std::size_t>(c)] =
        scratch.hist_pos[static_cast<std::size_t>(c)] >
                scratch.hist_neg[static_cast<std::size_t>(c)]
            ? 1
            : 0;
  }
  return lut;
}

}  // namespace detail

/// Trains the lookup table for one pool feature under the given boosting
/// weights; returns the table and its weighted training error.
inline WeakTrainResult train_weak(const TrainingSet& ts, std::int64_t feature_idx,
                                  std::span<const double> weights) {
  if (ts.n_pos == 0 || ts.n_neg == 0)
    throw std::invalid_argument("train_weak: need both classes");
  detail::WeakScratch scratch;
  WeakTrainResult res;
  res.error = detail::weak_histograms(ts, feature_idx, weights, scratch);
  res.lut = detail::lut_from_scratch(ts, feature_idx, scratch);
  return res;
}

// --- strong training (AdaBoost) -------------------------------------------

struct StageTargets {
  double min_tpr = 0.995;
  double max_fpr = 0.5;
  int max_rounds = 100;
};

struct RoundRecord {
  int feature_index = -1;
  double weighted_error = 0.0;
  double alpha = 0.0;
  /// Training error at the default threshold (half the weight sum), measured
  /// against the initial class-balanced sample distribution.
  double train_error = 0.0;
};

struct StrongTrainResult {
  StrongClassifier classifier;
  std::vector<RoundRecord> rounds;
  double tpr = 0.0;
  double fpr = 0.0;
  bool target_met = false;
};

namespace detail {

/// Largest threshold (capped at the default) whose strict-score comparison
/// still accepts at least ceil(min_tpr * n_pos) training positives.
inline double calibrate_theta(std::span<const double> scores,
                              std::span<const std::uint8_t> labels,
                              double min_tpr, double default_theta) {
  std::vector<double> pos_scores;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (labels[i]) pos_scores.push_back(scores[i]);
  if (pos_scores.empty()) return default_theta;
  std::int64_t n = static_cast<std::int64_t>(pos_scores.size());
  std::int64_t k = static_cast<std::int64_t>(
      std::ceil(min_tpr * static_cast<double>(n) - 1e-12));
  k = std::clamp<std::int64_t>(k, 1, n);
  std::nth_element(pos_scores.begin(), pos_scores.begin() + (k - 1), pos_scores.end(),
                   std::greater<>());
  double kth = pos_scores[static_cast<std::size_t>(k - 1)];
  return std::min(default_theta,
                  std::nextafter(kth, -std::numeric_limits<double>::infinity()));
}

}  // namespace detail

/// Discrete AdaBoost over the precomputed code matrix. Each round picks the
/// pool feature with the smallest weighted error (ties broken by pool index,
/// so parallel and serial searches agree), then reweights multiplicatively
/// and renormalizes. Stops at max_rounds or once the calibrated stage meets
/// its TPR/FPR targets on the training samples.
inline StrongTrainResult train_strong(const TrainingSet& ts, const StageTargets& targets) {
  if (ts.n_pos == 0 || ts.n_neg == 0)
    throw std::invalid_argument("train_strong: need both classes");
  if (ts.features.empty())
    throw std::invalid_argument("train_strong: empty feature pool");

  const std::int64_t n = ts.n_samples;
  const std::int64_t nf = static_cast<std::int64_t>(ts.features.size());
  std::vector<double> weights(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i)
    weights[static_cast<std::size_t>(i)] =
        ts.labels[static_cast<std::size_t>(i)]
            ? 1.0 / (2.0 * static_cast<double>(ts.n_pos))
            : 1.0 / (2.0 * static_cast<double>(ts.n_neg));
  const std::vector<double> initial_weights = weights;
  std::vector<double> scores(static_cast<std::size_t>(n), 0.0);

  StrongTrainResult out;
  double alpha_sum = 0.0;

  for (int round = 0; round < targets.max_rounds; ++round) {
    // weighted-error argmin over the pool
    struct Best {
      double err = std::numeric_limits<double>::infinity();
      std::int64_t idx = -1;
    };
    int workers = worker_budget();
    int chunks = static_cast<int>(std::min<std::int64_t>(workers, nf));
    std::vector<Best> best_per_chunk(static_cast<std::size_t>(std::max(1, chunks)));
    std::int64_t chunk_size = (nf + chunks - 1) / chunks;
    parallel_for(
        chunks,
        [&](std::int64_t c) {
          detail::WeakScratch scratch;
          Best best;
          std::int64_t fb = c * chunk_size;
          std::int64_t fe = std::min(fb + chunk_size, nf);
          for (std::int64_t f = fb; f < fe; ++f) {
            double err = detail::weak_histograms(ts, f, weights, scratch);
            if (err < best.err) {
              best.err = err;
              best.idx = f;
            }
          }
          best_per_chunk[static_cast<std::size_t>(c)] = best;
        },
        chunks);
    Best best;
    for (const Best& b : best_per_chunk)
      if (b.idx >= 0 && (b.err < best.err || (b.err == best.err && b.idx < best.idx)))
        best = b;

    // a weak within 1e-9 of chance contributes nothing (alpha ~ 2e-9); treat
    // it as exhaustion instead of looping on summation dust around 0.5
    if (best.idx < 0 || best.err >= 0.5 - 1e-9) {
      if (out.classifier.weaks.empty())
        throw TrainingHaltError(
            "feature pool exhausted: no weak classifier beats chance (best "
            "weighted error " +
            std::to_string(best.err) + ")");
      break;  // keep the stage built so far
    }

    double err = std::clamp(best.err, 1e-10, 0.5 - 1e-10);
    double alpha = 0.5 * std::log((1.0 - err) / err);

    detail::WeakScratch scratch;
    detail::weak_histograms(ts, best.idx, weights, scratch);
    WeakClassifier weak;
    weak.feature = ts.features[static_cast<std::size_t>(best.idx)];
    weak.lut = detail::lut_from_scratch(ts, best.idx, scratch);
    if (weak.feature.kind == FeatureKind::kHaar)
      weak.binning = ts.binnings[static_cast<std::size_t>(best.idx)];

    const std::uint16_t* row = &ts.codes[static_cast<std::size_t>(best.idx * n)];
    double wsum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      std::size_t si = static_cast<std::size_t>(i);
      int h = weak.lut[row[i]];
      scores[si] += alpha * h;
      bool correct = h == ts.labels[si];
      weights[si] *= std::exp(correct ? -alpha : alpha);
      wsum += weights[si];
    }
    double check = 0.0;
    for (double& w : weights) {
      w /= wsum;
      check += w;
    }
    if (std::abs(check - 1.0) > 1e-9)
      throw std::logic_error("train_strong: weights failed to renormalize");

    out.classifier.weaks.push_back(std::move(weak));
    out.classifier.weights.push_back(alpha);
    alpha_sum += alpha;

    RoundRecord rec;
    rec.feature_index = static_cast<int>(best.idx);
    rec.weighted_error = err;
    rec.alpha = alpha;
    double half = alpha_sum / 2.0;
    double train_err = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      std::size_t si = static_cast<std::size_t>(i);
      bool decided = scores[si] > half;
      if (decided != (ts.labels[si] != 0)) train_err += initial_weights[si];
    }
    rec.train_error = train_err;
    out.rounds.push_back(rec);

    // stage target check with the calibrated threshold
    double theta = detail::calibrate_theta(scores, ts.labels, targets.min_tpr, half);
    std::int64_t tp = 0, fp = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      std::size_t si = static_cast<std::size_t>(i);
      bool dec = scores[si] > theta;
      if (ts.labels[si]) tp += dec;
      else fp += dec;
    }
    out.classifier.theta = theta;
    out.tpr = static_cast<double>(tp) / static_cast<double>(ts.n_pos);
    out.fpr = static_cast<double>(fp) / static_cast<double>(ts.n_neg);
    if (out.tpr >= targets.min_tpr && out.fpr <= targets.max_fpr) {
      out.target_met = true;
      break;
    }
  }
  return out;
}

// --- cascade training ------------------------------------------------------

/// Supplier of bootstrap negatives: aperture-sized patches that the cascade
/// built so far still accepts.
class NegativeSource {
 public:
  virtual ~NegativeSource() = default;
  virtual std::vector<GrayImage> mine(const Cascade& so_far, int count) = 0;
};

struct CascadeConfig {
  FeatureKind kind = FeatureKind::kCensus;
  Aperture aperture;
  StageTargets stage;
  int max_stages = 20;
  double far_budget = 5e-5;
  /// Fraction of the negatives held out from stage training; the cascade's
  /// cumulative FAR is measured there and drives the stop condition.
  double validation_fraction = 0.2;
  int min_stage_negatives = 50;
  int haar_bins = 64;
  std::uint64_t seed = 0;
  /// Optional explicit feature pool; empty means the default pool.
  std::vector<FeatureDescriptor> pool;
};

struct StageRecord {
  int n_weaks = 0;
  int rounds = 0;
  double theta = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double cumulative_far = 1.0;
  std::int64_t train_negatives = 0;
};

struct CascadeTrainResult {
  Cascade cascade;
  std::vector<StageRecord> stages;
  std::vector<std::vector<RoundRecord>> rounds;  // per stage
  double achieved_far = 1.0;
  bool met_budget = false;
  bool far_is_estimate = false;  // true when no validation pool was available
  std::string halt_reason;
};

/// Trains stages in series. After each stage the stage-training negatives are
/// filtered to the survivors (hard negatives) and replenished from `miner`
/// when available; training stops once the measured cumulative FAR drops
/// under the budget, the stage limit is reached, or negatives run out.
inline CascadeTrainResult train_cascade(std::vector<GrayImage> positives,
                                        std::vector<GrayImage> negatives,
                                        const CascadeConfig& cfg,
                                        NegativeSource* miner = nullptr,
                                        const std::string& label = "") {
  if (positives.empty() || negatives.empty())
    throw std::invalid_argument("train_cascade: need both classes");

  CascadeTrainResult out;
  out.cascade.label = label;
  out.cascade.kind = cfg.kind;
  out.cascade.aperture = cfg.aperture;

  std::vector<FeatureDescriptor> pool =
      cfg.pool.empty() ? default_feature_pool(cfg.aperture, cfg.kind) : cfg.pool;

  // seeded validation split of the negatives
  Rng rng(derive_seed(cfg.seed, {hash_string("cascade-val-split")}));
  std::vector<std::int64_t> neg_order(negatives.size());
  std::iota(neg_order.begin(), neg_order.end(), 0);
  seeded_shuffle(neg_order, rng);
  std::int64_t n_val = static_cast<std::int64_t>(
      cfg.validation_fraction * static_cast<double>(negatives.size()));
  std::vector<GrayImage> val_negs;
  std::vector<GrayImage> active_negs;
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(neg_order.size()); ++i) {
    auto& img = negatives[static_cast<std::size_t>(neg_order[static_cast<std::size_t>(i)])];
    if (i < n_val) val_negs.push_back(std::move(img));
    else active_negs.push_back(std::move(img));
  }
  negatives.clear();
  std::vector<std::uint8_t> val_alive(val_negs.size(), 1);
  std::vector<GrayImage> active_pos = std::move(positives);

  double fpr_product = 1.0;
  for (int stage = 0; stage < cfg.max_stages; ++stage) {
    if (static_cast<int>(active_negs.size()) < cfg.min_stage_negatives && miner) {
      int need = cfg.min_stage_negatives - static_cast<int>(active_negs.size());
      auto mined = miner->mine(out.cascade, need);
      for (auto& m : mined) active_negs.push_back(std::move(m));
    }
    if (active_negs.empty() ||
        static_cast<int>(active_negs.size()) < cfg.min_stage_negatives) {
      out.halt_reason = "insufficient hard negatives (" +
                        std::to_string(active_negs.size()) + " available, " +
                        std::to_string(cfg.min_stage_negatives) + " required)";
      break;
    }
    if (active_pos.empty()) {
      out.halt_reason = "no surviving positives";
      break;
    }

    TrainingSet ts = TrainingSet::build(pool, active_pos, active_negs,
                                        cfg.aperture, cfg.haar_bins);
    StrongTrainResult strong = train_strong(ts, cfg.stage);
    out.cascade.stages.push_back(strong.classifier);
    out.rounds.push_back(strong.rounds);

    StageRecord rec;
    rec.n_weaks = static_cast<int>(strong.classifier.weaks.size());
    rec.rounds = static_cast<int>(strong.rounds.size());
    rec.theta = strong.classifier.theta;
    rec.tpr = strong.tpr;
    rec.fpr = strong.fpr;
    rec.train_negatives = static_cast<std::int64_t>(active_negs.size());
    fpr_product *= strong.fpr;

    // cumulative FAR on the held-out pool (series of stages = AND)
    const StrongClassifier& sc = strong.classifier;
    if (!val_negs.empty()) {
      std::int64_t alive = 0;
      for (std::size_t i = 0; i < val_negs.size(); ++i) {
        if (!val_alive[i]) continue;
        IntegralImage ii(val_negs[i]);
        if (!sc.decide(WindowView{&ii, 0, 0, 1.0}, cfg.aperture)) val_alive[i] = 0;
        alive += val_alive[i];
      }
      out.achieved_far = static_cast<double>(alive) / static_cast<double>(val_negs.size());
      out.far_is_estimate = false;
    } else {
      out.achieved_far = fpr_product;
      out.far_is_estimate = true;
    }
    rec.cumulative_far = out.achieved_far;
    out.stages.push_back(rec);

    // keep only survivors for the next stage
    auto filter = [&](std::vector<GrayImage>& patches) {
      std::vector<GrayImage> kept;
      for (auto& p : patches) {
        IntegralImage ii(p);
        if (sc.decide(WindowView{&ii, 0, 0, 1.0}, cfg.aperture))
          kept.push_back(std::move(p));
      }
      patches = std::move(kept);
    };
    filter(active_negs);
    filter(active_pos);

    if (out.achieved_far <= cfg.far_budget) {
      out.met_budget = true;
      break;
    }
  }
  return out;
}

}  // namespace nlbp
