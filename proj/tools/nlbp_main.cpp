// Command-line front-end: dataset preparation, cascade training, detection,
// evaluation, and the feature-kind x overlap experiment grid.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlbp/nlbp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitTrainingHalt = 3;

/// Input-side failures (unreadable files, malformed formats, bad geometry)
/// that should exit with kExitInput.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlbp::Aperture parse_aperture(const std::string& s) {
  int w = 0, h = 0;
  char sep = 0;
  if (std::sscanf(s.c_str(), "%d%c%d", &w, &sep, &h) != 3 || (sep != 'x' && sep != 'X') ||
      w < 3 || h < 3)
    throw InputError("bad aperture '" + s + "', expected WxH with W,H >= 3");
  return nlbp::Aperture{w, h};
}

std::string aperture_to_string(nlbp::Aperture ap) {
  return std::to_string(ap.width) + "x" + std::to_string(ap.height);
}

/// Fills flag values that the user did not pass from the JSON config file.
/// Precedence: explicit flag > config file > built-in default.
class ConfigMerger {
 public:
  explicit ConfigMerger(const std::string& path) {
    if (path.empty()) return;
    try {
      cfg_ = json::parse(nlbp::read_text_file(path));
    } catch (const json::parse_error& e) {
      throw InputError("config " + path + ": " + e.what());
    } catch (const std::runtime_error& e) {
      throw InputError(e.what());
    }
    if (!cfg_.is_object()) throw InputError("config " + path + ": not a JSON object");
  }

  template <typename T>
  void merge(const CLI::Option* opt, const char* key, T& value) {
    seen_.push_back(key);
    if (opt != nullptr && opt->count() > 0) return;
    if (!cfg_.contains(key)) return;
    try {
      value = cfg_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InputError(std::string("config key '") + key + "': " + e.what());
    }
  }

  void reject_unknown() const {
    for (const auto& [key, _] : cfg_.items())
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end())
        throw InputError("config: unknown key '" + key + "'");
  }

 private:
  json cfg_ = json::object();
  std::vector<std::string> seen_;
};

void apply_worker_budget(const CLI::Option* opt, int workers) {
  const char* env = std::getenv("NLBP_WORKERS");
  if (env != nullptr && std::atoi(env) > 0) {
    if (opt->count() > 0)
      std::cerr << "note: NLBP_WORKERS=" << env << " overrides --workers\n";
    return;  // worker_budget() resolves from the environment
  }
  if (opt->count() > 0) nlbp::set_worker_budget(workers);
}

nlbp::GrayImage load_gray(const fs::path& path) {
  try {
    return nlbp::read_gray_pnm(path);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
}

/// One source frame: image + sidecar boxes (empty for background frames).
struct SourceFrame {
  std::string id;
  fs::path image_path;
  nlbp::GrayImage image;
  std::vector<nlbp::Annotation> boxes;
};

/// Loads annotated frames from `images_dir` (every image needs a .txt
/// sidecar) and optional sidecar-free background frames. Sorted by id.
std::vector<SourceFrame> load_frames(const std::string& images_dir,
                                     const std::string& backgrounds_dir) {
  std::vector<SourceFrame> frames;
  auto scan_dir = [&](const fs::path& dir, bool need_sidecar) {
    if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && nlbp::has_pnm_extension(entry.path()))
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& p : files) {
      SourceFrame f;
      f.id = p.stem().string();
      f.image_path = p;
      f.image = load_gray(p);
      if (need_sidecar) {
        fs::path sidecar = p;
        sidecar.replace_extension(".txt");
        if (!fs::exists(sidecar))
          throw InputError("missing annotation file: " + sidecar.string());
        try {
          f.boxes = nlbp::load_annotation_file(sidecar, f.id);
        } catch (const std::runtime_error& e) {
          throw InputError(e.what());
        }
      }
      frames.push_back(std::move(f));
    }
  };
  scan_dir(images_dir, true);
  if (!backgrounds_dir.empty()) scan_dir(backgrounds_dir, false);
  std::sort(frames.begin(), frames.end(),
            [](const SourceFrame& a, const SourceFrame& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (frames[i].id == frames[i - 1].id)
      throw InputError("duplicate image id '" + frames[i].id + "'");
  return frames;
}

/// Extracts one side (train or test) of the dataset for a target label.
nlbp::SampleSet build_side(const std::vector<SourceFrame>& frames,
                           const std::vector<std::string>& side_ids,
                           const std::string& label, const nlbp::DatasetConfig& cfg,
                           std::int64_t negative_count,
                           std::vector<std::string>& warnings) {
  nlbp::SampleSet set;
  set.aperture = cfg.aperture;
  std::vector<nlbp::NegativeFrame> neg_frames;
  for (const SourceFrame& f : frames) {
    if (std::find(side_ids.begin(), side_ids.end(), f.id) == side_ids.end()) continue;
    for (const nlbp::Annotation& a : f.boxes)
      if (a.label == label)
        nlbp::extract_positives_for_box(f.image, f.id, a.box, cfg, set, &warnings);
    nlbp::NegativeFrame nf;
    nf.image = &f.image;
    nf.image_id = f.id;
    for (const nlbp::Annotation& a : f.boxes) nf.exclusions.push_back(a.box);
    neg_frames.push_back(std::move(nf));
  }
  nlbp::sample_negatives(neg_frames, cfg, negative_count, set, &warnings);
  return set;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

void write_snapshot(const fs::path& out_dir, const json& snapshot) {
  nlbp::write_text_file(out_dir / "config.json", snapshot.dump(2) + "\n");
}

// --- prepare ---------------------------------------------------------------

int cmd_prepare(const std::string& config_path, const CLI::Option* opt_images,
                std::string images, const CLI::Option* opt_backgrounds,
                std::string backgrounds, const CLI::Option* opt_out, std::string out,
                const CLI::Option* opt_label, std::string label,
                const CLI::Option* opt_overlap, double overlap,
                const CLI::Option* opt_aperture, std::string aperture_str,
                const CLI::Option* opt_stride, int stride,
                const CLI::Option* opt_scale_step, double scale_step,
                const CLI::Option* opt_negatives, std::int64_t negatives,
                const CLI::Option* opt_seed, std::uint64_t seed) {
  ConfigMerger cfg(config_path);
  cfg.merge(opt_images, "images", images);
  cfg.merge(opt_backgrounds, "backgrounds", backgrounds);
  cfg.merge(opt_out, "out", out);
  cfg.merge(opt_label, "label", label);
  cfg.merge(opt_overlap, "overlap", overlap);
  cfg.merge(opt_stride, "stride", stride);
  cfg.merge(opt_scale_step, "scale_step", scale_step);
  cfg.merge(opt_negatives, "negatives", negatives);
  cfg.merge(opt_seed, "seed", seed);
  cfg.merge(opt_aperture, "aperture", aperture_str);
  cfg.reject_unknown();
  nlbp::Aperture aperture =
      label == "number" ? nlbp::kNumberAperture : nlbp::kDigitAperture;
  if (!aperture_str.empty()) aperture = parse_aperture(aperture_str);
  if (images.empty() || out.empty())
    throw InputError("prepare: --images and --out are required");

  nlbp::DatasetConfig dcfg;
  dcfg.aperture = aperture;
  dcfg.overlap_threshold = overlap;
  dcfg.seed = seed;
  dcfg.scan_stride = stride;
  dcfg.scale_step = scale_step;
  try {
    dcfg.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }

  std::vector<SourceFrame> frames = load_frames(images, backgrounds);
  if (frames.empty()) throw InputError("no images found in " + images);
  std::vector<std::string> ids;
  for (const SourceFrame& f : frames) ids.push_back(f.id);
  auto [train_ids, test_ids] = nlbp::split_3to1(ids, seed);

  std::int64_t train_negs = (3 * negatives + 3) / 4;
  std::int64_t test_negs = negatives - train_negs;
  std::vector<std::string> warnings;
  nlbp::SampleSet train_set =
      build_side(frames, train_ids, label, dcfg, train_negs, warnings);
  nlbp::SampleSet test_set = build_side(frames, test_ids, label, dcfg, test_negs, warnings);
  print_warnings(warnings);

  fs::path out_dir(out);
  nlbp::save_sample_set(train_set, out_dir / "train");
  nlbp::save_sample_set(test_set, out_dir / "test");
  json snapshot = {{"command", "prepare"},
                   {"images", images},
                   {"backgrounds", backgrounds},
                   {"out", out},
                   {"label", label},
                   {"overlap", overlap},
                   {"aperture", aperture_to_string(aperture)},
                   {"stride", stride},
                   {"scale_step", scale_step},
                   {"negatives", negatives},
                   {"seed", seed}};
  write_snapshot(out_dir, snapshot);
  std::cout << "train: " << train_set.positives.size() << " positives, "
            << train_set.negatives.size() << " negatives (" << train_ids.size()
            << " images)\n";
  std::cout << "test: " << test_set.positives.size() << " positives, "
            << test_set.negatives.size() << " negatives (" << test_ids.size()
            << " images)\n";
  return kExitOk;
}

// --- train -----------------------------------------------------------------

int cmd_train(const std::string& config_path, const CLI::Option* opt_samples,
              std::string samples, const CLI::Option* opt_out, std::string out,
              const CLI::Option* opt_features, std::string features,
              const CLI::Option* opt_label, std::string label,
              const CLI::Option* opt_far, double far_target,
              const CLI::Option* opt_stages, int stages, const CLI::Option* opt_rounds,
              int rounds, const CLI::Option* opt_min_tpr, double min_tpr,
              const CLI::Option* opt_max_fpr, double max_fpr,
              const CLI::Option* opt_seed, std::uint64_t seed) {
  ConfigMerger cfg(config_path);
  cfg.merge(opt_samples, "samples", samples);
  cfg.merge(opt_out, "out", out);
  cfg.merge(opt_features, "features", features);
  cfg.merge(opt_label, "label", label);
  cfg.merge(opt_far, "far_target", far_target);
  cfg.merge(opt_stages, "stages", stages);
  cfg.merge(opt_rounds, "rounds", rounds);
  cfg.merge(opt_min_tpr, "min_tpr", min_tpr);
  cfg.merge(opt_max_fpr, "max_fpr", max_fpr);
  cfg.merge(opt_seed, "seed", seed);
  cfg.reject_unknown();
  if (samples.empty() || out.empty())
    throw InputError("train: --samples and --out are required");

  fs::path sample_dir(samples);
  if (fs::exists(sample_dir / "train" / "manifest.txt")) sample_dir /= "train";
  if (!fs::exists(sample_dir / "manifest.txt"))
    throw InputError("no manifest.txt under " + samples);
  nlbp::SampleSet set;
  try {
    set = nlbp::load_sample_set(sample_dir);
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
  if (set.positives.empty() || set.negatives.empty())
    throw InputError("sample set needs both positives and negatives");

  nlbp::CascadeConfig ccfg;
  try {
    ccfg.kind = nlbp::feature_kind_from_string(features);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  ccfg.aperture = set.aperture;
  ccfg.stage.min_tpr = min_tpr;
  ccfg.stage.max_fpr = max_fpr;
  ccfg.stage.max_rounds = rounds;
  ccfg.max_stages = stages;
  ccfg.far_budget = far_target;
  ccfg.seed = seed;

  nlbp::CascadeTrainResult result =
      nlbp::train_cascade(std::move(set.positives), std::move(set.negatives), ccfg,
                          nullptr, label);

  fs::path out_dir(out);
  nlbp::save_cascade(result.cascade, out_dir / "model.json");
  nlbp::write_text_file(out_dir / "trace.json",
                        nlbp::training_trace_to_json(result).dump(2) + "\n");
  json snapshot = {{"command", "train"},   {"samples", samples},
                   {"out", out},           {"features", features},
                   {"label", label},       {"far_target", far_target},
                   {"stages", stages},     {"rounds", rounds},
                   {"min_tpr", min_tpr},   {"max_fpr", max_fpr},
                   {"seed", seed}};
  write_snapshot(out_dir, snapshot);

  std::cout << "stages: " << result.cascade.stage_count()
            << "  weaks: " << result.cascade.feature_count() << "  far: "
            << result.achieved_far << (result.far_is_estimate ? " (estimated)" : "")
            << "\n";
  if (!result.halt_reason.empty()) {
    std::cerr << "training stopped early: " << result.halt_reason << "\n";
    if (!result.met_budget) return kExitTrainingHalt;
  }
  return kExitOk;
}

// --- detect ----------------------------------------------------------------

std::vector<fs::path> list_frames(const std::string& frames) {
  fs::path p(frames);
  std::vector<fs::path> files;
  if (fs::is_directory(p)) {
    for (const auto& entry : fs::directory_iterator(p))
      if (entry.is_regular_file() && nlbp::has_pnm_extension(entry.path()))
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
  } else if (fs::is_regular_file(p)) {
    files.push_back(p);
  } else {
    throw InputError("no such file or directory: " + frames);
  }
  if (files.empty()) throw InputError("no frames found in " + frames);
  return files;
}

int cmd_detect(const std::string& config_path, const CLI::Option* opt_model,
               std::string model, const CLI::Option* opt_ensemble, std::string ensemble_dir,
               const CLI::Option* opt_frames, std::string frames,
               const CLI::Option* opt_out, std::string out,
               const CLI::Option* opt_stride, int stride,
               const CLI::Option* opt_scale_step, double scale_step,
               const CLI::Option* opt_nms, double nms_iou) {
  ConfigMerger cfg(config_path);
  cfg.merge(opt_model, "model", model);
  cfg.merge(opt_ensemble, "ensemble", ensemble_dir);
  cfg.merge(opt_frames, "frames", frames);
  cfg.merge(opt_out, "out", out);
  cfg.merge(opt_stride, "stride", stride);
  cfg.merge(opt_scale_step, "scale_step", scale_step);
  cfg.merge(opt_nms, "nms_iou", nms_iou);
  cfg.reject_unknown();
  if (frames.empty() || out.empty())
    throw InputError("detect: --frames and --out are required");
  if (model.empty() == ensemble_dir.empty())
    throw InputError("detect: pass exactly one of --model or --ensemble");

  nlbp::ScanConfig scfg;
  scfg.stride = stride;
  scfg.scale_step = scale_step;
  scfg.nms_iou = nms_iou;
  try {
    scfg.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }

  std::vector<fs::path> files = list_frames(frames);
  fs::path out_dir(out);
  std::vector<std::string> warnings;

  if (!model.empty()) {
    nlbp::Cascade cascade;
    try {
      cascade = nlbp::load_cascade(model);
    } catch (const std::runtime_error& e) {
      throw InputError(e.what());
    }
    std::vector<std::pair<std::string, nlbp::Detection>> records;
    for (const fs::path& f : files) {
      nlbp::GrayImage frame = load_gray(f);
      std::vector<nlbp::Detection> dets =
          nlbp::group_detections(nlbp::scan(frame, cascade, scfg, nullptr, &warnings),
                                 scfg.nms_iou);
      for (nlbp::Detection& d : dets) records.emplace_back(f.stem().string(), std::move(d));
    }
    nlbp::write_detections(out_dir / "detections.txt", records);
    std::cout << records.size() << " detections over " << files.size() << " frames\n";
  } else {
    nlbp::DetectorEnsemble ensemble;
    try {
      ensemble.number = nlbp::load_cascade(fs::path(ensemble_dir) / "model-number.json");
      for (int d = 0; d < 10; ++d)
        ensemble.digits.push_back(nlbp::load_cascade(
            fs::path(ensemble_dir) / ("model-" + std::to_string(d) + ".json")));
      ensemble.validate();
    } catch (const std::exception& e) {
      throw InputError(e.what());
    }
    nlbp::ScanConfig digit_cfg = scfg;
    digit_cfg.stride = 1;
    std::ostringstream readings;
    std::size_t n_readings = 0;
    for (const fs::path& f : files) {
      nlbp::GrayImage frame = load_gray(f);
      for (const nlbp::NumberReading& r :
           nlbp::read_number(frame, ensemble, scfg, digit_cfg)) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%s %d %d %d %d %.17g %s\n",
                      f.stem().string().c_str(), r.plate.x, r.plate.y, r.plate.w,
                      r.plate.h, r.plate_score,
                      r.digits.empty() ? "-" : r.digits.c_str());
        readings << buf;
        ++n_readings;
      }
    }
    nlbp::write_text_file(out_dir / "readings.txt", readings.str());
    std::cout << n_readings << " number readings over " << files.size() << " frames\n";
  }
  print_warnings(warnings);
  json snapshot = {{"command", "detect"},        {"model", model},
                   {"ensemble", ensemble_dir},   {"frames", frames},
                   {"out", out},                 {"stride", stride},
                   {"scale_step", scale_step},   {"nms_iou", nms_iou}};
  write_snapshot(out_dir, snapshot);
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const std::string& config_path, const CLI::Option* opt_model,
             std::string model, const CLI::Option* opt_samples, std::string samples,
             const CLI::Option* opt_out, std::string out) {
  ConfigMerger cfg(config_path);
  cfg.merge(opt_model, "model", model);
  cfg.merge(opt_samples, "samples", samples);
  cfg.merge(opt_out, "out", out);
  cfg.reject_unknown();
  if (model.empty() || samples.empty() || out.empty())
    throw InputError("eval: --model, --samples and --out are required");

  nlbp::Cascade cascade;
  nlbp::SampleSet set;
  try {
    cascade = nlbp::load_cascade(model);
    fs::path dir(samples);
    if (fs::exists(dir / "test" / "manifest.txt")) dir /= "test";
    set = nlbp::load_sample_set(dir);
  } catch (const std::runtime_error& e) {
    throw InputError(e.what());
  }
  if (set.aperture.width != cascade.aperture.width ||
      set.aperture.height != cascade.aperture.height)
    throw InputError("sample aperture " + aperture_to_string(set.aperture) +
                     " != model aperture " + aperture_to_string(cascade.aperture));

  std::vector<nlbp::SampleDecision> log;
  nlbp::EvalMetrics m = nlbp::measure(cascade, set.positives, set.negatives, &log);
  fs::path out_dir(out);
  nlbp::write_decision_log(out_dir / "decisions.txt", log);
  json metrics = nlbp::detail::metrics_to_json(m);
  nlbp::write_text_file(out_dir / "metrics.json", metrics.dump(2) + "\n");
  json snapshot = {
      {"command", "eval"}, {"model", model}, {"samples", samples}, {"out", out}};
  write_snapshot(out_dir, snapshot);
  auto rate = [](const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("n/a");
  };
  std::cout << "far: " << rate(m.far) << "  frr: " << rate(m.frr) << "  (" << m.n_pos
            << " pos, " << m.n_neg << " neg, " << m.feature_count << " weaks, "
            << m.stage_count << " stages)\n";
  return kExitOk;
}

// --- grid ------------------------------------------------------------------

int cmd_grid(const std::string& config_path, const CLI::Option* opt_images,
             std::string images, const CLI::Option* opt_backgrounds,
             std::string backgrounds, const CLI::Option* opt_out, std::string out,
             const CLI::Option* opt_features, std::vector<std::string> features,
             const CLI::Option* opt_overlaps, std::vector<double> overlaps,
             const CLI::Option* opt_targets, std::vector<std::string> targets,
             const CLI::Option* opt_number_ap, std::string number_ap_str,
             const CLI::Option* opt_digit_ap, std::string digit_ap_str,
             const CLI::Option* opt_stride, int stride,
             const CLI::Option* opt_scale_step, double scale_step,
             const CLI::Option* opt_negatives, std::int64_t negatives,
             const CLI::Option* opt_far, double far_target,
             const CLI::Option* opt_stages, int stages,
             const CLI::Option* opt_rounds, int rounds,
             const CLI::Option* opt_seed, std::uint64_t seed) {
  ConfigMerger cfg(config_path);
  cfg.merge(opt_images, "images", images);
  cfg.merge(opt_backgrounds, "backgrounds", backgrounds);
  cfg.merge(opt_out, "out", out);
  cfg.merge(opt_features, "features", features);
  cfg.merge(opt_overlaps, "overlaps", overlaps);
  cfg.merge(opt_targets, "targets", targets);
  cfg.merge(opt_number_ap, "number_aperture", number_ap_str);
  cfg.merge(opt_digit_ap, "digit_aperture", digit_ap_str);
  nlbp::Aperture number_ap =
      number_ap_str.empty() ? nlbp::kNumberAperture : parse_aperture(number_ap_str);
  nlbp::Aperture digit_ap =
      digit_ap_str.empty() ? nlbp::kDigitAperture : parse_aperture(digit_ap_str);
  cfg.merge(opt_stride, "stride", stride);
  cfg.merge(opt_scale_step, "scale_step", scale_step);
  cfg.merge(opt_negatives, "negatives", negatives);
  cfg.merge(opt_far, "far_target", far_target);
  cfg.merge(opt_stages, "stages", stages);
  cfg.merge(opt_rounds, "rounds", rounds);
  cfg.merge(opt_seed, "seed", seed);
  cfg.reject_unknown();
  if (images.empty() || out.empty())
    throw InputError("grid: --images and --out are required");

  nlbp::ExperimentGrid grid;
  for (const std::string& f : features) {
    try {
      grid.kinds.push_back(nlbp::feature_kind_from_string(f));
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }
  grid.overlaps = overlaps;
  grid.targets = targets;
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  for (double o : grid.overlaps)
    if (!(o > 0.0 && o <= 1.0))
      throw InputError("overlap threshold " + std::to_string(o) + " outside (0, 1]");

  std::vector<SourceFrame> frames = load_frames(images, backgrounds);
  if (frames.empty()) throw InputError("no images found in " + images);
  std::vector<std::string> ids;
  for (const SourceFrame& f : frames) ids.push_back(f.id);

  nlbp::CellDataProvider provider = [&](const nlbp::GridCellKey& key,
                                        std::uint64_t cell_seed) {
    nlbp::DatasetConfig dcfg;
    dcfg.aperture = key.target == "number" ? number_ap : digit_ap;
    dcfg.overlap_threshold = key.overlap;
    dcfg.seed = cell_seed;
    dcfg.scan_stride = stride;
    dcfg.scale_step = scale_step;
    dcfg.validate();
    auto [train_ids, test_ids] = nlbp::split_3to1(ids, seed);  // split shared by cells
    std::int64_t train_negs = (3 * negatives + 3) / 4;
    std::vector<std::string> warnings;
    nlbp::SampleSet train_set =
        build_side(frames, train_ids, key.target, dcfg, train_negs, warnings);
    nlbp::SampleSet test_set = build_side(frames, test_ids, key.target, dcfg,
                                          negatives - train_negs, warnings);
    print_warnings(warnings);
    nlbp::CellData data;
    data.train_pos = std::move(train_set.positives);
    data.train_neg = std::move(train_set.negatives);
    data.test_pos = std::move(test_set.positives);
    data.test_neg = std::move(test_set.negatives);
    return data;
  };

  nlbp::CascadeConfig base;
  base.stage.max_rounds = rounds;
  base.max_stages = stages;
  base.far_budget = far_target;
  // aperture is set per cell through the provider's patches; train_cascade
  // reads it from the config, so fill it per cell via a wrapper
  nlbp::GridOptions options;
  options.out_dir = fs::path(out) / "cells";
  options.master_seed = seed;

  // run_grid needs the aperture inside the CascadeConfig; wrap the provider
  // call by target kind. Number and digit targets may use different
  // apertures, so run the two groups separately.
  std::vector<nlbp::GridCellResult> all_cells;
  int executed = 0;
  auto run_subset = [&](const std::vector<std::string>& subset, nlbp::Aperture ap) {
    if (subset.empty()) return;
    nlbp::ExperimentGrid sub = grid;
    sub.targets = subset;
    nlbp::CascadeConfig cfg_ap = base;
    cfg_ap.aperture = ap;
    nlbp::GridRunResult r = nlbp::run_grid(sub, provider, cfg_ap, options);
    all_cells.insert(all_cells.end(), r.cells.begin(), r.cells.end());
    executed += r.executed;
  };
  std::vector<std::string> number_targets, digit_targets;
  for (const std::string& t : grid.targets)
    (t == "number" ? number_targets : digit_targets).push_back(t);
  run_subset(number_targets, number_ap);
  run_subset(digit_targets, digit_ap);

  nlbp::emit_reports(all_cells, fs::path(out) / "reports");
  json snapshot = {{"command", "grid"},
                   {"images", images},
                   {"backgrounds", backgrounds},
                   {"out", out},
                   {"features", features},
                   {"overlaps", overlaps},
                   {"targets", targets},
                   {"number_aperture", aperture_to_string(number_ap)},
                   {"digit_aperture", aperture_to_string(digit_ap)},
                   {"stride", stride},
                   {"scale_step", scale_step},
                   {"negatives", negatives},
                   {"far_target", far_target},
                   {"stages", stages},
                   {"rounds", rounds},
                   {"seed", seed}};
  write_snapshot(fs::path(out), snapshot);
  int failed = 0;
  for (const auto& c : all_cells) failed += !c.ok;
  std::cout << all_cells.size() << " cells (" << executed << " executed this run, "
            << failed << " failed)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boosted cascade detectors over binary-pattern features"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  app.add_option("--config", config_path, "JSON config file (flags win over file values)")
      ->expected(1);
  CLI::Option* opt_workers =
      app.add_option("--workers", workers, "worker thread budget (>=1)");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "extract training/test samples");
  std::string p_images, p_backgrounds, p_out, p_label = "number", p_aperture;
  double p_overlap = 0.75, p_scale_step = 1.25;
  int p_stride = 1;
  std::int64_t p_negatives = 10000;
  std::uint64_t p_seed = 0;
  CLI::Option* p_opt_images = prepare->add_option("--images", p_images, "annotated frame dir");
  CLI::Option* p_opt_backgrounds =
      prepare->add_option("--backgrounds", p_backgrounds, "background-only frame dir");
  CLI::Option* p_opt_out = prepare->add_option("--out", p_out, "output dir");
  CLI::Option* p_opt_label = prepare->add_option("--label", p_label, "target label");
  CLI::Option* p_opt_overlap =
      prepare->add_option("--overlap", p_overlap, "positive overlap threshold");
  CLI::Option* p_opt_aperture =
      prepare->add_option("--aperture", p_aperture, "detector window WxH");
  CLI::Option* p_opt_stride = prepare->add_option("--stride", p_stride, "scan stride");
  CLI::Option* p_opt_scale_step =
      prepare->add_option("--scale-step", p_scale_step, "pyramid factor");
  CLI::Option* p_opt_negatives =
      prepare->add_option("--negatives", p_negatives, "total negative windows");
  CLI::Option* p_opt_seed = prepare->add_option("--seed", p_seed, "master seed");

  // train
  auto* train = app.add_subcommand("train", "train one cascade from samples");
  std::string t_samples, t_out, t_features = "cs", t_label = "number";
  double t_far = 5e-5, t_min_tpr = 0.995, t_max_fpr = 0.5;
  int t_stages = 20, t_rounds = 100;
  std::uint64_t t_seed = 0;
  CLI::Option* t_opt_samples = train->add_option("--samples", t_samples, "prepared sample dir");
  CLI::Option* t_opt_out = train->add_option("--out", t_out, "output dir");
  CLI::Option* t_opt_features =
      train->add_option("--features", t_features, "cs | lbp | haar");
  CLI::Option* t_opt_label = train->add_option("--label", t_label, "detector label");
  CLI::Option* t_opt_far = train->add_option("--far-target", t_far, "cascade FAR budget");
  CLI::Option* t_opt_stages = train->add_option("--stages", t_stages, "max stages");
  CLI::Option* t_opt_rounds = train->add_option("--rounds", t_rounds, "max rounds per stage");
  CLI::Option* t_opt_min_tpr = train->add_option("--min-tpr", t_min_tpr, "per-stage TPR floor");
  CLI::Option* t_opt_max_fpr = train->add_option("--max-fpr", t_max_fpr, "per-stage FPR ceiling");
  CLI::Option* t_opt_seed = train->add_option("--seed", t_seed, "master seed");

  // detect
  auto* detect = app.add_subcommand("detect", "scan frames with a model or ensemble");
  std::string d_model, d_ensemble, d_frames, d_out;
  int d_stride = 2;
  double d_scale_step = 1.25, d_nms = 0.3;
  CLI::Option* d_opt_model = detect->add_option("--model", d_model, "cascade model file");
  CLI::Option* d_opt_ensemble =
      detect->add_option("--ensemble", d_ensemble, "dir with model-number/model-0..9");
  CLI::Option* d_opt_frames = detect->add_option("--frames", d_frames, "frame file or dir");
  CLI::Option* d_opt_out = detect->add_option("--out", d_out, "output dir");
  CLI::Option* d_opt_stride = detect->add_option("--stride", d_stride, "scan stride");
  CLI::Option* d_opt_scale_step =
      detect->add_option("--scale-step", d_scale_step, "pyramid factor");
  CLI::Option* d_opt_nms = detect->add_option("--nms", d_nms, "NMS IoU threshold");

  // eval
  auto* eval = app.add_subcommand("eval", "measure FAR/FRR of a model on samples");
  std::string e_model, e_samples, e_out;
  CLI::Option* e_opt_model = eval->add_option("--model", e_model, "cascade model file");
  CLI::Option* e_opt_samples = eval->add_option("--samples", e_samples, "sample dir");
  CLI::Option* e_opt_out = eval->add_option("--out", e_out, "output dir");

  // grid
  auto* gridcmd = app.add_subcommand("grid", "feature-kind x overlap experiment grid");
  std::string g_images, g_backgrounds, g_out, g_number_ap, g_digit_ap;
  std::vector<std::string> g_features{"cs"};
  std::vector<double> g_overlaps{0.5, 0.6, 0.7, 0.75, 0.8, 0.9};
  std::vector<std::string> g_targets{"number"};
  int g_stride = 1, g_stages = 20, g_rounds = 100;
  double g_scale_step = 1.25, g_far = 5e-5;
  std::int64_t g_negatives = 10000;
  std::uint64_t g_seed = 0;
  CLI::Option* g_opt_images = gridcmd->add_option("--images", g_images, "annotated frame dir");
  CLI::Option* g_opt_backgrounds =
      gridcmd->add_option("--backgrounds", g_backgrounds, "background-only frame dir");
  CLI::Option* g_opt_out = gridcmd->add_option("--out", g_out, "output dir");
  CLI::Option* g_opt_features =
      gridcmd->add_option("--features", g_features, "feature kinds")->delimiter(',');
  CLI::Option* g_opt_overlaps =
      gridcmd->add_option("--overlaps", g_overlaps, "overlap thresholds")->delimiter(',');
  CLI::Option* g_opt_targets =
      gridcmd->add_option("--targets", g_targets, "detector labels")->delimiter(',');
  CLI::Option* g_opt_number_ap =
      gridcmd->add_option("--number-aperture", g_number_ap, "number window WxH");
  CLI::Option* g_opt_digit_ap =
      gridcmd->add_option("--digit-aperture", g_digit_ap, "digit window WxH");
  CLI::Option* g_opt_stride = gridcmd->add_option("--stride", g_stride, "scan stride");
  CLI::Option* g_opt_scale_step =
      gridcmd->add_option("--scale-step", g_scale_step, "pyramid factor");
  CLI::Option* g_opt_negatives =
      gridcmd->add_option("--negatives", g_negatives, "total negative windows");
  CLI::Option* g_opt_far = gridcmd->add_option("--far-target", g_far, "cascade FAR budget");
  CLI::Option* g_opt_stages = gridcmd->add_option("--stages", g_stages, "max stages");
  CLI::Option* g_opt_rounds = gridcmd->add_option("--rounds", g_rounds, "max rounds per stage");
  CLI::Option* g_opt_seed = gridcmd->add_option("--seed", g_seed, "master seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    apply_worker_budget(opt_workers, workers);
    if (prepare->parsed())
      return cmd_prepare(config_path, p_opt_images, p_images, p_opt_backgrounds,
                         p_backgrounds, p_opt_out, p_out, p_opt_label, p_label,
                         p_opt_overlap, p_overlap, p_opt_aperture, p_aperture,
                         p_opt_stride, p_stride, p_opt_scale_step, p_scale_step,
                         p_opt_negatives, p_negatives, p_opt_seed, p_seed);
    if (train->parsed())
      return cmd_train(config_path, t_opt_samples, t_samples, t_opt_out, t_out,
                       t_opt_features, t_features, t_opt_label, t_label, t_opt_far,
                       t_far, t_opt_stages, t_stages, t_opt_rounds, t_rounds,
                       t_opt_min_tpr, t_min_tpr, t_opt_max_fpr, t_max_fpr, t_opt_seed,
                       t_seed);
    if (detect->parsed())
      return cmd_detect(config_path, d_opt_model, d_model, d_opt_ensemble, d_ensemble,
                        d_opt_frames, d_frames, d_opt_out, d_out, d_opt_stride,
                        d_stride, d_opt_scale_step, d_scale_step, d_opt_nms, d_nms);
    if (eval->parsed())
      return cmd_eval(config_path, e_opt_model, e_model, e_opt_samples, e_samples,
                      e_opt_out, e_out);
    if (gridcmd->parsed())
      return cmd_grid(config_path, g_opt_images, g_images, g_opt_backgrounds,
                      g_backgrounds, g_opt_out, g_out, g_opt_features, g_features,
                      g_opt_overlaps, g_overlaps, g_opt_targets, g_targets,
                      g_opt_number_ap, g_number_ap, g_opt_digit_ap, g_digit_ap,
                      g_opt_stride, g_stride, g_opt_scale_step, g_scale_step,
                      g_opt_negatives, g_negatives, g_opt_far, g_far, g_opt_stages,
                      g_stages, g_opt_rounds, g_rounds, g_opt_seed, g_seed);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const nlbp::TrainingHaltError& e) {
    std::cerr << "training halt: " << e.what() << "\n";
    return kExitTrainingHalt;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
