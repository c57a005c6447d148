#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nlbp/classifiers.hpp"
#include "nlbp/io_util.hpp"
#include "nlbp/model_io.hpp"
#include "nlbp/parallel.hpp"
#include "nlbp/rng.hpp"

namespace nlbp {

/// Error rates of a cascade over a labeled patch set. A rate whose class is
/// empty stays unset ("n/a") instead of pretending to be zero.
struct EvalMetrics {
  std::optional<double> far;  // accepted negatives / negatives (type I)
  std::optional<double> frr;  // rejected positives / positives (type II)
  std::int64_t n_pos = 0;
  std::int64_t n_neg = 0;
  int feature_count = 0;
  int stage_count = 0;
};

/// One row of the per-sample decision log.
struct SampleDecision {
  bool positive = false;
  std::int64_t index = 0;  // position within its class list
  bool accepted = false;
  double score = 0.0;
  int rejected_stage = -1;
};

/// Exact acceptance counting over aperture-sized patches. Order-independent:
/// the metrics are a pure fold over per-sample decisions.
inline EvalMetrics measure(const Cascade& cascade, std::span<const GrayImage> positives,
                           std::span<const GrayImage> negatives,
                           std::vector<SampleDecision>* log = nullptr) {
  EvalMetrics m;
  m.n_pos = static_cast<std::int64_t>(positives.size());
  m.n_neg = static_cast<std::int64_t>(negatives.size());
  m.feature_count = cascade.feature_count();
  m.stage_count = cascade.stage_count();
  auto run = [&](std::span<const GrayImage> patches, bool positive) {
    std::int64_t accepted = 0;
    for (std::size_t i = 0; i < patches.size(); ++i) {
      const GrayImage& p = patches[i];
      if (p.width() != cascade.aperture.width || p.height() != cascade.aperture.height)
        throw std::invalid_argument("measure: patch size != cascade aperture");
      IntegralImage ii(p);
      Cascade::Result r = cascade.evaluate(WindowView{&ii, 0, 0, 1.0});
      accepted += r.accepted;
      if (log)
        log->push_back(SampleDecision{positive, static_cast<std::int64_t>(i),
                                      r.accepted, r.final_score, r.rejected_stage});
    }
    return accepted;
  };
  std::int64_t pos_accepted = run(positives, true);
  std::int64_t neg_accepted = run(negatives, false);
  if (m.n_neg > 0) m.far = static_cast<double>(neg_accepted) / static_cast<double>(m.n_neg);
  if (m.n_pos > 0)
    m.frr = static_cast<double>(m.n_pos - pos_accepted) / static_cast<double>(m.n_pos);
  return m;
}

namespace detail {

inline std::string format_double17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Decision log: "pos|neg index accepted score rejected_stage" per line.
inline void write_decision_log(const std::filesystem::path& path,
                               const std::vector<SampleDecision>& log) {
  std::ostringstream out;
  out << "# class index accepted score rejected_stage\n";
  for (const SampleDecision& d : log)
    out << (d.positive ? "pos" : "neg") << " " << d.index << " " << (d.accepted ? 1 : 0)
        << " " << detail::format_double17(d.score) << " " << d.rejected_stage << "\n";
  write_text_file(path, out.str());
}

inline std::vector<SampleDecision> read_decision_log(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<SampleDecision> log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string cls;
    SampleDecision d;
    int accepted;
    if (!(ls >> cls >> d.index >> accepted >> d.score >> d.rejected_stage) ||
        (cls != "pos" && cls != "neg"))
      throw std::runtime_error("bad decision log line: " + line);
    d.positive = cls == "pos";
    d.accepted = accepted != 0;
    log.push_back(d);
  }
  return log;
}

/// Recomputes FAR/FRR from a decision log; must agree with measure().
inline EvalMetrics metrics_from_log(const std::vector<SampleDecision>& log) {
  EvalMetrics m;
  std::int64_t pos_acc = 0, neg_acc = 0;
  for (const SampleDecision& d : log) {
    if (d.positive) {
      ++m.n_pos;
      pos_acc += d.accepted;
    } else {
      ++m.n_neg;
      neg_acc += d.accepted;
    }
  }
  if (m.n_neg > 0) m.far = static_cast<double>(neg_acc) / static_cast<double>(m.n_neg);
  if (m.n_pos > 0)
    m.frr = static_cast<double>(m.n_pos - pos_acc) / static_cast<double>(m.n_pos);
  return m;
}

// --- experiment grid -------------------------------------------------------

struct ExperimentGrid {
  std::vector<FeatureKind> kinds;
  std::vector<double> overlaps;
  std::vector<std::string> targets;  // detector labels ("number", "0".."9")

  void validate() const {
    if (kinds.empty() || overlaps.empty() || targets.empty())
      throw std::invalid_argument("grid: every axis must be non-empty");
  }
};

struct GridCellKey {
  FeatureKind kind = FeatureKind::kCensus;
  double overlap = 0.0;
  std::string target;

  bool operator==(const GridCellKey&) const = default;
};

/// Per-cell seed: a pure function of the master seed and the cell
/// coordinates, so execution order cannot leak between cells.
inline std::uint64_t grid_cell_seed(std::uint64_t master, const GridCellKey& key) {
  return derive_seed(master, {static_cast<std::uint64_t>(key.kind),
                              std::bit_cast<std::uint64_t>(key.overlap),
                              hash_string(key.target)});
}

/// File-name stem for a cell, e.g. "cs-0p75-number".
inline std::string grid_cell_stem(const GridCellKey& key) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%g", key.overlap);
  std::string ov(buf);
  std::replace(ov.begin(), ov.end(), '.', 'p');
  return std::string(to_string(key.kind)) + "-" + ov + "-" + key.target;
}

struct GridCellResult {
  GridCellKey key;
  bool ok = false;
  std::string error;
  EvalMetrics metrics;
  std::int64_t n_train_pos = 0;
  std::int64_t n_train_neg = 0;
  double achieved_far = 1.0;
  bool met_budget = false;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Training + test patches for one cell; extraction depends on the cell's
/// overlap threshold, so the grid asks for data per cell.
struct CellData {
  std::vector<GrayImage> train_pos;
  std::vector<GrayImage> train_neg;
  std::vector<GrayImage> test_pos;
  std::vector<GrayImage> test_neg;
};

using CellDataProvider = std::function<CellData(const GridCellKey&, std::uint64_t seed)>;

struct GridOptions {
  std::filesystem::path out_dir;
  std::uint64_t master_seed = 0;
  bool save_models = true;
  int cell_workers = 1;
};

namespace detail {

inline nlohmann::json metrics_to_json(const EvalMetrics& m) {
  nlohmann::json j;
  j["far"] = m.far ? nlohmann::json(*m.far) : nlohmann::json(nullptr);
  j["frr"] = m.frr ? nlohmann::json(*m.frr) : nlohmann::json(nullptr);
  j["n_pos"] = m.n_pos;
  j["n_neg"] = m.n_neg;
  j["feature_count"] = m.feature_count;
  j["stage_count"] = m.stage_count;
  return j;
}

inline EvalMetrics metrics_from_json(const nlohmann::json& j) {
  EvalMetrics m;
  if (!j.at("far").is_null()) m.far = j.at("far").get<double>();
  if (!j.at("frr").is_null()) m.frr = j.at("frr").get<double>();
  m.n_pos = j.at("n_pos").get<std::int64_t>();
  m.n_neg = j.at("n_neg").get<std::int64_t>();
  m.feature_count = j.at("feature_count").get<int>();
  m.stage_count = j.at("stage_count").get<int>();
  return m;
}

inline nlohmann::json cell_to_json(const GridCellResult& c) {
  nlohmann::json j;
  j["key"] = {{"kind", to_string(c.key.kind)},
              {"overlap", c.key.overlap},
              {"target", c.key.target}};
  j["ok"] = c.ok;
  j["error"] = c.error;
  j["metrics"] = metrics_to_json(c.metrics);
  j["n_train_pos"] = c.n_train_pos;
  j["n_train_neg"] = c.n_train_neg;
  j["achieved_far"] = c.achieved_far;
  j["met_budget"] = c.met_budget;
  j["wall_seconds"] = c.wall_seconds;
  j["seed"] = c.seed;
  return j;
}

inline GridCellResult cell_from_json(const nlohmann::json& j) {
  GridCellResult c;
  c.key.kind = feature_kind_from_string(j.at("key").at("kind").get<std::string>());
  c.key.overlap = j.at("key").at("overlap").get<double>();
  c.key.target = j.at("key").at("target").get<std::string>();
  c.ok = j.at("ok").get<bool>();
  c.error = j.at("error").get<std::string>();
  c.metrics = metrics_from_json(j.at("metrics"));
  c.n_train_pos = j.at("n_train_pos").get<std::int64_t>();
  c.n_train_neg = j.at("n_train_neg").get<std::int64_t>();
  c.achieved_far = j.at("achieved_far").get<double>();
  c.met_budget = j.at("met_budget").get<bool>();
  c.wall_seconds = j.at("wall_seconds").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

/// Atomic-enough single-writer publish: write a temp file, then rename.
inline void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, j.dump(2) + "\n");
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

struct GridRunResult {
  std::vector<GridCellResult> cells;  // grid order: kind-major, then overlap, then target
  int executed = 0;  // cells actually trained this run (others resumed)
};

/// Runs every grid cell: trains a cascade, measures it on the cell's test
/// patches, writes one JSON record per cell (plus model + decision log).
/// Cells whose record already exists with ok=true are skipped, so an
/// interrupted grid resumes where it stopped; failed cells are recorded and
/// retried on the next run.
inline GridRunResult run_grid(const ExperimentGrid& grid, const CellDataProvider& provider,
                              const CascadeConfig& base_cfg, const GridOptions& options) {
  grid.validate();
  std::filesystem::create_directories(options.out_dir);
  std::vector<GridCellKey> keys;
  for (FeatureKind kind : grid.kinds)
    for (double overlap : grid.overlaps)
      for (const std::string& target : grid.targets)
        keys.push_back(GridCellKey{kind, overlap, target});

  GridRunResult run;
  run.cells.resize(keys.size());
  std::atomic<int> executed{0};
  parallel_for(
      static_cast<std::int64_t>(keys.size()),
      [&](std::int64_t i) {
        const GridCellKey& key = keys[static_cast<std::size_t>(i)];
        std::filesystem::path cell_path =
            options.out_dir / ("cell-" + grid_cell_stem(key) + ".json");
        if (std::filesystem::exists(cell_path)) {
          try {
            GridCellResult prev = detail::cell_from_json(
                nlohmann::json::parse(read_text_file(cell_path)));
            if (prev.ok && prev.key == key) {
              run.cells[static_cast<std::size_t>(i)] = std::move(prev);
              return;
            }
          } catch (const std::exception&) {
            // unreadable record: fall through and recompute
          }
        }
        GridCellResult cell;
        cell.key = key;
        cell.seed = grid_cell_seed(options.master_seed, key);
        auto t0 = std::chrono::steady_clock::now();
        try {
          CellData data = provider(key, cell.seed);
          CascadeConfig cfg = base_cfg;
          cfg.kind = key.kind;
          cfg.seed = cell.seed;
          cfg.pool.clear();  // kind changed; never reuse a foreign pool
          cell.n_train_pos = static_cast<std::int64_t>(data.train_pos.size());
          cell.n_train_neg = static_cast<std::int64_t>(data.train_neg.size());
          CascadeTrainResult trained = train_cascade(
              std::move(data.train_pos), std::move(data.train_neg), cfg, nullptr,
              key.target);
          cell.achieved_far = trained.achieved_far;
          cell.met_budget = trained.met_budget;
          std::vector<SampleDecision> log;
          cell.metrics = measure(trained.cascade, data.test_pos, data.test_neg, &log);
          write_decision_log(
              options.out_dir / ("decisions-" + grid_cell_stem(key) + ".txt"), log);
          if (options.save_models)
            save_cascade(trained.cascade,
                         options.out_dir / ("model-" + grid_cell_stem(key) + ".json"));
          cell.ok = true;
          ++executed;
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.error = e.what();
          ++executed;
        }
        cell.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        detail::write_json_atomic(cell_path, detail::cell_to_json(cell));
        run.cells[static_cast<std::size_t>(i)] = std::move(cell);
      },
      options.cell_workers);
  run.executed = executed.load();
  return run;
}

// --- reports ---------------------------------------------------------------

/// One row of a per-target CSV series.
struct SeriesRow {
  double overlap = 0.0;
  FeatureKind kind = FeatureKind::kCensus;
  int feature_count = 0;
  std::optional<double> far;
  std::optional<double> frr;

  bool operator==(const SeriesRow&) const = default;
};

inline std::string emit_series_csv(const std::vector<SeriesRow>& rows) {
  std::ostringstream out;
  out << "overlap,kind,feature_count,far,frr\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? detail::format_double17(*v) : std::string("n/a");
  };
  for (const SeriesRow& r : rows)
    out << detail::format_double17(r.overlap) << "," << to_string(r.kind) << ","
        << r.feature_count << "," << opt(r.far) << "," << opt(r.frr) << "\n";
  return out.str();
}

inline std::vector<SeriesRow> parse_series_csv(const std::string& body) {
  std::istringstream in(body);
  std::string line;
  if (!std::getline(in, line) || line != "overlap,kind,feature_count,far,frr")
    throw std::runtime_error("series csv: bad header");
  std::vector<SeriesRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      cols.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 5) throw std::runtime_error("series csv: bad row: " + line);
    SeriesRow r;
    r.overlap = std::stod(cols[0]);
    r.kind = feature_kind_from_string(cols[1]);
    r.feature_count = std::stoi(cols[2]);
    if (cols[3] != "n/a") r.far = std::stod(cols[3]);
    if (cols[4] != "n/a") r.frr = std::stod(cols[4]);
    rows.push_back(r);
  }
  return rows;
}

struct PlotSeries {
  std::string name;
  std::string color;
  std::vector<std::pair<double, double>> points;  // (x, y)
};

/// Minimal static SVG line plot: axes, ticks, one polyline per series, text
/// legend. Good enough to eyeball trends; CSVs carry the exact numbers.
inline std::string render_line_plot_svg(const std::string& title, const std::string& x_label,
                                        const std::string& y_label,
                                        const std::vector<PlotSeries>& series) {
  const int width = 640, height = 420;
  const double ml = 70, mr = 120, mt = 40, mb = 50;
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const PlotSeries& s : series)
    for (auto [x, y] : s.points) {
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      }
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  y_min = std::min(y_min, 0.0);
  auto px = [&](double x) {
    return ml + (x - x_min) / (x_max - x_min) * (width - ml - mr);
  };
  auto py = [&](double y) {
    return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
  };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  // axes
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                ml, height - mb, width - mr, height - mb);
  svg << buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"black\"/>\n",
                ml, mt, ml, height - mb);
  svg << buf;
  for (int t = 0; t <= 4; ++t) {
    double xv = x_min + (x_max - x_min) * t / 4;
    double yv = y_min + (y_max - y_min) * t / 4;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%g</text>\n",
                  px(xv), height - mb + 18, xv);
    svg << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%g</text>\n", ml - 6,
                  py(yv) + 4, yv);
    svg << buf;
  }
  svg << "<text x=\"" << (ml + (width - ml - mr) / 2) << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + (height - mt - mb) / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (mt + (height - mt - mb) / 2) << ")\">" << y_label << "</text>\n";
  double legend_y = mt + 10;
  for (const PlotSeries& s : series) {
    if (!s.points.empty()) {
      svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
      for (auto [x, y] : s.points) {
        std::snprintf(buf, sizeof buf, "%.1f,%.1f ", px(x), py(y));
        svg << buf;
      }
      svg << "\"/>\n";
      for (auto [x, y] : s.points) {
        std::snprintf(buf, sizeof buf,
                      "<circle cx=\"%.1f\" cy=\"%.1f\" r=\"3\" fill=\"%s\"/>\n", px(x),
                      py(y), s.color.c_str());
        svg << buf;
      }
    }
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"18\" height=\"4\" fill=\"%s\"/>\n",
                  width - mr + 14.0, legend_y - 4, s.color.c_str());
    svg << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\">%s</text>\n",
                  width - mr + 38.0, legend_y, s.name.c_str());
    svg << buf;
    legend_y += 18;
  }
  svg << "</svg>\n";
  return svg.str();
}

inline const char* feature_kind_color(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kCensus: return "#1f6fb2";
    case FeatureKind::kLbp: return "#2a9d4e";
    case FeatureKind::kHaar: return "#d0483e";
  }
  return "#444444";
}

/// Fixed-layout per-digit summary: rows Training / Testing / FRR(%) across
/// digit columns 0..9; absent cells render as an em dash.
inline std::string render_digit_table(
    const std::vector<GridCellResult>& digit_cells) {
  std::array<std::optional<std::int64_t>, 10> training{};
  std::array<std::optional<std::int64_t>, 10> testing{};
  std::array<std::optional<double>, 10> frr{};
  for (const GridCellResult& c : digit_cells) {
    if (c.key.target.size() != 1 || c.key.target[0] < '0' || c.key.target[0] > '9')
      continue;
    std::size_t d = static_cast<std::size_t>(c.key.target[0] - '0');
    if (!c.ok) continue;
    training[d] = c.n_train_pos;
    testing[d] = c.metrics.n_pos;
    if (c.metrics.frr) frr[d] = *c.metrics.frr * 100.0;
  }
  std::ostringstream out;
  auto row = [&](const std::string& name, auto&& cell_text) {
    out << name;
    for (std::size_t i = name.size(); i < 10; ++i) out << ' ';
    for (int d = 0; d < 10; ++d) {
      std::string cell = cell_text(d);
      out << ' ';
      for (std::size_t i = cell.size(); i < 8; ++i) out << ' ';
      out << cell;
    }
    out << "\n";
  };
  row("Digit", [&](int d) { return std::to_string(d); });
  row("Training", [&](int d) {
    return training[static_cast<std::size_t>(d)]
               ? std::to_string(*training[static_cast<std::size_t>(d)])
               : std::string("—");
  });
  row("Testing", [&](int d) {
    return testing[static_cast<std::size_t>(d)]
               ? std::to_string(*testing[static_cast<std::size_t>(d)])
               : std::string("—");
  });
  row("FRR(%)", [&](int d) {
    if (!frr[static_cast<std::size_t>(d)]) return std::string("—");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *frr[static_cast<std::size_t>(d)]);
    return std::string(buf);
  });
  return out.str();
}

/// Writes the report family for a finished grid: per-target CSV series, SVG
/// trend plots (feature count and FRR vs. overlap, one line per feature
/// kind), and a per-digit table for every (kind, overlap) that has digit
/// cells.
inline void emit_reports(const std::vector<GridCellResult>& cells,
                         const std::filesystem::path& out_dir) {
  if (cells.empty()) throw std::invalid_argument("emit_reports: no cells");
  std::filesystem::create_directories(out_dir);

  std::vector<std::string> targets;
  for (const GridCellResult& c : cells)
    if (std::find(targets.begin(), targets.end(), c.key.target) == targets.end())
      targets.push_back(c.key.target);

  for (const std::string& target : targets) {
    std::vector<SeriesRow> rows;
    for (const GridCellResult& c : cells) {
      if (c.key.target != target || !c.ok) continue;
      rows.push_back(SeriesRow{c.key.overlap, c.key.kind, c.metrics.feature_count,
                               c.metrics.far, c.metrics.frr});
    }
    std::sort(rows.begin(), rows.end(), [](const SeriesRow& a, const SeriesRow& b) {
      if (a.overlap != b.overlap) return a.overlap < b.overlap;
      return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    });
    write_text_file(out_dir / ("series-" + target + ".csv"), emit_series_csv(rows));

    std::vector<PlotSeries> count_series, frr_series;
    for (FeatureKind kind :
         {FeatureKind::kCensus, FeatureKind::kLbp, FeatureKind::kHaar}) {
      PlotSeries pc{std::string(to_string(kind)), feature_kind_color(kind), {}};
      PlotSeries pf = pc;
      for (const SeriesRow& r : rows) {
        if (r.kind != kind) continue;
        pc.points.emplace_back(r.overlap, static_cast<double>(r.feature_count));
        if (r.frr) pf.points.emplace_back(r.overlap, *r.frr * 100.0);
      }
      if (!pc.points.empty()) count_series.push_back(std::move(pc));
      if (!pf.points.empty()) frr_series.push_back(std::move(pf));
    }
    if (!count_series.empty())
      write_text_file(out_dir / ("plot-features-" + target + ".svg"),
                      render_line_plot_svg("Weak classifiers: " + target,
                                           "overlap threshold", "feature count",
                                           count_series));
    if (!frr_series.empty())
      write_text_file(out_dir / ("plot-frr-" + target + ".svg"),
                      render_line_plot_svg("FRR: " + target, "overlap threshold",
                                           "FRR (%)", frr_series));
  }

  // one digit table per (kind, overlap) pair that has digit targets
  std::vector<std::pair<FeatureKind, double>> combos;
  for (const GridCellResult& c : cells) {
    if (c.key.target.size() != 1 || !std::isdigit(static_cast<unsigned char>(c.key.target[0])))
      continue;
    std::pair<FeatureKind, double> combo{c.key.kind, c.key.overlap};
    if (std::find(combos.begin(), combos.end(), combo) == combos.end())
      combos.push_back(combo);
  }
  for (auto [kind, overlap] : combos) {
    std::vector<GridCellResult> digit_cells;
    for (const GridCellResult& c : cells)
      if (c.key.kind == kind && c.key.overlap == overlap) digit_cells.push_back(c);
    GridCellKey stem_key{kind, overlap, "digits"};
    write_text_file(out_dir / ("digit-table-" + grid_cell_stem(stem_key) + ".txt"),
                    render_digit_table(digit_cells));
  }
}

}  // namespace nlbp
