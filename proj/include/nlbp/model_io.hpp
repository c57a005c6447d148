#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlbp/classifiers.hpp"
#include "nlbp/io_util.hpp"

namespace nlbp {

inline constexpr const char* kModelFormatName = "nlbp-cascade";
inline constexpr int kModelFormatVersion = 1;

namespace detail {

/// Packs a {0,1} table into hex, 8 entries per byte, entry i in bit i%8.
inline std::string lut_to_hex(const std::vector<std::uint8_t>& lut) {
  static const char* digits = "0123456789abcdef";
  std::string hex;
  hex.reserve((lut.size() + 7) / 8 * 2);
  for (std::size_t base = 0; base < lut.size(); base += 8) {
    unsigned byte = 0;
    for (std::size_t b = 0; b < 8 && base + b < lut.size(); ++b)
      if (lut[base + b]) byte |= 1u << b;
    hex.push_back(digits[byte >> 4]);
    hex.push_back(digits[byte & 0xf]);
  }
  return hex;
}

inline std::vector<std::uint8_t> lut_from_hex(const std::string& hex, int entries) {
  if (entries < 0 || static_cast<int>(hex.size()) != (entries + 7) / 8 * 2)
    throw std::runtime_error("model: lut hex length does not match entry count");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
    throw std::runtime_error("model: bad hex digit in lut");
  };
  std::vector<std::uint8_t> lut(static_cast<std::size_t>(entries), 0);
  for (int i = 0; i < entries; ++i) {
    unsigned byte = (nibble(hex[static_cast<std::size_t>(i / 8 * 2)]) << 4) |
                    nibble(hex[static_cast<std::size_t>(i / 8 * 2 + 1)]);
    lut[static_cast<std::size_t>(i)] = (byte >> (i % 8)) & 1u;
  }
  return lut;
}

}  // namespace detail

inline nlohmann::json cascade_to_json(const Cascade& cascade) {
  nlohmann::json j;
  j["format"] = kModelFormatName;
  j["version"] = kModelFormatVersion;
  j["label"] = cascade.label;
  j["feature_kind"] = to_string(cascade.kind);
  j["aperture"] = {{"width", cascade.aperture.width},
                   {"height", cascade.aperture.height}};
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& stage : cascade.stages) {
    nlohmann::json js;
    js["theta"] = stage.theta;
    nlohmann::json weaks = nlohmann::json::array();
    for (std::size_t k = 0; k < stage.weaks.size(); ++k) {
      const WeakClassifier& w = stage.weaks[k];
      nlohmann::json jw;
      jw["rect"] = {w.feature.rect.x, w.feature.rect.y, w.feature.rect.w,
                    w.feature.rect.h};
      jw["entries"] = static_cast<int>(w.lut.size());
      jw["lut"] = detail::lut_to_hex(w.lut);
      jw["weight"] = stage.weights[k];
      if (w.feature.kind == FeatureKind::kHaar) {
        jw["template"] = to_string(w.feature.tmpl);
        jw["binning"] = {{"lo", w.binning.lo},
                         {"width", w.binning.width},
                         {"bins", w.binning.bins}};
      }
      weaks.push_back(std::move(jw));
    }
    js["weaks"] = std::move(weaks);
    stages.push_back(std::move(js));
  }
  j["stages"] = std::move(stages);
  return j;
}

inline Cascade cascade_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("format", "") != kModelFormatName)
    throw std::runtime_error("model: not a cascade file");
  if (j.value("version", -1) != kModelFormatVersion)
    throw std::runtime_error("model: unsupported version " +
                             std::to_string(j.value("version", -1)));
  Cascade cascade;
  cascade.label = j.value("label", "");
  cascade.kind = feature_kind_from_string(j.at("feature_kind").get<std::string>());
  cascade.aperture.width = j.at("aperture").at("width").get<int>();
  cascade.aperture.height = j.at("aperture").at("height").get<int>();
  if (cascade.aperture.width <= 0 || cascade.aperture.height <= 0)
    throw std::runtime_error("model: bad aperture");
  for (const auto& js : j.at("stages")) {
    StrongClassifier stage;
    stage.theta = js.at("theta").get<double>();
    for (const auto& jw : js.at("weaks")) {
      WeakClassifier w;
      w.feature.kind = cascade.kind;
      const auto& r = jw.at("rect");
      if (!r.is_array() || r.size() != 4) throw std::runtime_error("model: bad rect");
      w.feature.rect = {r[0].get<int>(), r[1].get<int>(), r[2].get<int>(),
                        r[3].get<int>()};
      int entries = jw.at("entries").get<int>();
      w.lut = detail::lut_from_hex(jw.at("lut").get<std::string>(), entries);
      if (cascade.kind == FeatureKind::kHaar) {
        w.feature.tmpl = haar_template_from_string(jw.at("template").get<std::string>());
        const auto& jb = jw.at("binning");
        w.binning.lo = jb.at("lo").get<double>();
        w.binning.width = jb.at("width").get<double>();
        w.binning.bins = jb.at("bins").get<int>();
        if (w.binning.bins != entries)
          throw std::runtime_error("model: binning/lut size mismatch");
      } else {
        int expect = cascade.kind == FeatureKind::kCensus ? 512 : 256;
        if (entries != expect)
          throw std::runtime_error("model: lut size does not match feature kind");
      }
      stage.weights.push_back(jw.at("weight").get<double>());
      stage.weaks.push_back(std::move(w));
    }
    cascade.stages.push_back(std::move(stage));
  }
  return cascade;
}

/// Training diagnostics (per-round errors, per-stage rates) as JSON for the
/// trace file written next to a trained model.
inline nlohmann::json training_trace_to_json(const CascadeTrainResult& result) {
  nlohmann::json j;
  j["achieved_far"] = result.achieved_far;
  j["far_is_estimate"] = result.far_is_estimate;
  j["met_budget"] = result.met_budget;
  j["halt_reason"] = result.halt_reason;
  nlohmann::json stages = nlohmann::json::array();
  for (std::size_t s = 0; s < result.stages.size(); ++s) {
    const StageRecord& st = result.stages[s];
    nlohmann::json js;
    js["n_weaks"] = st.n_weaks;
    js["theta"] = st.theta;
    js["tpr"] = st.tpr;
    js["fpr"] = st.fpr;
    js["cumulative_far"] = st.cumulative_far;
    js["train_negatives"] = st.train_negatives;
    nlohmann::json rounds = nlohmann::json::array();
    for (const RoundRecord& r : result.rounds[s]) {
      rounds.push_back({{"feature_index", r.feature_index},
                        {"weighted_error", r.weighted_error},
                        {"alpha", r.alpha},
                        {"train_error", r.train_error}});
    }
    js["rounds"] = std::move(rounds);
    stages.push_back(std::move(js));
  }
  j["stages"] = std::move(stages);
  return j;
}

inline void save_cascade(const Cascade& cascade, const std::filesystem::path& path) {
  write_text_file(path, cascade_to_json(cascade).dump(2) + "\n");
}

inline Cascade load_cascade(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("model: " + path.string() + ": " + e.what());
  }
  try {
    return cascade_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("model: " + path.string() + ": " + e.what());
  }
}

}  // namespace nlbp
