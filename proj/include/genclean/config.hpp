#pragma once
// JSON run configuration shared by every CLI subcommand. Unknown keys are
// rejected; precedence is CLI flag > config file > built-in default.

#include <string>
#include <vector>

#include "genclean/detector.hpp"
#include "genclean/events.hpp"
#include "genclean/signal.hpp"
#include "genclean/vae.hpp"
#include "json.hpp"

namespace genclean::config {

struct SynthConfig {
  std::size_t patients = 10;
  std::size_t train_per_patient = 200;
  std::size_t val_per_patient = 40;
  std::size_t test_per_patient = 100;
  double artifact_fraction = 0.05;
  double fs_hz = 120.0;
  std::uint64_t seed = 7;
};

struct DspConfig {
  double eps = 1e-5;
  double peak_min_distance_s = 0.3;
  double peak_min_prominence = 10.0;
};

struct RunConfig {
  heuristics::HeuristicConfig heuristic;
  DspConfig dsp;
  detector::DetectorConfig det;
  vae::TrainConfig train;
  vae::VaeArchitecture arch;
  events::EventLimits events;
  SynthConfig synth;

  detector::DetectorConfig detector_config() const {
    detector::DetectorConfig d = det;
    d.eps = dsp.eps;
    d.heuristic_cfg = heuristic;
    return d;
  }
  events::EventLimits event_limits() const {
    events::EventLimits e = events;
    e.peak_min_distance_s = dsp.peak_min_distance_s;
    e.peak_min_prominence = dsp.peak_min_prominence;
    return e;
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::vector<std::string>& known,
                           const std::string& scope) {
  if (!j.is_object()) throw Error("config: \"" + scope + "\" must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error("config: unknown key \"" + (scope.empty() ? key : scope + "." + key) + "\"");
  }
}

template <typename T>
inline void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace detail

/// Parses a full run configuration, rejecting unknown keys at every level.
inline RunConfig parse_config(const nlohmann::json& j) {
  RunConfig cfg;
  detail::reject_unknown(
      j, {"heuristics", "dsp", "detector", "train", "vae", "events", "synth"}, "");

  if (j.contains("heuristics")) {
    const auto& h = j.at("heuristics");
    detail::reject_unknown(h, {"abp_min", "abp_max", "min_pp", "ppg_band", "ppg_max_out_fraction"},
                           "heuristics");
    detail::get_if(h, "abp_min", cfg.heuristic.abp_min);
    detail::get_if(h, "abp_max", cfg.heuristic.abp_max);
    detail::get_if(h, "min_pp", cfg.heuristic.min_pp);
    if (h.contains("ppg_band")) {
      auto band = h.at("ppg_band").get<std::vector<double>>();
      if (band.size() != 2) throw Error("config: heuristics.ppg_band must be [f_lo, f_hi]");
      cfg.heuristic.ppg_f_lo = band[0];
      cfg.heuristic.ppg_f_hi = band[1];
    }
    detail::get_if(h, "ppg_max_out_fraction", cfg.heuristic.ppg_max_out_fraction);
  }
  if (j.contains("dsp")) {
    const auto& d = j.at("dsp");
    detail::reject_unknown(d, {"eps", "peak_min_distance_s", "peak_min_prominence"}, "dsp");
    detail::get_if(d, "eps", cfg.dsp.eps);
    detail::get_if(d, "peak_min_distance_s", cfg.dsp.peak_min_distance_s);
    detail::get_if(d, "peak_min_prominence", cfg.dsp.peak_min_prominence);
  }
  if (j.contains("detector")) {
    const auto& d = j.at("detector");
    detail::reject_unknown(d,
                           {"fs_target_hz", "score_metric", "threshold_percentile", "enable_revin",
                            "enable_freq_adapter", "enable_heuristics"},
                           "detector");
    detail::get_if(d, "fs_target_hz", cfg.det.fs_target_hz);
    if (d.contains("score_metric"))
      cfg.det.score_metric = vae::score_metric_from_string(d.at("score_metric").get<std::string>());
    detail::get_if(d, "threshold_percentile", cfg.det.threshold_percentile);
    detail::get_if(d, "enable_revin", cfg.det.enable_revin);
    detail::get_if(d, "enable_freq_adapter", cfg.det.enable_freq_adapter);
    detail::get_if(d, "enable_heuristics", cfg.det.enable_heuristics);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    detail::reject_unknown(t, {"lr", "batch_size", "max_epochs", "patience", "seed"}, "train");
    detail::get_if(t, "lr", cfg.train.lr);
    detail::get_if(t, "batch_size", cfg.train.batch_size);
    detail::get_if(t, "max_epochs", cfg.train.max_epochs);
    detail::get_if(t, "patience", cfg.train.patience);
    detail::get_if(t, "seed", cfg.train.seed);
  }
  if (j.contains("vae")) {
    const auto& v = j.at("vae");
    detail::reject_unknown(v, {"latent_dim", "input_len"}, "vae");
    detail::get_if(v, "latent_dim", cfg.arch.latent_dim);
    detail::get_if(v, "input_len", cfg.arch.input_len);
  }
  if (j.contains("events")) {
    const auto& e = j.at("events");
    detail::reject_unknown(e, {"sbp_limit", "dbp_limit"}, "events");
    detail::get_if(e, "sbp_limit", cfg.events.sbp_limit);
    detail::get_if(e, "dbp_limit", cfg.events.dbp_limit);
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    detail::reject_unknown(s,
                           {"patients", "train_per_patient", "val_per_patient", "test_per_patient",
                            "artifact_fraction", "fs_hz", "seed"},
                           "synth");
    detail::get_if(s, "patients", cfg.synth.patients);
    detail::get_if(s, "train_per_patient", cfg.synth.train_per_patient);
    detail::get_if(s, "val_per_patient", cfg.synth.val_per_patient);
    detail::get_if(s, "test_per_patient", cfg.synth.test_per_patient);
    detail::get_if(s, "artifact_fraction", cfg.synth.artifact_fraction);
    detail::get_if(s, "fs_hz", cfg.synth.fs_hz);
    detail::get_if(s, "seed", cfg.synth.seed);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config \"" + path + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error("config \"" + path + "\": " + e.what());
  }
  return parse_config(j);
}

}  // namespace genclean::config
