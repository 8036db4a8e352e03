#pragma once
// End-to-end artifact scoring and cleaning: frequency adaptation, reversible
// normalization, VAE reconstruction, threshold calibration, classification,
// and NaN-masked signal cleaning.

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "genclean/dsp.hpp"
#include "genclean/heuristics.hpp"
#include "genclean/signal.hpp"
#include "genclean/vae.hpp"
#include "json.hpp"

namespace genclean::detector {

struct DetectorConfig {
  double fs_target_hz = 120.0;
  double eps = 1e-5;
  vae::ScoreMetric score_metric = vae::ScoreMetric::Mse;
  double threshold_percentile = 90.0;
  bool enable_revin = true;
  bool enable_freq_adapter = true;
  bool enable_heuristics = true;
  heuristics::HeuristicConfig heuristic_cfg;

  void validate() const {
    if (threshold_percentile <= 0 || threshold_percentile > 100)
      throw Error("detector config: threshold_percentile must lie in (0, 100]");
    if (fs_target_hz <= 0) throw Error("detector config: fs_target_hz must be positive");
    if (eps <= 0) throw Error("detector config: eps must be positive");
  }
};

namespace detail {

inline bool rates_equal(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); }

/// Fits a resampled segment to exactly `target_len` samples, tolerating a
/// rounding slack of +-2: symmetric truncation when long, edge-padding when
/// short.
inline std::vector<double> fit_length(std::vector<double> v, std::size_t target_len) {
  if (v.size() == target_len) return v;
  const auto diff = static_cast<long long>(v.size()) - static_cast<long long>(target_len);
  if (diff > 2 || diff < -2)
    throw Error("frequency adapter: resampled length " + std::to_string(v.size()) +
                " too far from model input length " + std::to_string(target_len));
  if (diff > 0) {
    const std::size_t front = static_cast<std::size_t>(diff) / 2;
    return {v.begin() + front, v.begin() + front + target_len};
  }
  std::vector<double> out;
  out.reserve(target_len);
  const std::size_t missing = static_cast<std::size_t>(-diff);
  const std::size_t front = missing / 2;
  out.insert(out.end(), front, v.front());
  out.insert(out.end(), v.begin(), v.end());
  out.insert(out.end(), missing - front, v.back());
  return out;
}

}  // namespace detail

/// Resamples a segment onto the model grid (round(duration_s * fs_target)
/// samples, fitted to input_len) without normalization. Shared by training
/// preparation and scoring.
inline std::vector<double> prepare_model_input(const Segment& segment, const DetectorConfig& cfg,
                                               std::size_t input_len) {
  for (double v : segment.values)
    if (std::isnan(v)) throw Error("detector: segment contains NaN");
  std::vector<double> v = segment.values;
  if (cfg.enable_freq_adapter && !detail::rates_equal(segment.fs_hz, cfg.fs_target_hz))
    v = dsp::resample(v, segment.fs_hz, cfg.fs_target_hz);
  return detail::fit_length(std::move(v), input_len);
}

struct ScoreResult {
  double score = 0.0;
  std::vector<double> decoded_native;  // at the segment's rate and length
  vae::LatentVector latent;
};

/// The scoring pipeline: frequency-adapt, normalize, reconstruct with noise=0,
/// score in normalized space, then denormalize and resample the decoded trace
/// back to the segment's native rate and exact native length.
inline ScoreResult score_segment(const vae::VaeModel<float>& model, const DetectorConfig& cfg,
                                 const Segment& segment) {
  cfg.validate();
  const std::size_t input_len = model.arch.input_len;
  std::vector<double> fitted = prepare_model_input(segment, cfg, input_len);

  dsp::RevinStats stats{0.0, 1.0, cfg.eps};
  std::vector<double> x_model = fitted;
  if (cfg.enable_revin) {
    stats = dsp::revin_stats(fitted, cfg.eps);
    x_model = dsp::revin_normalize(fitted, stats);
  }

  auto [recon, latent] = vae::reconstruct(model, x_model);

  ScoreResult res;
  res.latent = std::move(latent);
  double acc = 0.0;
  for (std::size_t i = 0; i < input_len; ++i) {
    const double d = x_model[i] - recon[i];
    acc += cfg.score_metric == vae::ScoreMetric::Mse ? d * d : std::abs(d);
  }
  res.score = acc / static_cast<double>(input_len);

  std::vector<double> decoded = cfg.enable_revin ? dsp::revin_denormalize(recon, stats) : recon;
  if (cfg.enable_freq_adapter && !detail::rates_equal(segment.fs_hz, cfg.fs_target_hz))
    decoded = dsp::resample(decoded, cfg.fs_target_hz, segment.fs_hz);
  res.decoded_native = detail::fit_length(std::move(decoded), segment.values.size());
  return res;
}

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
inline double nearest_rank_percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error("percentile of empty set");
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

/// Threshold = nearest-rank percentile of validation scores. The validation
/// segments must already pass heuristics (caller's duty).
inline double calibrate_threshold(const vae::VaeModel<float>& model, const DetectorConfig& cfg,
                                  const std::vector<Segment>& validation_segments) {
  if (validation_segments.empty()) throw Error("calibrate_threshold: empty validation set");
  if (validation_segments.size() < 10)
    throw Error("calibrate_threshold: need at least 10 validation segments, got " +
                std::to_string(validation_segments.size()));
  std::vector<double> scores;
  scores.reserve(validation_segments.size());
  for (const auto& seg : validation_segments)
    scores.push_back(score_segment(model, cfg, seg).score);
  return nearest_rank_percentile(std::move(scores), cfg.threshold_percentile);
}

struct CalibratedDetector {
  vae::VaeModel<float> model;
  DetectorConfig config;
  double threshold = 0.0;

  void validate() const {
    if (!std::isfinite(threshold) || threshold < 0)
      throw Error("detector: threshold must be finite and >= 0");
  }
};

struct SegmentVerdict {
  double score = 0.0;  // +inf sentinel when heuristics reject the segment
  bool is_artifact = false;
  heuristics::HeuristicVerdict heuristic;
  std::vector<double> decoded;  // native rate and length
  vae::LatentVector latent;
  std::int64_t processing_ns = 0;
  // provenance for the JSONL record
  std::string patient_id;
  std::size_t start_index = 0;
  double fs_hz = 0.0;
};

/// Verdict rule: heuristic failure (when enabled) OR score strictly above the
/// threshold. Heuristic failures score +inf so downstream ranking stays
/// well-defined.
inline SegmentVerdict classify(const CalibratedDetector& det, const Segment& segment) {
  det.validate();
  const auto t0 = std::chrono::steady_clock::now();
  SegmentVerdict v;
  v.patient_id = segment.patient_id;
  v.start_index = segment.start_index;
  v.fs_hz = segment.fs_hz;

  if (det.config.enable_heuristics)
    v.heuristic = heuristics::apply_heuristics(segment, det.config.heuristic_cfg);

  auto scored = score_segment(det.model, det.config, segment);
  v.decoded = std::move(scored.decoded_native);
  v.latent = std::move(scored.latent);
  if (!v.heuristic.passed) {
    v.score = std::numeric_limits<double>::infinity();
    v.is_artifact = true;
  } else {
    v.score = scored.score;
    v.is_artifact = scored.score > det.threshold;
  }
  v.processing_ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
          .count();
  return v;
}

struct CleanResult {
  Signal cleaned;
  std::vector<SegmentVerdict> verdicts;
  std::size_t trailing_samples = 0;  // passed through unjudged
};

/// Cuts the signal into non-overlapping 10-second windows, replaces artifact
/// windows with NaN, and passes clean samples through bit-exactly. A trailing
/// remainder shorter than one window is left untouched and reported.
inline CleanResult clean_signal(const CalibratedDetector& det, const Signal& signal,
                                double window_s = 10.0) {
  if (signal.has_nan()) throw Error("clean_signal: input signal contains NaN");
  const auto w = static_cast<std::size_t>(std::llround(window_s * signal.fs_hz));
  if (signal.samples.size() < w) throw Error("clean_signal: signal too short to clean");

  CleanResult res;
  res.cleaned = signal;
  auto segments = segment_signal(signal, window_s, window_s);
  for (const auto& seg : segments) {
    auto verdict = classify(det, seg);
    if (verdict.is_artifact)
      for (std::size_t i = 0; i < seg.values.size(); ++i)
        res.cleaned.samples[seg.start_index + i] = std::numeric_limits<double>::quiet_NaN();
    res.verdicts.push_back(std::move(verdict));
  }
  res.trailing_samples = signal.samples.size() - segments.size() * w;
  return res;
}

// ---------------------------------------------------------------------------
// Training driver
// ---------------------------------------------------------------------------

struct TrainedDetector {
  CalibratedDetector detector;
  vae::TrainReport report;
  std::size_t train_used = 0, train_dropped = 0;  // heuristic pre-filter accounting
  std::size_t val_used = 0, val_dropped = 0;
};

/// Label-free end-to-end training: heuristic pre-filtering, frequency
/// adaptation onto the model grid, VAE training (normalization follows
/// enable_revin), and threshold calibration on the surviving validation
/// segments.
inline TrainedDetector train_detector(const std::vector<Segment>& train_segments,
                                      const std::vector<Segment>& val_segments,
                                      const vae::VaeArchitecture& arch,
                                      const vae::TrainConfig& train_cfg,
                                      const DetectorConfig& det_cfg) {
  det_cfg.validate();
  TrainedDetector out;

  std::vector<std::vector<double>> train_in, val_in;
  std::vector<Segment> val_kept;
  for (const auto& seg : train_segments) {
    if (det_cfg.enable_heuristics &&
        !heuristics::apply_heuristics(seg, det_cfg.heuristic_cfg).passed) {
      ++out.train_dropped;
      continue;
    }
    train_in.push_back(prepare_model_input(seg, det_cfg, arch.input_len));
  }
  for (const auto& seg : val_segments) {
    if (det_cfg.enable_heuristics &&
        !heuristics::apply_heuristics(seg, det_cfg.heuristic_cfg).passed) {
      ++out.val_dropped;
      continue;
    }
    val_in.push_back(prepare_model_input(seg, det_cfg, arch.input_len));
    val_kept.push_back(seg);
  }
  out.train_used = train_in.size();
  out.val_used = val_in.size();

  vae::TrainConfig cfg = train_cfg;
  cfg.normalize = det_cfg.enable_revin;
  cfg.eps = det_cfg.eps;
  auto [model, report] = vae::train<float>(train_in, val_in, arch, cfg);
  out.report = std::move(report);

  out.detector.config = det_cfg;
  out.detector.threshold = calibrate_threshold(model, det_cfg, val_kept);
  out.detector.model = std::move(model);
  return out;
}

// ---------------------------------------------------------------------------
// JSONL verdict records
// ---------------------------------------------------------------------------

/// One verdict as a JSONL record. Infinite scores (heuristic rejections) are
/// serialized as the string "Infinity" since JSON has no infinity literal.
inline nlohmann::json verdict_to_json(const SegmentVerdict& v) {
  nlohmann::json j{{"patient_id", v.patient_id},
                   {"start_index", v.start_index},
                   {"fs_hz", v.fs_hz},
                   {"is_artifact", v.is_artifact},
                   {"processing_ns", v.processing_ns},
                   {"latent", v.latent.mu}};
  if (std::isinf(v.score))
    j["score"] = "Infinity";
  else
    j["score"] = v.score;
  nlohmann::json reasons = nlohmann::json::array();
  for (auto r : v.heuristic.reasons) reasons.push_back(heuristics::to_string(r));
  j["heuristic_reasons"] = reasons;
  return j;
}

inline double score_from_json(const nlohmann::json& j) {
  if (j.at("score").is_string()) return std::numeric_limits<double>::infinity();
  return j.at("score").get<double>();
}

}  // namespace genclean::detector
