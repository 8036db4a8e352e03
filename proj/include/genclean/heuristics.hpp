#pragma once
// Coarse domain-knowledge filters for extreme non-physiological segments:
// ABP range and peak-to-peak rules, PPG spectral band-power rule.

#include <algorithm>
#include <vector>

#include "genclean/dsp.hpp"
#include "genclean/signal.hpp"

namespace genclean::heuristics {

struct HeuristicConfig {
  double abp_min = 0.0;    // mmHg, inclusive
  double abp_max = 300.0;  // mmHg, inclusive
  double min_pp = 15.0;    // mmHg; peak-to-peak must be strictly above this
  double ppg_f_lo = 0.5;   // Hz
  double ppg_f_hi = 3.0;   // Hz
  double ppg_max_out_fraction = 0.30;
};

enum class HeuristicReason { RangeViolation, LowPeakToPeak, BandPowerViolation };

inline std::string to_string(HeuristicReason r) {
  switch (r) {
    case HeuristicReason::RangeViolation: return "range_violation";
    case HeuristicReason::LowPeakToPeak: return "low_peak_to_peak";
    case HeuristicReason::BandPowerViolation: return "band_power_violation";
  }
  return "?";
}

struct HeuristicVerdict {
  bool passed = true;
  std::vector<HeuristicReason> reasons;
};

/// Boundary values pass: the physiological range is read as [0, 300] mmHg.
inline bool abp_range_check(const Segment& segment, const HeuristicConfig& cfg = {}) {
  for (double v : segment.values)
    if (v < cfg.abp_min || v > cfg.abp_max) return false;
  return true;
}

/// Pass requires max - min strictly above min_pp (a flat line fails).
inline bool peak_to_peak_check(const Segment& segment, const HeuristicConfig& cfg = {}) {
  if (segment.values.empty()) return false;
  auto [lo, hi] = std::minmax_element(segment.values.begin(), segment.values.end());
  return (*hi - *lo) > cfg.min_pp;
}

/// Fail when more than max_out_fraction of the non-DC power lies outside
/// [f_lo, f_hi]. A constant segment has no AC power and fails outright.
inline bool ppg_band_power_check(const Segment& segment, const HeuristicConfig& cfg = {}) {
  double in_fraction = 0.0;
  try {
    in_fraction =
        dsp::band_power_fraction(segment.values, segment.fs_hz, cfg.ppg_f_lo, cfg.ppg_f_hi);
  } catch (const Error&) {
    return false;  // no AC power: flat line
  }
  return (1.0 - in_fraction) <= cfg.ppg_max_out_fraction;
}

inline HeuristicVerdict apply_heuristics(const Segment& segment, const HeuristicConfig& cfg = {}) {
  HeuristicVerdict v;
  if (segment.modality == Modality::Abp) {
    if (!abp_range_check(segment, cfg)) v.reasons.push_back(HeuristicReason::RangeViolation);
    if (!peak_to_peak_check(segment, cfg)) v.reasons.push_back(HeuristicReason::LowPeakToPeak);
  } else {
    if (!ppg_band_power_check(segment, cfg))
      v.reasons.push_back(HeuristicReason::BandPowerViolation);
  }
  v.passed = v.reasons.empty();
  return v;
}

}  // namespace genclean::heuristics
