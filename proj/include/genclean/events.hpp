#pragma once
// Hypertension pulse counting on raw versus cleaned signals. Systolic peaks
// come from peak detection on the signal, diastolic troughs from the same
// detector on the inverted signal; NaN regions are excluded by the detector's
// run splitting.

#include <cmath>
#include <vector>

#include "genclean/dsp.hpp"
#include "genclean/signal.hpp"

namespace genclean::events {

struct BeatIndices {
  std::vector<std::size_t> systolic_peaks;
  std::vector<std::size_t> diastolic_troughs;
};

struct EventLimits {
  double sbp_limit = 140.0;  // mmHg, strict >
  double dbp_limit = 90.0;   // mmHg, strict >
  double peak_min_distance_s = 0.3;
  double peak_min_prominence = 10.0;
};

inline BeatIndices detect_beats(const Signal& signal, const EventLimits& limits = {}) {
  BeatIndices b;
  b.systolic_peaks = dsp::detect_peaks(signal.samples, signal.fs_hz, limits.peak_min_distance_s,
                                       limits.peak_min_prominence);
  std::vector<double> inverted(signal.samples.size());
  for (std::size_t i = 0; i < inverted.size(); ++i) inverted[i] = -signal.samples[i];
  b.diastolic_troughs = dsp::detect_peaks(inverted, signal.fs_hz, limits.peak_min_distance_s,
                                          limits.peak_min_prominence);
  return b;
}

namespace detail {

struct PulseCount {
  std::size_t hypertensive = 0;
  std::size_t beats = 0;  // paired beats plus unpaired extrema judged alone
};

// One beat = one pulse: each trough pairs with the nearest following peak
// (not beyond the next trough); a paired beat is hypertensive when either
// member exceeds its limit; unpaired extrema are judged individually.
inline PulseCount count_pulses(const Signal& signal, const BeatIndices& beats,
                               const EventLimits& limits) {
  PulseCount out;
  const auto& v = signal.samples;
  const auto& peaks = beats.systolic_peaks;
  const auto& troughs = beats.diastolic_troughs;

  std::vector<bool> peak_used(peaks.size(), false);
  std::size_t pi = 0;
  for (std::size_t ti = 0; ti < troughs.size(); ++ti) {
    while (pi < peaks.size() && peaks[pi] <= troughs[ti]) ++pi;
    const bool has_next_trough = ti + 1 < troughs.size();
    if (pi < peaks.size() && (!has_next_trough || peaks[pi] < troughs[ti + 1])) {
      ++out.beats;
      peak_used[pi] = true;
      if (v[peaks[pi]] > limits.sbp_limit || v[troughs[ti]] > limits.dbp_limit)
        ++out.hypertensive;
      ++pi;
    } else {
      ++out.beats;
      if (v[troughs[ti]] > limits.dbp_limit) ++out.hypertensive;
    }
  }
  for (std::size_t i = 0; i < peaks.size(); ++i) {
    if (peak_used[i]) continue;
    ++out.beats;
    if (v[peaks[i]] > limits.sbp_limit) ++out.hypertensive;
  }
  return out;
}

}  // namespace detail

inline std::size_t count_hypertensive_pulses(const Signal& signal,
                                             const EventLimits& limits = {}) {
  return detail::count_pulses(signal, detect_beats(signal, limits), limits).hypertensive;
}

struct EventReport {
  std::size_t pulses_before = 0;
  std::size_t pulses_after = 0;
  double reduced_proportion = 0.0;
  std::size_t beats_analyzed_before = 0;
  std::size_t beats_analyzed_after = 0;
};

inline EventReport event_reduction_report(const Signal& raw, const Signal& cleaned,
                                          const EventLimits& limits = {}) {
  if (raw.samples.size() != cleaned.samples.size())
    throw Error("event_reduction_report: raw and cleaned lengths differ");
  EventReport rep;
  const auto before = detail::count_pulses(raw, detect_beats(raw, limits), limits);
  const auto after = detail::count_pulses(cleaned, detect_beats(cleaned, limits), limits);
  rep.pulses_before = before.hypertensive;
  rep.pulses_after = after.hypertensive;
  rep.beats_analyzed_before = before.beats;
  rep.beats_analyzed_after = after.beats;
  rep.reduced_proportion =
      rep.pulses_before > 0
          ? 1.0 - static_cast<double>(rep.pulses_after) / static_cast<double>(rep.pulses_before)
          : 0.0;
  return rep;
}

}  // namespace genclean::events
