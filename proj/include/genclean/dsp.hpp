#pragma once
// Numeric signal primitives: windowed-sinc resampling, spectral band power,
// prominence-based peak detection, and reversible instance normalization.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <set>
#include <vector>

#include "genclean/signal.hpp"

namespace genclean::dsp {

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

namespace detail {

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

constexpr double kSincHalfWidth = 32.0;  // taps per side

}  // namespace detail

/// Rate conversion by Hann-windowed sinc interpolation (32 taps per side).
/// When downsampling, the sinc cutoff is scaled to fs_out/2 for anti-aliasing.
/// Edges use edge-value extension; tap weights are renormalized per output
/// sample so constants are preserved exactly.
inline std::vector<double> resample(const std::vector<double>& values, double fs_in,
                                    double fs_out) {
  if (fs_in <= 0 || fs_out <= 0) throw Error("resample: sample rates must be positive");
  if (values.size() < 2) throw Error("resample: need at least 2 samples");
  for (double v : values)
    if (std::isnan(v)) throw Error("resample: input contains NaN");

  const auto n = static_cast<long long>(values.size());
  const auto m = std::max<long long>(1, std::llround(static_cast<double>(n) * fs_out / fs_in));
  const double ratio = fs_in / fs_out;           // input samples per output sample
  const double cutoff = std::min(1.0, fs_out / fs_in);
  const double half = detail::kSincHalfWidth;

  std::vector<double> out(static_cast<std::size_t>(m));
  for (long long j = 0; j < m; ++j) {
    const double p = static_cast<double>(j) * ratio;
    const auto lo = static_cast<long long>(std::ceil(p - half));
    const auto hi = static_cast<long long>(std::floor(p + half));
    double acc = 0.0, wsum = 0.0;
    for (long long k = lo; k <= hi; ++k) {
      const double u = static_cast<double>(k) - p;
      const double w =
          detail::sinc(cutoff * u) * 0.5 * (1.0 + std::cos(std::numbers::pi * u / half));
      const auto idx = static_cast<std::size_t>(std::clamp<long long>(k, 0, n - 1));
      acc += w * values[idx];
      wsum += w;
    }
    out[static_cast<std::size_t>(j)] = acc / wsum;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral band power
// ---------------------------------------------------------------------------

/// Fraction of non-DC power lying inside [f_lo, f_hi], from the DFT magnitude
/// over bins in (0, fs/2]. All-constant input has no AC power and is an error.
inline double band_power_fraction(const std::vector<double>& values, double fs_hz, double f_lo,
                                  double f_hi) {
  const std::size_t n = values.size();
  if (n < 2) throw Error("band_power_fraction: need at least 2 samples");
  if (!(f_lo < f_hi) || f_hi > fs_hz / 2 + 1e-12 || f_lo < 0)
    throw Error("band_power_fraction: require 0 <= f_lo < f_hi <= fs/2");
  for (double v : values)
    if (std::isnan(v)) throw Error("band_power_fraction: input contains NaN");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (*lo == *hi) throw Error("band_power_fraction: no AC power (constant input)");

  double total = 0.0, in_band = 0.0;
  const std::size_t k_max = n / 2;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    const std::complex<double> w(std::cos(ang), std::sin(ang));
    std::complex<double> rot(1.0, 0.0), x(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      x += values[i] * rot;
      rot *= w;
    }
    const double power = std::norm(x);
    const double f_k = static_cast<double>(k) * fs_hz / static_cast<double>(n);
    total += power;
    if (f_k >= f_lo && f_k <= f_hi) in_band += power;
  }
  if (total <= 0.0) throw Error("band_power_fraction: no AC power (constant input)");
  return in_band / total;
}

// ---------------------------------------------------------------------------
// Peak detection
// ---------------------------------------------------------------------------

namespace detail {

struct Candidate {
  std::size_t index;
  double height;
};

// Strict local maxima within [begin, end); plateaus contribute the leftmost
// sample. Run endpoints are never peaks.
inline std::vector<Candidate> local_maxima(const std::vector<double>& v, std::size_t begin,
                                           std::size_t end) {
  std::vector<Candidate> out;
  std::size_t i = begin + 1;
  while (i < end) {
    if (v[i] > v[i - 1]) {
      std::size_t j = i;
      while (j + 1 < end && v[j + 1] == v[i]) ++j;
      if (j + 1 < end && v[j + 1] < v[i]) out.push_back({i, v[i]});
      i = j + 1;
    } else {
      ++i;
    }
  }
  return out;
}

// Topographic prominence within one run: on each side, the minimum between the
// peak and the nearest strictly higher sample (or the run edge).
inline double prominence(const std::vector<double>& v, std::size_t begin, std::size_t end,
                         std::size_t peak) {
  const double h = v[peak];
  double left_base = h;
  for (std::size_t i = peak; i-- > begin;) {
    if (v[i] > h) break;
    left_base = std::min(left_base, v[i]);
  }
  double right_base = h;
  for (std::size_t i = peak + 1; i < end; ++i) {
    if (v[i] > h) break;
    right_base = std::min(right_base, v[i]);
  }
  return h - std::max(left_base, right_base);
}

}  // namespace detail

/// Prominence-filtered peak detection with a greedy minimum-distance rule
/// (taller peaks kept first). NaN runs split the signal; each contiguous
/// NaN-free run is processed independently. Returns ascending sample indices.
inline std::vector<std::size_t> detect_peaks(const std::vector<double>& values, double fs_hz,
                                             double min_distance_s = 0.3,
                                             double min_prominence = 10.0) {
  if (fs_hz <= 0) throw Error("detect_peaks: fs_hz must be positive");
  const auto min_dist =
      static_cast<std::size_t>(std::max<long long>(1, std::llround(min_distance_s * fs_hz)));

  std::vector<detail::Candidate> candidates;
  const std::size_t n = values.size();
  std::size_t i = 0;
  while (i < n) {
    while (i < n && std::isnan(values[i])) ++i;
    std::size_t begin = i;
    while (i < n && !std::isnan(values[i])) ++i;
    const std::size_t end = i;
    if (end - begin < 3) continue;
    for (auto& c : detail::local_maxima(values, begin, end))
      if (detail::prominence(values, begin, end, c.index) >= min_prominence)
        candidates.push_back(c);
  }

  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (a.height != b.height) return a.height > b.height;
    return a.index < b.index;
  });

  std::set<std::size_t> kept;
  for (const auto& c : candidates) {
    auto it = kept.lower_bound(c.index);
    bool ok = true;
    if (it != kept.end() && *it - c.index < min_dist) ok = false;
    if (ok && it != kept.begin() && c.index - *std::prev(it) < min_dist) ok = false;
    if (ok) kept.insert(c.index);
  }
  return {kept.begin(), kept.end()};
}

// ---------------------------------------------------------------------------
// Reversible instance normalization
// ---------------------------------------------------------------------------

/// Per-segment mean and population variance plus the stabilizing epsilon.
struct RevinStats {
  double mean = 0.0;
  double var = 0.0;
  double eps = 1e-5;
};

inline RevinStats revin_stats(const std::vector<double>& values, double eps = 1e-5) {
  if (values.empty()) throw Error("revin_stats: empty input");
  if (eps <= 0) throw Error("revin_stats: eps must be positive");
  const auto c = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) {
    if (std::isnan(v)) throw Error("revin_stats: input contains NaN");
    mean += v;
  }
  mean /= c;
  double var = 0.0;
  for (double v : values) {
    const double d = v - mean;
    var += d * d;
  }
  var /= c;
  return {mean, var, eps};
}

inline std::vector<double> revin_normalize(const std::vector<double>& values,
                                           const RevinStats& stats) {
  const double scale = 1.0 / std::sqrt(stats.var + stats.eps);
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - stats.mean) * scale;
  return out;
}

inline std::vector<double> revin_denormalize(const std::vector<double>& model_out,
                                             const RevinStats& stats) {
  const double scale = std::sqrt(stats.var + stats.eps);
  std::vector<double> out(model_out.size());
  for (std::size_t i = 0; i < model_out.size(); ++i) out[i] = model_out[i] * scale + stats.mean;
  return out;
}

}  // namespace genclean::dsp
