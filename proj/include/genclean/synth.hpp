#pragma once
// Deterministic synthetic pulsatile-signal generator with per-patient
// distribution shifts, ground-truth artifact injection, and a labeled
// benchmark builder. Stands in for clinical recordings at desk scale.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "genclean/nn.hpp"  // Rng
#include "genclean/signal.hpp"

namespace genclean::synth {

struct PatientProfile {
  double map_mmhg = 90.0;           // mean arterial pressure baseline
  double pulse_pressure_mmhg = 45;  // systolic minus diastolic amplitude
  double hr_bpm = 70.0;
  double notch_depth = 0.2;    // dicrotic bump relative depth in [0, 1]
  double resp_rate_hz = 0.25;  // respiratory amplitude modulation
  double drift_scale = 2.0;    // slow-drift RMS in mmHg
  std::uint64_t seed = 0;

  void validate() const {
    if (map_mmhg <= 0 || pulse_pressure_mmhg <= 0)
      throw Error("profile: map and pulse pressure must be positive");
    if (hr_bpm < 30 || hr_bpm > 220) throw Error("profile: hr_bpm must lie in [30, 220]");
    if (notch_depth < 0 || notch_depth > 1) throw Error("profile: notch_depth must lie in [0, 1]");
    if (drift_scale < 0) throw Error("profile: drift_scale must be non-negative");
  }
};

enum class ArtifactKind { Flush, BloodDraw, Damping, NoiseBurst, Dropout, StepOffset };

inline std::string to_string(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::Flush: return "flush";
    case ArtifactKind::BloodDraw: return "blood_draw";
    case ArtifactKind::Damping: return "damping";
    case ArtifactKind::NoiseBurst: return "noise_burst";
    case ArtifactKind::Dropout: return "dropout";
    case ArtifactKind::StepOffset: return "step_offset";
  }
  return "?";
}

struct ArtifactSpec {
  ArtifactKind kind = ArtifactKind::NoiseBurst;
  double start_s = 0.0;
  double duration_s = 1.0;
  double magnitude = 0.0;  // kind-specific; 0 picks a seeded default
};

struct GroundTruthMask {
  std::vector<std::uint8_t> artifact;  // per sample, aligned with the signal

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : artifact) n += v != 0;
    return n;
  }
};

// ---------------------------------------------------------------------------
// Beat template: two smooth periodic bumps (systolic peak, dicrotic bump) on
// a broad decaying base, expressed in beat phase u in [0, 1). Periodic bumps
// keep consecutive beats continuous. The template is normalized to [0, 1]
// once per profile so every beat maps onto
// [map - pp/3, map + 2 pp/3] with the same affine transform.
// ---------------------------------------------------------------------------

namespace detail {

inline double periodic_bump(double u, double center, double kappa) {
  return std::exp(kappa * (std::cos(2.0 * std::numbers::pi * (u - center)) - 1.0));
}

struct BeatTemplate {
  double notch_depth;
  double g_min, g_max;

  explicit BeatTemplate(double notch) : notch_depth(notch) {
    g_min = std::numeric_limits<double>::infinity();
    g_max = -g_min;
    for (int i = 0; i < 4096; ++i) {
      const double g = raw(static_cast<double>(i) / 4096.0);
      g_min = std::min(g_min, g);
      g_max = std::max(g_max, g);
    }
  }

  double raw(double u) const {
    return periodic_bump(u, 0.15, 10.0)                        // systolic peak
           + 0.25 * notch_depth * periodic_bump(u, 0.45, 14.0) // dicrotic bump
           + 1.5 * periodic_bump(u, 0.30, 0.5);                // diastolic decay base
  }

  /// Normalized template in [0, 1].
  double operator()(double u) const { return (raw(u) - g_min) / (g_max - g_min); }
};

}  // namespace detail

/// Generates one patient's pulsatile waveform plus beat-onset sample indices.
/// Deterministic for fixed (profile, duration_s, fs_hz).
inline std::pair<Signal, std::vector<std::size_t>> synth_patient(const PatientProfile& profile,
                                                                 double duration_s, double fs_hz) {
  profile.validate();
  if (duration_s < 10.0) throw Error("synth_patient: duration_s must be >= 10");
  if (fs_hz < 50.0 || fs_hz > 500.0) throw Error("synth_patient: fs_hz must lie in [50, 500]");

  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs_hz));
  nn::Rng rng_period(nn::Rng::derive(profile.seed, 1));
  nn::Rng rng_drift(nn::Rng::derive(profile.seed, 2));
  nn::Rng rng_noise(nn::Rng::derive(profile.seed, 3));

  // beat schedule with +-5% period jitter
  std::vector<double> onsets_t{0.0};
  std::vector<double> periods;
  const double base_period = 60.0 / profile.hr_bpm;
  while (onsets_t.back() < duration_s) {
    const double period = base_period * (1.0 + 0.05 * rng_period.uniform(-1.0, 1.0));
    periods.push_back(period);
    onsets_t.push_back(onsets_t.back() + period);
  }

  const detail::BeatTemplate beat(profile.notch_depth);
  const double lo = profile.map_mmhg - profile.pulse_pressure_mmhg / 3.0;

  Signal sig;
  sig.fs_hz = fs_hz;
  sig.modality = Modality::Abp;
  sig.samples.resize(n);

  std::vector<std::size_t> onsets;
  std::size_t beat_idx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs_hz;
    while (beat_idx + 1 < onsets_t.size() && t >= onsets_t[beat_idx + 1]) ++beat_idx;
    const double u = (t - onsets_t[beat_idx]) / periods[beat_idx];
    const double pulse = lo + profile.pulse_pressure_mmhg * beat(u);
    const double resp =
        1.0 + 0.05 * std::sin(2.0 * std::numbers::pi * profile.resp_rate_hz * t);
    sig.samples[i] = profile.map_mmhg + (pulse - profile.map_mmhg) * resp;
  }
  for (std::size_t b = 0; b + 1 < onsets_t.size(); ++b) {
    const auto idx = static_cast<std::size_t>(std::llround(onsets_t[b] * fs_hz));
    if (idx < n) onsets.push_back(idx);
  }

  // slow drift: low-pass filtered random walk, rescaled to RMS = drift_scale
  if (profile.drift_scale > 0) {
    std::vector<double> drift(n);
    double walk = 0.0, lp = 0.0;
    const double alpha = std::exp(-2.0 * std::numbers::pi * 0.05 / fs_hz);
    for (std::size_t i = 0; i < n; ++i) {
      walk += rng_drift.normal();
      lp = alpha * lp + (1.0 - alpha) * walk;
      drift[i] = lp;
    }
    double mean = 0.0;
    for (double d : drift) mean += d;
    mean /= static_cast<double>(n);
    double rms = 0.0;
    for (double d : drift) rms += (d - mean) * (d - mean);
    rms = std::sqrt(rms / static_cast<double>(n));
    const double scale = rms > 0 ? profile.drift_scale / rms : 0.0;
    for (std::size_t i = 0; i < n; ++i) sig.samples[i] += (drift[i] - mean) * scale;
  }

  for (std::size_t i = 0; i < n; ++i) sig.samples[i] += 0.5 * rng_noise.normal();
  return {std::move(sig), std::move(onsets)};
}

// ---------------------------------------------------------------------------
// Artifact injection
// ---------------------------------------------------------------------------

/// Applies artifact specs in order; the mask marks exactly the affected
/// samples. Deterministic for fixed (signal, specs, seed).
inline std::pair<Signal, GroundTruthMask> inject_artifacts(const Signal& signal,
                                                           const std::vector<ArtifactSpec>& specs,
                                                           std::uint64_t seed) {
  Signal out = signal;
  GroundTruthMask mask;
  mask.artifact.assign(signal.samples.size(), 0);
  const double fs = signal.fs_hz;
  const auto n = static_cast<long long>(signal.samples.size());

  for (std::size_t si = 0; si < specs.size(); ++si) {
    const auto& spec = specs[si];
    if (spec.duration_s <= 0 || spec.start_s < 0)
      throw Error("inject_artifacts: spec " + std::to_string(si) + " has invalid placement");
    const auto i0 = std::llround(spec.start_s * fs);
    const auto i1 = std::llround((spec.start_s + spec.duration_s) * fs);
    if (i0 < 0 || i1 > n || i0 >= i1)
      throw Error("inject_artifacts: spec " + std::to_string(si) + " (" + to_string(spec.kind) +
                  ") lies outside the signal");
    nn::Rng rng(nn::Rng::derive(seed, 0xA77 + si));
    auto& v = out.samples;
    const auto len = static_cast<std::size_t>(i1 - i0);

    switch (spec.kind) {
      case ArtifactKind::Flush: {
        const double target = spec.magnitude > 0 ? spec.magnitude : rng.uniform(280.0, 320.0);
        const double start_v = v[i0];
        const double end_v = v[i1 - 1];
        const std::size_t half = len / 2;
        for (std::size_t i = 0; i < len; ++i) {
          if (i < half)
            v[i0 + i] = start_v + (target - start_v) * (double(i) / std::max<std::size_t>(1, half));
          else
            v[i0 + i] = target + (end_v - target) *
                                     (double(i - half) / std::max<std::size_t>(1, len - half));
        }
        break;
      }
      case ArtifactKind::BloodDraw: {
        const double level = spec.magnitude > 0 ? spec.magnitude : rng.uniform(1.0, 9.0);
        if (level < 0 || level > 10)
          throw Error("inject_artifacts: blood draw level must lie in [0, 10] mmHg");
        for (std::size_t i = 0; i < len; ++i) v[i0 + i] = level + 0.5 * rng.normal();
        break;
      }
      case ArtifactKind::Damping: {
        const double target_pp = spec.magnitude > 0 ? spec.magnitude : 10.0;
        // running mean over ~1 s
        const auto w = static_cast<long long>(std::llround(fs));
        std::vector<double> runmean(len);
        double region_mean = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
          const long long a = std::max<long long>(i0, i0 + static_cast<long long>(i) - w / 2);
          const long long b = std::min<long long>(i1, a + w);
          double acc = 0.0;
          for (long long j = a; j < b; ++j) acc += v[j];
          runmean[i] = acc / double(b - a);
          region_mean += v[i0 + i];
        }
        region_mean /= double(len);
        double pp = 0.0;
        double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
        for (std::size_t i = 0; i < len; ++i) {
          const double d = v[i0 + i] - runmean[i];
          dmin = std::min(dmin, d);
          dmax = std::max(dmax, d);
        }
        pp = dmax - dmin;
        const double scale = pp > target_pp ? target_pp / pp : 1.0;
        for (std::size_t i = 0; i < len; ++i)
          v[i0 + i] = region_mean + (v[i0 + i] - runmean[i]) * scale;
        break;
      }
      case ArtifactKind::NoiseBurst: {
        const double sigma = spec.magnitude > 0 ? spec.magnitude : 25.0;
        for (std::size_t i = 0; i < len; ++i) v[i0 + i] += sigma * rng.normal();
        break;
      }
      case ArtifactKind::Dropout: {
        const double hold = i0 > 0 ? v[i0 - 1] : v[i0];
        for (std::size_t i = 0; i < len; ++i) v[i0 + i] = hold;
        break;
      }
      case ArtifactKind::StepOffset: {
        const double step = spec.magnitude != 0 ? spec.magnitude : 40.0;
        for (std::size_t i = 0; i < len; ++i) v[i0 + i] += step;
        break;
      }
    }
    for (long long i = i0; i < i1; ++i) mask.artifact[static_cast<std::size_t>(i)] = 1;
  }
  return {std::move(out), std::move(mask)};
}

// ---------------------------------------------------------------------------
// Benchmark builder
// ---------------------------------------------------------------------------

/// A segment is labeled Artifact when the ground-truth mask covers at least
/// this fraction of its samples.
inline constexpr double kArtifactCoverage = 0.10;

inline Label label_from_mask(const GroundTruthMask& mask, std::size_t start, std::size_t len) {
  std::size_t covered = 0;
  for (std::size_t i = start; i < start + len; ++i) covered += mask.artifact[i] != 0;
  return static_cast<double>(covered) >= kArtifactCoverage * static_cast<double>(len)
             ? Label::Artifact
             : Label::Clean;
}

struct SplitData {
  Signal signal;               // contaminated recording
  GroundTruthMask mask;        // aligned ground truth
  std::vector<Segment> segments;  // labeled 10-second windows
  std::vector<ArtifactSpec> artifacts;
};

struct PatientData {
  std::string id;
  PatientProfile profile;
  SplitData train, validation, test;
};

struct Benchmark {
  double fs_hz = 120.0;
  std::uint64_t seed = 0;
  std::vector<PatientData> patients;

  LabeledDataset dataset() const {
    LabeledDataset ds;
    for (const auto& p : patients) {
      for (const auto& s : p.train.segments) ds.entries.push_back({s, Split::Train});
      for (const auto& s : p.validation.segments) ds.entries.push_back({s, Split::Validation});
      for (const auto& s : p.test.segments) ds.entries.push_back({s, Split::Test});
    }
    return ds;
  }
};

namespace detail {

inline PatientProfile draw_profile(nn::Rng& rng, std::uint64_t seed) {
  PatientProfile p;
  p.map_mmhg = rng.uniform(70.0, 100.0);
  p.pulse_pressure_mmhg = rng.uniform(30.0, 60.0);
  p.hr_bpm = rng.uniform(50.0, 120.0);
  p.notch_depth = rng.uniform(0.05, 0.35);
  p.resp_rate_hz = rng.uniform(0.2, 0.3);
  p.drift_scale = rng.uniform(1.0, 3.0);
  p.seed = seed;
  return p;
}

inline SplitData make_split(const PatientProfile& profile, const std::string& patient_id,
                            std::size_t n_segments, std::size_t n_artifact_segments,
                            std::uint64_t seed, double fs_hz, double window_s) {
  SplitData split;
  if (n_segments == 0) {
    split.signal.fs_hz = fs_hz;
    split.signal.patient_id = patient_id;
    return split;
  }
  const double duration = static_cast<double>(n_segments) * window_s;
  // every split draws an independent waveform realization of the same profile
  PatientProfile wave_profile = profile;
  wave_profile.seed = nn::Rng::derive(seed, 0x51);
  auto [clean, onsets] = synth_patient(wave_profile, duration, fs_hz);
  (void)onsets;
  clean.patient_id = patient_id;

  // choose which windows receive one artifact each
  nn::Rng rng(nn::Rng::derive(seed, 0x5e6));
  std::vector<std::size_t> idx(n_segments);
  for (std::size_t i = 0; i < n_segments; ++i) idx[i] = i;
  rng.shuffle(idx.begin(), idx.end());

  static constexpr ArtifactKind kKinds[] = {ArtifactKind::Flush,      ArtifactKind::BloodDraw,
                                            ArtifactKind::Damping,    ArtifactKind::NoiseBurst,
                                            ArtifactKind::Dropout,    ArtifactKind::StepOffset};
  for (std::size_t k = 0; k < std::min(n_artifact_segments, n_segments); ++k) {
    ArtifactSpec spec;
    spec.kind = kKinds[rng.next_u32() % 6];
    spec.duration_s = rng.uniform(1.5, 6.0);
    spec.start_s = static_cast<double>(idx[k]) * window_s +
                   rng.uniform(0.0, window_s - spec.duration_s);
    switch (spec.kind) {
      case ArtifactKind::Flush: spec.magnitude = rng.uniform(280.0, 320.0); break;
      case ArtifactKind::BloodDraw: spec.magnitude = rng.uniform(1.0, 9.0); break;
      case ArtifactKind::Damping: spec.magnitude = rng.uniform(6.0, 12.0); break;
      case ArtifactKind::NoiseBurst: spec.magnitude = 25.0; break;
      case ArtifactKind::Dropout: spec.magnitude = 0.0; break;
      case ArtifactKind::StepOffset:
        spec.magnitude = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(25.0, 60.0);
        break;
    }
    split.artifacts.push_back(spec);
  }

  auto [contaminated, mask] = inject_artifacts(clean, split.artifacts, nn::Rng::derive(seed, 0xB0));
  split.signal = std::move(contaminated);
  split.mask = std::move(mask);

  split.segments = segment_signal(split.signal, window_s, window_s);
  for (auto& seg : split.segments)
    seg.label = label_from_mask(split.mask, seg.start_index, seg.values.size());
  return split;
}

}  // namespace detail

/// Builds the labeled synthetic benchmark: profiles drawn from the default
/// ranges, artifact-light train/validation splits, and an exactly balanced
/// test split. Pure function of its arguments.
inline Benchmark make_benchmark(std::size_t n_patients, std::size_t train_per_patient,
                                std::size_t val_per_patient, std::size_t test_per_patient,
                                double artifact_fraction, std::uint64_t seed,
                                double fs_hz = 120.0) {
  if (artifact_fraction < 0 || artifact_fraction > 1)
    throw Error("make_benchmark: artifact_fraction must lie in [0, 1]");
  if (test_per_patient % 2 != 0)
    throw Error("make_benchmark: test_per_patient must be even for a balanced 1:1 split");

  Benchmark bench;
  bench.fs_hz = fs_hz;
  bench.seed = seed;
  nn::Rng profile_rng(nn::Rng::derive(seed, 0xF0));
  for (std::size_t p = 0; p < n_patients; ++p) {
    PatientData pd;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "p%02u", static_cast<unsigned>(p));
    pd.id = buf;
    pd.profile = detail::draw_profile(profile_rng, nn::Rng::derive(seed, 100 + p));

    const auto train_artifacts =
        static_cast<std::size_t>(std::llround(artifact_fraction * double(train_per_patient)));
    const auto val_artifacts =
        static_cast<std::size_t>(std::llround(artifact_fraction * double(val_per_patient)));
    pd.train = detail::make_split(pd.profile, pd.id, train_per_patient, train_artifacts,
                                  nn::Rng::derive(seed, 1000 + p), fs_hz, 10.0);
    pd.validation = detail::make_split(pd.profile, pd.id, val_per_patient, val_artifacts,
                                       nn::Rng::derive(seed, 2000 + p), fs_hz, 10.0);
    pd.test = detail::make_split(pd.profile, pd.id, test_per_patient, test_per_patient / 2,
                                 nn::Rng::derive(seed, 3000 + p), fs_hz, 10.0);
    bench.patients.push_back(std::move(pd));
  }
  return bench;
}

}  // namespace genclean::synth
