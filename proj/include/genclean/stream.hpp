#pragma once
// Real-time streaming simulator with latency and compute metering: replays a
// signal sample by sample, emits one verdict per completed 10-second window,
// and reports latency percentiles, realtime factor, an analytic FLOP count,
// and best-effort memory overhead.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "genclean/detector.hpp"
#include "genclean/signal.hpp"

namespace genclean::stream {

enum class Pace { Realtime, Unpaced };

struct StreamStats {
  std::size_t segments_processed = 0;
  std::int64_t latency_p50_ns = 0;
  std::int64_t latency_p95_ns = 0;
  std::int64_t latency_max_ns = 0;
  double realtime_factor = 0.0;  // data seconds per wall second
  double flops_per_segment = 0.0;
  std::int64_t peak_rss_delta_bytes = -1;  // best effort, non-portable; -1 if unknown
};

/// Inference FLOPs for one segment: 2*out_len*out_ch*in_ch*k per (t)conv,
/// 2*m*n per dense layer, out_len*out_ch per activation.
inline double estimate_flops(const vae::VaeArchitecture& arch) {
  arch.validate();
  const auto l = arch.lengths();
  const double k = static_cast<double>(arch.kernel);
  const double ld = static_cast<double>(arch.latent_dim);
  const double flat = static_cast<double>(arch.flat_len());

  double flops = 0.0;
  std::size_t in_ch = 1;
  for (int i = 0; i < 3; ++i) {  // encoder convs + relu
    flops += 2.0 * double(l[i + 1]) * double(arch.channels[i]) * double(in_ch) * k;
    flops += double(l[i + 1]) * double(arch.channels[i]);
    in_ch = arch.channels[i];
  }
  flops += 2.0 * ld * flat * 2.0;  // mu and logvar heads
  flops += 2.0 * flat * ld;        // decoder dense
  flops += flat;                   // decoder relu
  // decoder tconvs mirror the encoder lengths: out lengths l[2], l[1], l[0]
  flops += 2.0 * double(l[2]) * double(arch.channels[1]) * double(arch.channels[2]) * k;
  flops += double(l[2]) * double(arch.channels[1]);
  flops += 2.0 * double(l[1]) * double(arch.channels[0]) * double(arch.channels[1]) * k;
  flops += double(l[1]) * double(arch.channels[0]);
  flops += 2.0 * double(l[0]) * 1.0 * double(arch.channels[0]) * k;  // linear output
  return flops;
}

namespace detail {

inline std::int64_t nearest_rank_ns(std::vector<std::int64_t> v, double p) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

inline std::int64_t peak_rss_bytes() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      long kb = 0;
      if (std::sscanf(line.c_str(), "VmHWM: %ld kB", &kb) == 1) return kb * 1024;
    }
  }
  return -1;
}

}  // namespace detail

struct StreamResult {
  std::vector<detector::SegmentVerdict> verdicts;
  StreamStats stats;
};

/// Consumes samples in arrival order and classifies each completed window.
/// Realtime pacing releases samples at fs_hz wall rate; latency is measured
/// from window completion to verdict emission. Verdicts are bit-identical to
/// batch classification of the same windows.
inline StreamResult run_stream(const Signal& source, const detector::CalibratedDetector& det,
                               Pace pace, double window_s = 10.0) {
  if (source.fs_hz <= 0) throw Error("run_stream: fs_hz must be positive");
  const auto w = static_cast<std::size_t>(std::llround(window_s * source.fs_hz));
  if (source.samples.size() < w) throw Error("run_stream: source shorter than one window");

  StreamResult res;
  const std::int64_t rss_before = detail::peak_rss_bytes();
  std::vector<std::int64_t> latencies;

  using clock = std::chrono::steady_clock;
  const auto t_begin = clock::now();
  std::vector<double> window;
  window.reserve(w);
  std::size_t start_index = 0;

  // Realtime pacing releases samples in small chunks against absolute
  // deadlines so the pace does not drift with sleep overhead.
  const std::size_t chunk =
      pace == Pace::Realtime
          ? std::max<std::size_t>(1, static_cast<std::size_t>(source.fs_hz * 0.025))
          : source.samples.size();

  for (std::size_t i = 0; i < source.samples.size(); ++i) {
    if (pace == Pace::Realtime && i % chunk == 0) {
      const auto deadline =
          t_begin + std::chrono::duration_cast<clock::duration>(
                        std::chrono::duration<double>(static_cast<double>(i) / source.fs_hz));
      std::this_thread::sleep_until(deadline);
    }
    window.push_back(source.samples[i]);
    if (window.size() == w) {
      const auto t_complete = clock::now();
      Segment seg;
      seg.values = window;
      seg.fs_hz = source.fs_hz;
      seg.duration_s = window_s;
      seg.modality = source.modality;
      seg.patient_id = source.patient_id;
      seg.start_index = start_index;
      res.verdicts.push_back(detector::classify(det, seg));
      latencies.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() -
                                                                               t_complete)
                              .count());
      window.clear();
      start_index = i + 1;
    }
  }
  const double wall_s = std::chrono::duration<double>(clock::now() - t_begin).count();

  res.stats.segments_processed = res.verdicts.size();
  res.stats.latency_p50_ns = detail::nearest_rank_ns(latencies, 50.0);
  res.stats.latency_p95_ns = detail::nearest_rank_ns(latencies, 95.0);
  res.stats.latency_max_ns = detail::nearest_rank_ns(latencies, 100.0);
  res.stats.realtime_factor =
      wall_s > 0 ? static_cast<double>(res.verdicts.size()) * window_s / wall_s : 0.0;
  res.stats.flops_per_segment = estimate_flops(det.model.arch);
  const std::int64_t rss_after = detail::peak_rss_bytes();
  if (rss_before >= 0 && rss_after >= 0) res.stats.peak_rss_delta_bytes = rss_after - rss_before;
  return res;
}

// ---------------------------------------------------------------------------
// Frequency sweep harness
// ---------------------------------------------------------------------------

struct SweepPoint {
  double fs_hz = 0.0;
  double accuracy = 0.0;
  double mean_segment_ns = 0.0;
  std::size_t segments = 0;
};

/// Resamples labeled test segments to each rate and classifies them with one
/// fixed detector; reports accuracy and mean per-segment time per rate.
inline std::vector<SweepPoint> frequency_sweep(const std::vector<Segment>& test_segments,
                                               const std::vector<double>& rates,
                                               const detector::CalibratedDetector& det) {
  std::vector<SweepPoint> out;
  for (double rate : rates) {
    SweepPoint pt;
    pt.fs_hz = rate;
    std::size_t correct = 0;
    double ns = 0.0;
    for (const auto& seg : test_segments) {
      if (!seg.label) throw Error("frequency_sweep: unlabeled test segment");
      Segment at_rate = seg;
      if (!detector::detail::rates_equal(rate, seg.fs_hz)) {
        at_rate.values = dsp::resample(seg.values, seg.fs_hz, rate);
        at_rate.fs_hz = rate;
      }
      auto verdict = detector::classify(det, at_rate);
      correct += verdict.is_artifact == (*seg.label == Label::Artifact);
      ns += static_cast<double>(verdict.processing_ns);
      ++pt.segments;
    }
    pt.accuracy = static_cast<double>(correct) / static_cast<double>(pt.segments);
    pt.mean_segment_ns = ns / static_cast<double>(pt.segments);
    out.push_back(pt);
  }
  return out;
}

}  // namespace genclean::stream
