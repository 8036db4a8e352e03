#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "genclean/heuristics.hpp"
#include "genclean/synth.hpp"

using namespace genclean;
using heuristics::HeuristicReason;

namespace {

Segment abp_segment(std::vector<double> values, double fs = 120.0) {
  Segment s;
  s.values = std::move(values);
  s.fs_hz = fs;
  s.modality = Modality::Abp;
  return s;
}

Segment ppg_tone(double freq, double fs = 100.0, double duration = 10.0, double amp = 1.0,
                 double offset = 0.0) {
  Segment s;
  s.fs_hz = fs;
  s.modality = Modality::Ppg;
  const auto n = static_cast<std::size_t>(duration * fs);
  for (std::size_t i = 0; i < n; ++i)
    s.values.push_back(offset + amp * std::sin(2 * std::numbers::pi * freq * double(i) / fs));
  return s;
}

std::vector<double> sinusoid(double mean, double amp, std::size_t n = 1200) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = mean + amp * std::sin(0.05 * double(i));
  return v;
}

}  // namespace

TEST_CASE("abp range check") {
  auto bad = abp_segment(sinusoid(90, 20));
  bad.values[100] = -5.0;
  CHECK_FALSE(heuristics::abp_range_check(bad));
  auto verdict = heuristics::apply_heuristics(bad);
  CHECK_FALSE(verdict.passed);
  REQUIRE(verdict.reasons.size() == 1);
  CHECK(verdict.reasons[0] == HeuristicReason::RangeViolation);

  // boundary values are inside the closed interval
  auto boundary = abp_segment(std::vector<double>(1200, 300.0));
  CHECK(heuristics::abp_range_check(boundary));

  CHECK(heuristics::abp_range_check(abp_segment(sinusoid(90, 20))));
}

TEST_CASE("peak to peak check") {
  auto low = abp_segment(sinusoid(90, 6));  // pp = 12
  CHECK_FALSE(heuristics::peak_to_peak_check(low));

  auto ok = abp_segment(sinusoid(90, 20));  // pp = 40
  CHECK(heuristics::peak_to_peak_check(ok));

  auto flat = abp_segment(std::vector<double>(1200, 90.0));
  CHECK_FALSE(heuristics::peak_to_peak_check(flat));

  // exactly at the threshold fails ("above 15" read strictly)
  auto exact = abp_segment({80.0, 95.0, 80.0, 95.0});
  CHECK_FALSE(heuristics::peak_to_peak_check(exact));
}

TEST_CASE("ppg band power check") {
  CHECK(heuristics::ppg_band_power_check(ppg_tone(1.2)));
  CHECK_FALSE(heuristics::ppg_band_power_check(ppg_tone(5.0)));

  // equal tones in and out of band split the power at one half
  auto mixed = ppg_tone(1.0);
  auto out_tone = ppg_tone(4.0);
  for (std::size_t i = 0; i < mixed.values.size(); ++i) mixed.values[i] += out_tone.values[i];
  CHECK_FALSE(heuristics::ppg_band_power_check(mixed));

  // flat PPG has no AC power at all
  Segment flat;
  flat.fs_hz = 100;
  flat.modality = Modality::Ppg;
  flat.values.assign(1000, 2.0);
  CHECK_FALSE(heuristics::ppg_band_power_check(flat));
}

TEST_CASE("apply_heuristics combines reasons") {
  auto awful = abp_segment(std::vector<double>(1200, -5.0));  // out of range and flat
  auto verdict = heuristics::apply_heuristics(awful);
  CHECK_FALSE(verdict.passed);
  REQUIRE(verdict.reasons.size() == 2);
  CHECK(verdict.reasons[0] == HeuristicReason::RangeViolation);
  CHECK(verdict.reasons[1] == HeuristicReason::LowPeakToPeak);

  auto ppg = ppg_tone(1.0);
  CHECK(heuristics::apply_heuristics(ppg).passed);

  // clean synthetic ABP passes
  synth::PatientProfile p;
  p.seed = 5;
  auto [sig, onsets] = synth::synth_patient(p, 30.0, 120.0);
  for (auto& seg : segment_signal(sig)) CHECK(heuristics::apply_heuristics(seg).passed);
}

TEST_CASE("range check monotonicity") {
  std::mt19937 gen(2);
  std::uniform_real_distribution<double> out_of_range(300.1, 500.0);
  for (int t = 0; t < 50; ++t) {
    auto seg = abp_segment(sinusoid(90, 20));
    REQUIRE(heuristics::abp_range_check(seg));
    seg.values[gen() % seg.values.size()] = out_of_range(gen) * (gen() % 2 ? 1.0 : -1.0);
    REQUIRE_FALSE(heuristics::abp_range_check(seg));
  }
}

TEST_CASE("ppg decision is scale invariant") {
  std::mt19937 gen(4);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (double freq : {0.8, 1.5, 2.9, 3.5, 6.0}) {
    auto seg = ppg_tone(freq);
    const bool base = heuristics::ppg_band_power_check(seg);
    for (int t = 0; t < 5; ++t) {
      auto scaled = seg;
      const double k = scale(gen);
      for (auto& v : scaled.values) v *= k;
      REQUIRE(heuristics::ppg_band_power_check(scaled) == base);
    }
  }
}

TEST_CASE("verdict passed iff no reason") {
  auto good = abp_segment(sinusoid(90, 20));
  auto v = heuristics::apply_heuristics(good);
  CHECK(v.passed);
  CHECK(v.reasons.empty());
}
