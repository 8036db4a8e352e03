#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "genclean/events.hpp"
#include "genclean/synth.hpp"

using namespace genclean;
using Catch::Approx;

namespace {

// 10 full beats at 1.25 Hz over 8.2 s; the phase puts every trough right
// before its peak so all ten beats pair up with no unpaired edge extrema
Signal beats(double sbp, double dbp, double fs = 120.0, double duration = 8.2) {
  Signal s;
  s.fs_hz = fs;
  const double mid = (sbp + dbp) / 2.0, amp = (sbp - dbp) / 2.0;
  const auto n = static_cast<std::size_t>(std::llround(duration * fs));
  for (std::size_t i = 0; i < n; ++i)
    s.samples.push_back(mid - amp * std::sin(2.0 * std::numbers::pi * 1.25 * double(i) / fs));
  return s;
}

}  // namespace

TEST_CASE("hypertensive pulse counting criteria") {
  CHECK(events::count_hypertensive_pulses(beats(150, 80)) == 10);  // SBP criterion
  CHECK(events::count_hypertensive_pulses(beats(120, 95)) == 10);  // DBP criterion
  CHECK(events::count_hypertensive_pulses(beats(120, 70)) == 0);   // neither

  // strict limits: exactly 140/90 do not count
  CHECK(events::count_hypertensive_pulses(beats(140, 90)) == 0);
}

TEST_CASE("a beat satisfying both criteria counts once") {
  CHECK(events::count_hypertensive_pulses(beats(160, 100)) == 10);
}

TEST_CASE("detect_beats on synthetic patients") {
  synth::PatientProfile p;
  p.hr_bpm = 72;
  p.seed = 19;
  auto [sig, onsets] = synth::synth_patient(p, 60.0, 120.0);
  auto b = events::detect_beats(sig);
  const auto expected = static_cast<long long>(onsets.size());
  CHECK(std::llabs(static_cast<long long>(b.systolic_peaks.size()) - expected) <= 2);
  CHECK(std::llabs(static_cast<long long>(b.diastolic_troughs.size()) - expected) <= 2);
}

TEST_CASE("NaN handling in beat detection") {
  Signal all_nan;
  all_nan.fs_hz = 120.0;
  all_nan.samples.assign(1200, std::numeric_limits<double>::quiet_NaN());
  auto b = events::detect_beats(all_nan);
  CHECK(b.systolic_peaks.empty());
  CHECK(b.diastolic_troughs.empty());

  auto sig = beats(150, 80, 120.0, 9.0);
  const std::size_t third = sig.samples.size() / 3;
  for (std::size_t i = third; i < 2 * third; ++i)
    sig.samples[i] = std::numeric_limits<double>::quiet_NaN();
  auto b2 = events::detect_beats(sig);
  for (auto p : b2.systolic_peaks) CHECK((p < third || p >= 2 * third));
  for (auto t : b2.diastolic_troughs) CHECK((t < third || t >= 2 * third));
}

TEST_CASE("event reduction report") {
  auto raw = beats(150, 80);

  SECTION("identity cleaning reduces nothing") {
    auto rep = events::event_reduction_report(raw, raw);
    CHECK(rep.pulses_before == rep.pulses_after);
    CHECK(rep.reduced_proportion == 0.0);
  }

  SECTION("masking hypertensive beats reduces the count") {
    Signal cleaned = raw;
    // mask the first half (first 5 beats land there)
    for (std::size_t i = 0; i < cleaned.samples.size() / 2; ++i)
      cleaned.samples[i] = std::numeric_limits<double>::quiet_NaN();
    auto rep = events::event_reduction_report(raw, cleaned);
    CHECK(rep.pulses_before == 10);
    CHECK(rep.pulses_after <= 5);
    CHECK(rep.reduced_proportion >= 0.5);
  }

  SECTION("zero pulses before cleaning is not a division error") {
    auto quiet = beats(120, 70);
    auto rep = events::event_reduction_report(quiet, quiet);
    CHECK(rep.pulses_before == 0);
    CHECK(rep.reduced_proportion == 0.0);
  }

  SECTION("length mismatch is rejected") {
    Signal off = raw;
    off.samples.pop_back();
    CHECK_THROWS_AS(events::event_reduction_report(raw, off), Error);
  }
}

TEST_CASE("masking never increases the pulse count") {
  synth::PatientProfile p;
  p.map_mmhg = 120;  // hypertensive patient: plenty of counted pulses
  p.pulse_pressure_mmhg = 55;
  p.seed = 23;
  auto [sig, onsets] = synth::synth_patient(p, 60.0, 120.0);
  const std::size_t before = events::count_hypertensive_pulses(sig);
  REQUIRE(before > 0);

  nn::Rng rng(99);
  for (int trial = 0; trial < 12; ++trial) {
    Signal masked = sig;
    std::size_t last = before;
    for (int windows = 0; windows < 4; ++windows) {
      const auto start = static_cast<std::size_t>(rng.uniform(0.0, 50.0) * 120.0);
      const auto len = static_cast<std::size_t>(rng.uniform(1.0, 8.0) * 120.0);
      for (std::size_t i = start; i < std::min(start + len, masked.samples.size()); ++i)
        masked.samples[i] = std::numeric_limits<double>::quiet_NaN();
      const std::size_t now = events::count_hypertensive_pulses(masked);
      REQUIRE(now <= last);
      last = now;
    }
  }
}
