#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "genclean/eval.hpp"
#include "genclean/heuristics.hpp"
#include "genclean/synth.hpp"

using namespace genclean;
using Catch::Approx;

TEST_CASE("synth_patient is deterministic") {
  synth::PatientProfile p;
  p.seed = 123;
  auto [a, onsets_a] = synth::synth_patient(p, 20.0, 120.0);
  auto [b, onsets_b] = synth::synth_patient(p, 20.0, 120.0);
  REQUIRE(a.samples == b.samples);
  REQUIRE(onsets_a == onsets_b);
}

TEST_CASE("synth_patient mean tracks the MAP baseline") {
  synth::PatientProfile p;
  p.map_mmhg = 90;
  p.pulse_pressure_mmhg = 45;
  p.drift_scale = 0;
  p.seed = 3;
  auto [sig, onsets] = synth::synth_patient(p, 60.0, 120.0);
  double mean = 0;
  for (double v : sig.samples) mean += v;
  mean /= double(sig.samples.size());
  CHECK(mean == Approx(90.0).margin(2.0));
}

TEST_CASE("synth_patient beat count at 60 bpm") {
  synth::PatientProfile p;
  p.hr_bpm = 60;
  p.seed = 8;
  auto [sig, onsets] = synth::synth_patient(p, 60.0, 120.0);
  CHECK(onsets.size() >= 58);
  CHECK(onsets.size() <= 62);
}

TEST_CASE("synth_patient validates arguments") {
  synth::PatientProfile p;
  CHECK_THROWS_AS(synth::synth_patient(p, 5.0, 120.0), Error);
  CHECK_THROWS_AS(synth::synth_patient(p, 20.0, 20.0), Error);
  p.hr_bpm = 500;
  CHECK_THROWS_AS(synth::synth_patient(p, 20.0, 120.0), Error);
}

TEST_CASE("flush raises the affected region only") {
  synth::PatientProfile p;
  p.seed = 10;
  auto [sig, onsets] = synth::synth_patient(p, 30.0, 120.0);
  synth::ArtifactSpec flush{synth::ArtifactKind::Flush, 12.0, 1.0, 0.0};
  auto [out, mask] = synth::inject_artifacts(sig, {flush}, 77);

  double region_max = -1e9;
  for (std::size_t i = 0; i < out.samples.size(); ++i) {
    if (mask.artifact[i])
      region_max = std::max(region_max, out.samples[i]);
    else
      REQUIRE(out.samples[i] == sig.samples[i]);
  }
  CHECK(region_max >= 280.0);
  CHECK(mask.count() == std::size_t(120));
}

TEST_CASE("damping squeezes regional peak to peak below 15") {
  synth::PatientProfile p;
  p.seed = 11;
  p.pulse_pressure_mmhg = 55;
  auto [sig, onsets] = synth::synth_patient(p, 30.0, 120.0);
  synth::ArtifactSpec damp{synth::ArtifactKind::Damping, 10.0, 3.0, 0.0};
  auto [out, mask] = synth::inject_artifacts(sig, {damp}, 5);

  double lo = 1e9, hi = -1e9;
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    if (mask.artifact[i]) {
      lo = std::min(lo, out.samples[i]);
      hi = std::max(hi, out.samples[i]);
    }
  CHECK(hi - lo < 15.0);
}

TEST_CASE("empty artifact list is the identity") {
  synth::PatientProfile p;
  p.seed = 12;
  auto [sig, onsets] = synth::synth_patient(p, 10.0, 120.0);
  auto [out, mask] = synth::inject_artifacts(sig, {}, 1);
  CHECK(out.samples == sig.samples);
  CHECK(mask.count() == 0);
}

TEST_CASE("artifact placement is validated") {
  synth::PatientProfile p;
  p.seed = 13;
  auto [sig, onsets] = synth::synth_patient(p, 10.0, 120.0);
  synth::ArtifactSpec outside{synth::ArtifactKind::Dropout, 8.0, 5.0, 0.0};
  CHECK_THROWS_AS(synth::inject_artifacts(sig, {outside}, 1), Error);
}

TEST_CASE("artifact kinds behave as specified") {
  synth::PatientProfile p;
  p.seed = 14;
  auto [sig, onsets] = synth::synth_patient(p, 40.0, 120.0);

  SECTION("blood draw drops to near zero") {
    auto [out, mask] = synth::inject_artifacts(
        sig, {{synth::ArtifactKind::BloodDraw, 5.0, 2.0, 4.0}}, 2);
    for (std::size_t i = 600; i < 840; ++i) CHECK(std::abs(out.samples[i] - 4.0) < 3.0);
  }
  SECTION("dropout holds the previous value") {
    auto [out, mask] = synth::inject_artifacts(sig, {{synth::ArtifactKind::Dropout, 5.0, 2.0, 0.0}},
                                               2);
    const double hold = sig.samples[599];
    for (std::size_t i = 600; i < 840; ++i) REQUIRE(out.samples[i] == hold);
  }
  SECTION("step offset shifts by the magnitude") {
    auto [out, mask] = synth::inject_artifacts(
        sig, {{synth::ArtifactKind::StepOffset, 5.0, 2.0, 40.0}}, 2);
    for (std::size_t i = 600; i < 840; ++i) REQUIRE(out.samples[i] == Approx(sig.samples[i] + 40));
  }
  SECTION("noise burst adds large variance") {
    auto [out, mask] = synth::inject_artifacts(
        sig, {{synth::ArtifactKind::NoiseBurst, 5.0, 3.0, 25.0}}, 2);
    double var = 0;
    for (std::size_t i = 600; i < 960; ++i) {
      const double d = out.samples[i] - sig.samples[i];
      var += d * d;
    }
    var /= 360.0;
    CHECK(std::sqrt(var) == Approx(25.0).margin(5.0));
  }
}

TEST_CASE("benchmark counts, balance, and labels") {
  auto bench = synth::make_benchmark(10, 20, 10, 100, 0.0, 42);
  REQUIRE(bench.patients.size() == 10);

  std::size_t test_total = 0, test_artifacts = 0;
  for (const auto& pd : bench.patients) {
    CHECK(pd.train.segments.size() == 20);
    CHECK(pd.validation.segments.size() == 10);
    CHECK(pd.test.segments.size() == 100);
    for (const auto& seg : pd.test.segments) {
      ++test_total;
      test_artifacts += seg.label == Label::Artifact;
    }
  }
  CHECK(test_total == 1000);
  CHECK(test_artifacts == 500);

  // labels agree with the mask coverage rule, by brute force
  for (const auto& pd : bench.patients)
    for (const auto& seg : pd.test.segments) {
      std::size_t covered = 0;
      for (std::size_t i = seg.start_index; i < seg.start_index + seg.values.size(); ++i)
        covered += pd.test.mask.artifact[i] != 0;
      const bool should =
          double(covered) >= synth::kArtifactCoverage * double(seg.values.size());
      REQUIRE((seg.label == Label::Artifact) == should);
    }
}

TEST_CASE("artifact-free benchmark passes heuristics everywhere") {
  auto bench = synth::make_benchmark(5, 10, 4, 4, 0.0, 7);
  for (const auto& pd : bench.patients)
    for (const auto& seg : pd.train.segments)
      REQUIRE(heuristics::apply_heuristics(seg).passed);
}

TEST_CASE("benchmark generation is deterministic") {
  auto a = synth::make_benchmark(3, 5, 4, 4, 0.3, 99);
  auto b = synth::make_benchmark(3, 5, 4, 4, 0.3, 99);
  for (std::size_t p = 0; p < a.patients.size(); ++p) {
    REQUIRE(a.patients[p].train.signal.samples == b.patients[p].train.signal.samples);
    REQUIRE(a.patients[p].test.mask.artifact == b.patients[p].test.mask.artifact);
    for (std::size_t s = 0; s < a.patients[p].test.segments.size(); ++s)
      REQUIRE(a.patients[p].test.segments[s].label == b.patients[p].test.segments[s].label);
  }
}

TEST_CASE("patients with separated MAP differ by the KS test") {
  synth::PatientProfile a, b;
  a.map_mmhg = 75;
  a.seed = 21;
  b.map_mmhg = 95;
  b.seed = 22;
  auto [sig_a, on_a] = synth::synth_patient(a, 60.0, 120.0);
  auto [sig_b, on_b] = synth::synth_patient(b, 60.0, 120.0);
  auto ks = eval::ks_two_sample(sig_a.samples, sig_b.samples);
  CHECK(ks.p < 0.05);
}
