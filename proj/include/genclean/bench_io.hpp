#pragma once
// Benchmark directory layout: per-patient signals and ground-truth masks as
// raw_f32 files plus a manifest.json with profiles, artifact windows, and
// per-segment labels.

#include <filesystem>
#include <fstream>
#include <string>

#include "genclean/signal.hpp"
#include "genclean/synth.hpp"
#include "json.hpp"

namespace genclean::bench_io {

namespace detail {

inline nlohmann::json profile_to_json(const synth::PatientProfile& p) {
  return {{"map_mmhg", p.map_mmhg},
          {"pulse_pressure_mmhg", p.pulse_pressure_mmhg},
          {"hr_bpm", p.hr_bpm},
          {"notch_depth", p.notch_depth},
          {"resp_rate_hz", p.resp_rate_hz},
          {"drift_scale", p.drift_scale},
          {"seed", p.seed}};
}

inline synth::PatientProfile profile_from_json(const nlohmann::json& j) {
  synth::PatientProfile p;
  p.map_mmhg = j.at("map_mmhg").get<double>();
  p.pulse_pressure_mmhg = j.at("pulse_pressure_mmhg").get<double>();
  p.hr_bpm = j.at("hr_bpm").get<double>();
  p.notch_depth = j.at("notch_depth").get<double>();
  p.resp_rate_hz = j.at("resp_rate_hz").get<double>();
  p.drift_scale = j.at("drift_scale").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

inline nlohmann::json split_to_json(const synth::SplitData& split, const std::string& stem,
                                    const std::filesystem::path& dir) {
  nlohmann::json j;
  if (split.signal.samples.empty()) return j;
  const std::string sig_file = stem + ".f32";
  const std::string mask_file = stem + "_mask.f32";
  write_signal(split.signal, (dir / sig_file).string(), SignalFormat::RawF32);

  Signal mask_sig;
  mask_sig.fs_hz = split.signal.fs_hz;
  mask_sig.modality = split.signal.modality;
  mask_sig.patient_id = split.signal.patient_id;
  for (auto m : split.mask.artifact) mask_sig.samples.push_back(m ? 1.0 : 0.0);
  write_signal(mask_sig, (dir / mask_file).string(), SignalFormat::RawF32);

  j["signal"] = sig_file;
  j["mask"] = mask_file;
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : split.segments)
    segs.push_back({{"start_index", seg.start_index},
                    {"label", seg.label == Label::Artifact ? "artifact" : "clean"}});
  j["segments"] = segs;
  nlohmann::json arts = nlohmann::json::array();
  for (const auto& a : split.artifacts)
    arts.push_back({{"kind", synth::to_string(a.kind)},
                    {"start_s", a.start_s},
                    {"duration_s", a.duration_s},
                    {"magnitude", a.magnitude}});
  j["artifacts"] = arts;
  return j;
}

inline synth::SplitData split_from_json(const nlohmann::json& j,
                                        const std::filesystem::path& dir) {
  synth::SplitData split;
  if (j.is_null() || !j.contains("signal")) return split;
  split.signal = read_signal((dir / j.at("signal").get<std::string>()).string(),
                             SignalFormat::RawF32);
  auto mask_sig = read_signal((dir / j.at("mask").get<std::string>()).string(),
                              SignalFormat::RawF32);
  for (double v : mask_sig.samples) split.mask.artifact.push_back(v != 0.0);

  split.segments = segment_signal(split.signal, 10.0, 10.0);
  const auto& segs = j.at("segments");
  if (segs.size() != split.segments.size())
    throw Error("manifest: segment count mismatch for " + j.at("signal").get<std::string>());
  for (std::size_t i = 0; i < split.segments.size(); ++i) {
    const auto& js = segs[i];
    if (js.at("start_index").get<std::size_t>() != split.segments[i].start_index)
      throw Error("manifest: segment offsets disagree with the stored signal");
    split.segments[i].label =
        js.at("label").get<std::string>() == "artifact" ? Label::Artifact : Label::Clean;
  }
  return split;
}

}  // namespace detail

inline void save_benchmark(const synth::Benchmark& bench, const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  nlohmann::json manifest{{"fs_hz", bench.fs_hz}, {"seed", bench.seed}};
  nlohmann::json patients = nlohmann::json::array();
  for (const auto& p : bench.patients) {
    nlohmann::json jp{{"id", p.id}, {"profile", detail::profile_to_json(p.profile)}};
    jp["splits"] = {{"train", detail::split_to_json(p.train, p.id + "_train", dir)},
                    {"validation", detail::split_to_json(p.validation, p.id + "_validation", dir)},
                    {"test", detail::split_to_json(p.test, p.id + "_test", dir)}};
    patients.push_back(std::move(jp));
  }
  manifest["patients"] = std::move(patients);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write manifest in \"" + out_dir + "\"");
  out << manifest.dump(2) << '\n';
}

inline synth::Benchmark load_benchmark(const std::string& in_dir) {
  const std::filesystem::path dir(in_dir);
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("no manifest.json in \"" + in_dir + "\"");
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    throw Error("manifest.json: " + std::string(e.what()));
  }
  synth::Benchmark bench;
  bench.fs_hz = manifest.at("fs_hz").get<double>();
  bench.seed = manifest.at("seed").get<std::uint64_t>();
  for (const auto& jp : manifest.at("patients")) {
    synth::PatientData p;
    p.id = jp.at("id").get<std::string>();
    p.profile = detail::profile_from_json(jp.at("profile"));
    const auto& splits = jp.at("splits");
    p.train = detail::split_from_json(splits.at("train"), dir);
    p.validation = detail::split_from_json(splits.at("validation"), dir);
    p.test = detail::split_from_json(splits.at("test"), dir);
    bench.patients.push_back(std::move(p));
  }
  return bench;
}

}  // namespace genclean::bench_io
