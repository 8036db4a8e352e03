#pragma once
// Core waveform and segment types, segmentation, and signal file I/O.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace genclean {

static_assert(std::endian::native == std::endian::little,
              "raw_f32 files are little-endian; big-endian hosts are unsupported");

/// Data or validation error surfaced to the CLI as exit code 2.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Modality { Abp, Ppg };
enum class Label { Clean, Artifact };
enum class Split { Train, Validation, Test };

inline std::string to_string(Modality m) { return m == Modality::Abp ? "abp" : "ppg"; }
inline Modality modality_from_string(const std::string& s) {
  if (s == "abp") return Modality::Abp;
  if (s == "ppg") return Modality::Ppg;
  throw Error("unknown modality \"" + s + "\" (expected \"abp\" or \"ppg\")");
}

/// A uniformly sampled single-channel waveform. NaN samples only appear in
/// cleaned outputs; raw inputs to processing stages must be NaN-free.
struct Signal {
  std::vector<double> samples;
  double fs_hz = 0.0;
  Modality modality = Modality::Abp;
  std::string patient_id;

  bool has_nan() const {
    for (double v : samples)
      if (std::isnan(v)) return true;
    return false;
  }
  double duration_s() const { return fs_hz > 0 ? static_cast<double>(samples.size()) / fs_hz : 0.0; }
};

/// A fixed-duration window of a Signal; the unit of scoring and labeling.
struct Segment {
  std::vector<double> values;
  double fs_hz = 0.0;
  double duration_s = 10.0;
  Modality modality = Modality::Abp;
  std::string patient_id;
  std::optional<Label> label;
  std::size_t start_index = 0;
};

struct LabeledDataset {
  struct Entry {
    Segment segment;
    Split split = Split::Train;
  };
  std::vector<Entry> entries;

  std::vector<const Segment*> split_view(Split s) const {
    std::vector<const Segment*> out;
    for (const auto& e : entries)
      if (e.split == s) out.push_back(&e.segment);
    return out;
  }
  /// Every test segment must carry a label; train/validation need none.
  void validate() const {
    for (const auto& e : entries)
      if (e.split == Split::Test && !e.segment.label)
        throw Error("test segment without label (patient " + e.segment.patient_id + ")");
  }
};

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

/// Cuts a signal into consecutive fixed-size windows. Trailing samples that do
/// not fill a whole window are dropped. The input must be NaN-free.
inline std::vector<Segment> segment_signal(const Signal& signal, double window_s = 10.0,
                                           double stride_s = 10.0) {
  if (signal.fs_hz <= 0) throw Error("segment_signal: fs_hz must be positive");
  if (window_s <= 0 || stride_s <= 0) throw Error("segment_signal: window/stride must be positive");
  if (signal.has_nan()) throw Error("segment_signal: input signal contains NaN");

  const auto w = static_cast<std::size_t>(std::llround(window_s * signal.fs_hz));
  const auto s = static_cast<std::size_t>(std::llround(stride_s * signal.fs_hz));
  if (w == 0 || s == 0) throw Error("segment_signal: window/stride round to zero samples");

  std::vector<Segment> out;
  const std::size_t n = signal.samples.size();
  for (std::size_t start = 0; start + w <= n; start += s) {
    Segment seg;
    seg.values.assign(signal.samples.begin() + start, signal.samples.begin() + start + w);
    seg.fs_hz = signal.fs_hz;
    seg.duration_s = window_s;
    seg.modality = signal.modality;
    seg.patient_id = signal.patient_id;
    seg.start_index = start;
    out.push_back(std::move(seg));
  }
  return out;
}

// ---------------------------------------------------------------------------
// File I/O
//
// CSV: header line "t_seconds,value", one sample per row, uniform time grid.
// raw_f32: <name>.f32 little-endian 32-bit floats with a <name>.json sidecar
// {"fs_hz", "modality", "patient_id", "n"}.
// ---------------------------------------------------------------------------

enum class SignalFormat { Csv, RawF32 };

namespace detail {

inline std::string sidecar_path(const std::string& path) {
  std::filesystem::path p(path);
  p.replace_extension(".json");
  return p.string();
}

inline double parse_double(const std::string& tok, std::size_t line_no, const char* field) {
  if (tok == "NaN" || tok == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error("csv parse error at line " + std::to_string(line_no) + ": bad " + field + " \"" +
                tok + "\"");
  }
}

}  // namespace detail

inline Signal read_signal(const std::string& path, SignalFormat format,
                          Modality default_modality = Modality::Abp,
                          const std::string& default_patient = "") {
  Signal sig;
  sig.modality = default_modality;
  sig.patient_id = default_patient;

  if (format == SignalFormat::Csv) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open \"" + path + "\"");
    std::string line;
    if (!std::getline(in, line)) throw Error("csv \"" + path + "\": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t_seconds,value")
      throw Error("csv \"" + path + "\": malformed header \"" + line +
                  "\" (expected \"t_seconds,value\")");

    std::vector<double> times;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto comma = line.find(',');
      if (comma == std::string::npos)
        throw Error("csv parse error at line " + std::to_string(line_no) + ": missing comma");
      double t = detail::parse_double(line.substr(0, comma), line_no, "time");
      double v = detail::parse_double(line.substr(comma + 1), line_no, "value");
      if (std::isnan(t))
        throw Error("csv parse error at line " + std::to_string(line_no) + ": NaN time");
      if (!times.empty() && t <= times.back())
        throw Error("csv \"" + path + "\": non-monotone time column at line " +
                    std::to_string(line_no));
      times.push_back(t);
      sig.samples.push_back(v);
    }
    if (times.size() < 2) throw Error("csv \"" + path + "\": need at least 2 rows to infer fs_hz");

    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    for (std::size_t i = 1; i < times.size(); ++i) {
      double d = times[i] - times[i - 1];
      if (std::abs(d - dt) > 1e-6 * dt)
        throw Error("csv \"" + path + "\": non-uniform sampling at line " + std::to_string(i + 2) +
                    " (dt " + std::to_string(d) + " vs " + std::to_string(dt) + ")");
    }
    sig.fs_hz = 1.0 / dt;
    return sig;
  }

  // raw_f32
  const std::string side = detail::sidecar_path(path);
  std::ifstream meta(side);
  if (!meta) throw Error("raw_f32 \"" + path + "\": missing sidecar \"" + side + "\"");
  nlohmann::json j;
  try {
    meta >> j;
  } catch (const std::exception& e) {
    throw Error("raw_f32 sidecar \"" + side + "\": " + e.what());
  }
  for (const char* key : {"fs_hz", "modality", "patient_id", "n"})
    if (!j.contains(key)) throw Error("raw_f32 sidecar \"" + side + "\": missing field \"" + std::string(key) + "\"");
  sig.fs_hz = j.at("fs_hz").get<double>();
  sig.modality = modality_from_string(j.at("modality").get<std::string>());
  sig.patient_id = j.at("patient_id").get<std::string>();
  const auto n = j.at("n").get<std::size_t>();
  if (sig.fs_hz <= 0) throw Error("raw_f32 sidecar \"" + side + "\": fs_hz must be positive");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open \"" + path + "\"");
  std::vector<float> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float))
    throw Error("raw_f32 \"" + path + "\": truncated (expected " + std::to_string(n) + " samples)");
  sig.samples.assign(raw.begin(), raw.end());
  return sig;
}

inline void write_signal(const Signal& signal, const std::string& path, SignalFormat format) {
  if (signal.samples.empty()) throw Error("write_signal: empty signal");
  if (signal.fs_hz <= 0) throw Error("write_signal: fs_hz must be positive");

  if (format == SignalFormat::Csv) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write \"" + path + "\"");
    out << "t_seconds,value\n";
    char buf[64];
    for (std::size_t i = 0; i < signal.samples.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.12g", static_cast<double>(i) / signal.fs_hz);
      out << buf << ',';
      double v = signal.samples[i];
      if (std::isnan(v)) {
        out << "NaN";
      } else {
        std::snprintf(buf, sizeof(buf), "%.9g", v);
        out << buf;
      }
      out << '\n';
    }
    if (!out) throw Error("write failed for \"" + path + "\"");
    return;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write \"" + path + "\"");
  std::vector<float> raw(signal.samples.begin(), signal.samples.end());
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!out) throw Error("write failed for \"" + path + "\"");

  nlohmann::json j{{"fs_hz", signal.fs_hz},
                   {"modality", to_string(signal.modality)},
                   {"patient_id", signal.patient_id},
                   {"n", signal.samples.size()}};
  std::ofstream meta(detail::sidecar_path(path));
  if (!meta) throw Error("cannot write sidecar for \"" + path + "\"");
  meta << j.dump(2) << '\n';
}

}  // namespace genclean
