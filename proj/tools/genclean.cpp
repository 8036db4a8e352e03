// genclean: label-free artifact cleaning for pulsatile waveforms.
//
// Subcommands: synth, train, calibrate, clean, eval, events, matrix, stream,
// freq-sweep, latent-sweep, dump-latent. Exit codes: 0 success, 1 usage
// error, 2 data/validation error, 3 internal numeric failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "genclean/bench_io.hpp"
#include "genclean/config.hpp"
#include "genclean/detector.hpp"
#include "genclean/eval.hpp"
#include "genclean/events.hpp"
#include "genclean/stream.hpp"
#include "genclean/synth.hpp"
#include "genclean/vae.hpp"
#include "json.hpp"

namespace {

using namespace genclean;

struct NumericFailure : std::runtime_error {
  explicit NumericFailure(const std::string& msg) : std::runtime_error(msg) {}
};

SignalFormat infer_format(const std::string& path) {
  return path.size() >= 4 && path.substr(path.size() - 4) == ".csv" ? SignalFormat::Csv
                                                                    : SignalFormat::RawF32;
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write \"" + path + "\"");
  out << j.dump(2) << '\n';
}

void gather_splits(const synth::Benchmark& bench, std::vector<Segment>& train,
                   std::vector<Segment>& val, std::vector<Segment>& test) {
  for (const auto& p : bench.patients) {
    train.insert(train.end(), p.train.segments.begin(), p.train.segments.end());
    val.insert(val.end(), p.validation.segments.begin(), p.validation.segments.end());
    test.insert(test.end(), p.test.segments.begin(), p.test.segments.end());
  }
}

std::vector<Segment> split_segments(const synth::Benchmark& bench, const std::string& split) {
  std::vector<Segment> out;
  for (const auto& p : bench.patients) {
    const auto& s = split == "train" ? p.train : (split == "validation" ? p.validation : p.test);
    out.insert(out.end(), s.segments.begin(), s.segments.end());
  }
  return out;
}

/// Builds a calibrated detector from a checkpoint. Score semantics bound to
/// the model (target rate, eps, metric, threshold) come from the checkpoint;
/// toggles and heuristic bounds come from the run configuration.
detector::CalibratedDetector detector_from_checkpoint(const std::string& path,
                                                      const config::RunConfig& cfg,
                                                      bool require_threshold = true) {
  auto [model, meta] = vae::load_checkpoint(path);
  detector::CalibratedDetector det;
  det.model = std::move(model);
  det.config = cfg.detector_config();
  det.config.fs_target_hz = meta.fs_target_hz;
  det.config.eps = meta.eps;
  det.config.score_metric = meta.score_metric;
  if (meta.threshold) {
    det.threshold = *meta.threshold;
  } else if (require_threshold) {
    throw Error("checkpoint \"" + path + "\" has no calibrated threshold; run `genclean "
                "calibrate` first");
  }
  return det;
}

vae::CheckpointMeta meta_from(const detector::CalibratedDetector& det) {
  vae::CheckpointMeta meta;
  meta.fs_target_hz = det.config.fs_target_hz;
  meta.eps = det.config.eps;
  meta.score_metric = det.config.score_metric;
  meta.threshold = det.threshold;
  return meta;
}

nlohmann::json report_to_json(const vae::TrainReport& rep) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : rep.epochs)
    epochs.push_back({{"train_total", e.train_total},
                      {"train_recon", e.train_recon},
                      {"train_kl", e.train_kl},
                      {"val_total", e.val_total},
                      {"val_recon", e.val_recon},
                      {"val_kl", e.val_kl}});
  return {{"epochs", epochs},
          {"best_epoch", rep.best_epoch},
          {"stop_reason", rep.stop_reason == vae::StopReason::EarlyStop ? "early_stop"
                                                                        : "max_epochs"},
          {"wall_seconds", rep.wall_seconds},
          {"best_val_total", rep.best_val_total},
          {"best_val_recon", rep.best_val_recon},
          {"baseline_recon", rep.baseline_recon},
          {"collapse_flag", rep.collapse_flag}};
}

nlohmann::json metrics_to_json(const eval::EvalOutcome& o) {
  nlohmann::json j{{"accuracy", o.summary.accuracy},
                   {"auc", o.auc},
                   {"confusion",
                    {{"tp", o.confusion.tp},
                     {"fp", o.confusion.fp},
                     {"tn", o.confusion.tn},
                     {"fn", o.confusion.fn}}}};
  if (o.summary.sensitivity) j["sensitivity"] = *o.summary.sensitivity;
  if (o.summary.specificity) j["specificity"] = *o.summary.specificity;
  if (o.summary.f1) j["f1"] = *o.summary.f1;
  return j;
}

void write_verdicts_jsonl(const std::vector<detector::SegmentVerdict>& verdicts,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write \"" + path + "\"");
  for (const auto& v : verdicts) out << detector::verdict_to_json(v).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_synth(const config::RunConfig& cfg, const std::string& out_dir) {
  auto bench = synth::make_benchmark(cfg.synth.patients, cfg.synth.train_per_patient,
                                     cfg.synth.val_per_patient, cfg.synth.test_per_patient,
                                     cfg.synth.artifact_fraction, cfg.synth.seed, cfg.synth.fs_hz);
  bench_io::save_benchmark(bench, out_dir);
  std::size_t test_total = 0, test_art = 0;
  for (const auto& p : bench.patients)
    for (const auto& s : p.test.segments) {
      ++test_total;
      test_art += s.label == Label::Artifact;
    }
  std::printf("synth: %zu patients -> %s (test %zu segments, %zu artifact)\n",
              bench.patients.size(), out_dir.c_str(), test_total, test_art);
  return 0;
}

int cmd_train(const config::RunConfig& cfg, const std::string& data_dir, const std::string& out,
              const std::string& report_path, bool strict) {
  auto bench = bench_io::load_benchmark(data_dir);
  std::vector<Segment> train, val, test;
  gather_splits(bench, train, val, test);
  if (train.empty() || val.empty()) throw Error("train: dataset has empty train/validation split");

  auto trained = detector::train_detector(train, val, cfg.arch, cfg.train, cfg.detector_config());
  vae::save_checkpoint(trained.detector.model, meta_from(trained.detector), out);

  std::printf("train: %zu segments (%zu dropped by heuristics), %zu epochs, best %zu (%s), "
              "val recon %.0f vs baseline %.0f, threshold %.6g, %.0f s\n",
              trained.train_used, trained.train_dropped, trained.report.epochs.size(),
              trained.report.best_epoch,
              trained.report.stop_reason == vae::StopReason::EarlyStop ? "early stop"
                                                                       : "max epochs",
              trained.report.best_val_recon, trained.report.baseline_recon,
              trained.detector.threshold, trained.report.wall_seconds);
  if (trained.report.collapse_flag)
    std::printf("train: WARNING posterior collapse flagged (reconstruction no better than the "
                "constant-mean predictor)\n");
  if (!report_path.empty()) write_json_file(report_to_json(trained.report), report_path);
  std::printf("train: checkpoint written to %s\n", out.c_str());
  if (strict && trained.report.collapse_flag)
    throw NumericFailure("train: posterior collapse under --strict");
  return 0;
}

int cmd_calibrate(const config::RunConfig& cfg, const std::string& data_dir,
                  const std::string& ckpt, const std::string& out) {
  auto det = detector_from_checkpoint(ckpt, cfg, /*require_threshold=*/false);
  det.config.threshold_percentile = cfg.det.threshold_percentile;
  auto bench = bench_io::load_benchmark(data_dir);
  std::vector<Segment> val_kept;
  for (const auto& p : bench.patients)
    for (const auto& seg : p.validation.segments)
      if (!det.config.enable_heuristics ||
          heuristics::apply_heuristics(seg, det.config.heuristic_cfg).passed)
        val_kept.push_back(seg);
  det.threshold = detector::calibrate_threshold(det.model, det.config, val_kept);
  const std::string target = out.empty() ? ckpt : out;
  vae::save_checkpoint(det.model, meta_from(det), target);
  std::printf("calibrate: threshold %.6g at percentile %.1f over %zu segments -> %s\n",
              det.threshold, det.config.threshold_percentile, val_kept.size(), target.c_str());
  return 0;
}

int cmd_clean(const config::RunConfig& cfg, const std::string& input, const std::string& ckpt,
              const std::string& out, const std::string& verdicts_path,
              const std::string& decoded_path) {
  auto det = detector_from_checkpoint(ckpt, cfg);
  auto sig = read_signal(input, infer_format(input));
  auto res = detector::clean_signal(det, sig);
  write_signal(res.cleaned, out, infer_format(out));
  if (!verdicts_path.empty()) write_verdicts_jsonl(res.verdicts, verdicts_path);
  if (!decoded_path.empty()) {
    Signal decoded;
    decoded.fs_hz = sig.fs_hz;
    decoded.modality = sig.modality;
    decoded.patient_id = sig.patient_id;
    for (const auto& v : res.verdicts)
      decoded.samples.insert(decoded.samples.end(), v.decoded.begin(), v.decoded.end());
    write_signal(decoded, decoded_path, SignalFormat::RawF32);
  }
  std::size_t artifacts = 0;
  for (const auto& v : res.verdicts) artifacts += v.is_artifact;
  std::printf("clean: %zu windows, %zu marked artifact (NaN), %zu trailing samples passed "
              "through unjudged -> %s\n",
              res.verdicts.size(), artifacts, res.trailing_samples, out.c_str());
  return 0;
}

int cmd_eval(const config::RunConfig& cfg, const std::string& data_dir, const std::string& ckpt,
             const std::string& split, const std::string& out) {
  auto det = detector_from_checkpoint(ckpt, cfg);
  auto bench = bench_io::load_benchmark(data_dir);
  auto segments = split_segments(bench, split);
  if (segments.empty()) throw Error("eval: split \"" + split + "\" is empty");
  auto outcome = eval::evaluate_detector(det, segments);
  auto j = metrics_to_json(outcome);
  std::printf("eval[%s]: acc %.4f sens %.4f spec %.4f f1 %.4f auc %.4f (tp %zu fp %zu tn %zu "
              "fn %zu)\n",
              split.c_str(), outcome.summary.accuracy, outcome.summary.sensitivity.value_or(-1),
              outcome.summary.specificity.value_or(-1), outcome.summary.f1.value_or(-1),
              outcome.auc, outcome.confusion.tp, outcome.confusion.fp, outcome.confusion.tn,
              outcome.confusion.fn);
  if (!out.empty()) write_json_file(j, out);
  return 0;
}

int cmd_events(const config::RunConfig& cfg, const std::string& raw_path,
               const std::string& cleaned_path, const std::string& out) {
  auto raw = read_signal(raw_path, infer_format(raw_path));
  auto cleaned = read_signal(cleaned_path, infer_format(cleaned_path));
  auto rep = events::event_reduction_report(raw, cleaned, cfg.event_limits());
  nlohmann::json j{{"pulses_before", rep.pulses_before},
                   {"pulses_after", rep.pulses_after},
                   {"reduced_proportion", rep.reduced_proportion},
                   {"beats_analyzed_before", rep.beats_analyzed_before},
                   {"beats_analyzed_after", rep.beats_analyzed_after}};
  std::printf("events: %zu -> %zu hypertensive pulses (reduced proportion %.3f)\n",
              rep.pulses_before, rep.pulses_after, rep.reduced_proportion);
  if (!out.empty()) write_json_file(j, out);
  return 0;
}

int cmd_matrix(const config::RunConfig& cfg, const std::string& data_dir, const std::string& ckpt,
               const std::string& out_json, const std::string& out_csv) {
  auto pooled = detector_from_checkpoint(ckpt, cfg);
  auto bench = bench_io::load_benchmark(data_dir);
  auto m = eval::generalisation_matrix(bench, pooled, cfg.arch, cfg.train, cfg.detector_config());

  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& c : m.cells[i]) row.push_back({{"accuracy", c.accuracy}, {"f1", c.f1}});
    cells.push_back(std::move(row));
  }
  nlohmann::json j{{"patients", m.patient_ids},
                   {"cells", cells},
                   {"mean_off_diagonal_accuracy", m.mean_off_diagonal_accuracy()},
                   {"mean_pooled_accuracy", m.mean_pooled_accuracy()}};
  if (!out_json.empty()) write_json_file(j, out_json);

  if (!out_csv.empty()) {
    std::ofstream csv(out_csv);
    if (!csv) throw Error("cannot write \"" + out_csv + "\"");
    csv << "train\\test";
    for (const auto& id : m.patient_ids) csv << ',' << id;
    csv << ",pooled\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
      csv << m.patient_ids[i];
      for (const auto& c : m.cells[i]) csv << ',' << c.accuracy;
      csv << '\n';
    }
  }
  std::printf("matrix: %zux%zu, off-diagonal mean accuracy %.4f, pooled column mean %.4f\n",
              m.rows(), m.cols(), m.mean_off_diagonal_accuracy(), m.mean_pooled_accuracy());
  return 0;
}

int cmd_stream(const config::RunConfig& cfg, const std::string& input, const std::string& ckpt,
               const std::string& pace, const std::string& out, const std::string& stats_path) {
  auto det = detector_from_checkpoint(ckpt, cfg);
  auto sig = read_signal(input, infer_format(input));
  auto res = stream::run_stream(
      sig, det, pace == "realtime" ? stream::Pace::Realtime : stream::Pace::Unpaced);
  if (!out.empty()) write_verdicts_jsonl(res.verdicts, out);
  nlohmann::json j{{"segments_processed", res.stats.segments_processed},
                   {"latency_ns",
                    {{"p50", res.stats.latency_p50_ns},
                     {"p95", res.stats.latency_p95_ns},
                     {"max", res.stats.latency_max_ns}}},
                   {"realtime_factor", res.stats.realtime_factor},
                   {"flops_per_segment", res.stats.flops_per_segment},
                   {"peak_rss_delta_bytes", res.stats.peak_rss_delta_bytes}};
  if (!stats_path.empty()) write_json_file(j, stats_path);
  std::printf("stream: %zu segments, realtime factor %.1fx, latency p50 %.2f ms p95 %.2f ms "
              "max %.2f ms\n",
              res.stats.segments_processed, res.stats.realtime_factor,
              double(res.stats.latency_p50_ns) / 1e6, double(res.stats.latency_p95_ns) / 1e6,
              double(res.stats.latency_max_ns) / 1e6);
  return 0;
}

int cmd_freq_sweep(const config::RunConfig& cfg, const std::string& data_dir,
                   const std::string& ckpt, const std::vector<double>& rates,
                   const std::string& out) {
  auto det = detector_from_checkpoint(ckpt, cfg);
  auto bench = bench_io::load_benchmark(data_dir);
  auto test = split_segments(bench, "test");
  auto sweep = stream::frequency_sweep(test, rates, det);
  nlohmann::json points = nlohmann::json::array();
  for (const auto& pt : sweep) {
    points.push_back({{"fs_hz", pt.fs_hz},
                      {"accuracy", pt.accuracy},
                      {"mean_segment_ms", pt.mean_segment_ns / 1e6},
                      {"segments", pt.segments}});
    std::printf("freq-sweep: %6.1f Hz  accuracy %.4f  mean %.2f ms/segment\n", pt.fs_hz,
                pt.accuracy, pt.mean_segment_ns / 1e6);
  }
  if (!out.empty()) write_json_file(nlohmann::json{{"points", points}}, out);
  return 0;
}

int cmd_latent_sweep(const config::RunConfig& cfg, const std::string& data_dir,
                     const std::vector<std::size_t>& dims, const std::vector<std::string>& metrics,
                     const std::string& out) {
  auto bench = bench_io::load_benchmark(data_dir);
  std::vector<Segment> train, val, test;
  gather_splits(bench, train, val, test);
  if (test.empty()) throw Error("latent-sweep: dataset has no test split");

  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t dim : dims) {
    vae::VaeArchitecture arch = cfg.arch;
    arch.latent_dim = dim;
    auto trained = detector::train_detector(train, val, arch, cfg.train, cfg.detector_config());
    for (const auto& metric : metrics) {
      detector::CalibratedDetector det = trained.detector;
      det.config.score_metric = vae::score_metric_from_string(metric);
      std::vector<Segment> val_kept;
      for (const auto& seg : val)
        if (!det.config.enable_heuristics ||
            heuristics::apply_heuristics(seg, det.config.heuristic_cfg).passed)
          val_kept.push_back(seg);
      det.threshold = detector::calibrate_threshold(det.model, det.config, val_kept);
      auto outcome = eval::evaluate_detector(det, test);
      std::printf("latent-sweep: dim %3zu metric %s  f1 %.4f acc %.4f auc %.4f\n", dim,
                  metric.c_str(), outcome.summary.f1.value_or(0), outcome.summary.accuracy,
                  outcome.auc);
      cells.push_back({{"latent_dim", dim},
                       {"metric", metric},
                       {"f1", outcome.summary.f1.value_or(0)},
                       {"accuracy", outcome.summary.accuracy},
                       {"auc", outcome.auc}});
    }
  }
  if (!out.empty()) write_json_file(nlohmann::json{{"cells", cells}}, out);
  return 0;
}

int cmd_dump_latent(const config::RunConfig& cfg, const std::string& data_dir,
                    const std::string& ckpt, const std::string& split, const std::string& out) {
  auto det = detector_from_checkpoint(ckpt, cfg, /*require_threshold=*/false);
  auto bench = bench_io::load_benchmark(data_dir);
  auto segments = split_segments(bench, split);
  std::ofstream o(out);
  if (!o) throw Error("cannot write \"" + out + "\"");
  for (const auto& seg : segments) {
    auto res = detector::score_segment(det.model, det.config, seg);
    nlohmann::json j{{"patient_id", seg.patient_id},
                     {"start_index", seg.start_index},
                     {"score", res.score},
                     {"mu", res.latent.mu},
                     {"logvar", res.latent.logvar}};
    if (seg.label) j["label"] = *seg.label == Label::Artifact ? "artifact" : "clean";
    o << j.dump() << '\n';
  }
  std::printf("dump-latent: %zu segments -> %s\n", segments.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // --config is resolved before option defaults so flags can override it
  config::RunConfig cfg;
  try {
    for (int i = 1; i + 1 < argc; ++i)
      if (std::string(argv[i]) == "--config") cfg = config::load_config(argv[i + 1]);
  } catch (const Error& e) {
    std::cerr << "genclean: " << e.what() << '\n';
    return 2;
  }

  CLI::App app{"GenClean: label-free real-time artifact cleaning for pulsatile waveforms"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON run configuration (flags take precedence)");

  std::string data_dir, out_path, ckpt_path, report_path, verdicts_path, decoded_path;
  std::string input_path, cleaned_path, stats_path, csv_path;
  std::string split = "test", pace = "unpaced";
  bool strict = false;

  auto* synth_cmd = app.add_subcommand("synth", "Generate the synthetic labeled benchmark");
  synth_cmd->add_option("--patients", cfg.synth.patients, "Number of patients")
      ->capture_default_str();
  synth_cmd->add_option("--train", cfg.synth.train_per_patient, "Train segments per patient")
      ->capture_default_str();
  synth_cmd->add_option("--val", cfg.synth.val_per_patient, "Validation segments per patient")
      ->capture_default_str();
  synth_cmd->add_option("--test", cfg.synth.test_per_patient, "Test segments per patient (even)")
      ->capture_default_str();
  synth_cmd
      ->add_option("--artifact-fraction", cfg.synth.artifact_fraction,
                   "Train/validation contamination fraction")
      ->capture_default_str();
  synth_cmd->add_option("--fs", cfg.synth.fs_hz, "Sample rate in Hz")->capture_default_str();
  synth_cmd->add_option("--seed", cfg.synth.seed, "Master seed")->capture_default_str();
  synth_cmd->add_option("--out", out_path, "Output directory")->required();

  auto add_train_flags = [&](CLI::App* c) {
    c->add_option("--lr", cfg.train.lr, "Adam learning rate")->capture_default_str();
    c->add_option("--batch", cfg.train.batch_size, "Batch size")->capture_default_str();
    c->add_option("--epochs", cfg.train.max_epochs, "Maximum epochs")->capture_default_str();
    c->add_option("--patience", cfg.train.patience, "Early-stopping patience")
        ->capture_default_str();
    c->add_option("--seed", cfg.train.seed, "Training seed")->capture_default_str();
    c->add_option("--latent-dim", cfg.arch.latent_dim, "Latent dimensionality")
        ->capture_default_str();
    c->add_flag("!--no-revin", cfg.det.enable_revin, "Disable reversible instance normalization");
    c->add_flag("!--no-freq-adapter", cfg.det.enable_freq_adapter,
                "Disable the frequency adapter");
    c->add_flag("!--no-heuristics", cfg.det.enable_heuristics, "Disable heuristic pre-filters");
  };

  auto* train_cmd = app.add_subcommand("train", "Train the VAE detector label-free");
  train_cmd->add_option("--data", data_dir, "Benchmark directory")->required();
  train_cmd->add_option("--out", out_path, "Checkpoint output path")->required();
  train_cmd->add_option("--report", report_path, "Write the training report JSON here");
  train_cmd->add_flag("--strict", strict, "Exit 3 when posterior collapse is flagged");
  add_train_flags(train_cmd);

  auto* cal_cmd = app.add_subcommand("calibrate", "Recalibrate the detection threshold");
  cal_cmd->add_option("--data", data_dir, "Benchmark directory (validation split)")->required();
  cal_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint to calibrate")->required();
  cal_cmd->add_option("--out", out_path, "Output checkpoint (default: rewrite in place)");
  cal_cmd
      ->add_option("--percentile", cfg.det.threshold_percentile,
                   "Nearest-rank percentile of validation scores")
      ->capture_default_str();

  auto* clean_cmd = app.add_subcommand("clean", "NaN-mask artifact windows in a signal");
  clean_cmd->add_option("--input", input_path, "Input signal (.f32 or .csv)")->required();
  clean_cmd->add_option("--checkpoint", ckpt_path, "Calibrated checkpoint")->required();
  clean_cmd->add_option("--out", out_path, "Cleaned signal output")->required();
  clean_cmd->add_option("--verdicts", verdicts_path, "Per-window verdict JSONL");
  clean_cmd->add_option("--emit-decoded", decoded_path,
                        "Write the decoded (reconstructed) waveform as raw_f32");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a detector on labeled segments");
  eval_cmd->add_option("--data", data_dir, "Benchmark directory")->required();
  eval_cmd->add_option("--checkpoint", ckpt_path, "Calibrated checkpoint")->required();
  eval_cmd->add_option("--split", split, "Split to evaluate: train|validation|test")
      ->capture_default_str();
  eval_cmd->add_option("--out", out_path, "Metrics JSON output");

  auto* events_cmd = app.add_subcommand("events", "Hypertension pulse counts before/after");
  events_cmd->add_option("--raw", input_path, "Raw signal")->required();
  events_cmd->add_option("--cleaned", cleaned_path, "Cleaned signal")->required();
  events_cmd->add_option("--sbp", cfg.events.sbp_limit, "Systolic limit in mmHg (strict >)")
      ->capture_default_str();
  events_cmd->add_option("--dbp", cfg.events.dbp_limit, "Diastolic limit in mmHg (strict >)")
      ->capture_default_str();
  events_cmd->add_option("--out", out_path, "Report JSON output");

  auto* matrix_cmd = app.add_subcommand("matrix", "Cross-patient generalisation matrix");
  matrix_cmd->add_option("--data", data_dir, "Benchmark directory")->required();
  matrix_cmd->add_option("--checkpoint", ckpt_path, "Pooled calibrated checkpoint")->required();
  matrix_cmd->add_option("--out", out_path, "Matrix JSON output");
  matrix_cmd->add_option("--csv", csv_path, "Matrix CSV output (accuracy cells)");
  add_train_flags(matrix_cmd);

  auto* stream_cmd = app.add_subcommand("stream", "Replay a signal through the detector");
  stream_cmd->add_option("--input", input_path, "Input signal file")->required();
  stream_cmd->add_option("--checkpoint", ckpt_path, "Calibrated checkpoint")->required();
  stream_cmd->add_option("--pace", pace, "realtime|unpaced")
      ->check(CLI::IsMember({"realtime", "unpaced"}))
      ->capture_default_str();
  stream_cmd->add_option("--out", out_path, "Verdict JSONL output");
  stream_cmd->add_option("--stats", stats_path, "Stream statistics JSON output");

  std::vector<double> rates{50, 75, 100, 120, 125, 150, 175, 200, 240};
  auto* sweep_cmd = app.add_subcommand("freq-sweep", "Accuracy/time across sampling rates");
  sweep_cmd->add_option("--data", data_dir, "Benchmark directory")->required();
  sweep_cmd->add_option("--checkpoint", ckpt_path, "Calibrated checkpoint")->required();
  sweep_cmd->add_option("--rates", rates, "Rates in Hz")->capture_default_str();
  sweep_cmd->add_option("--out", out_path, "Sweep JSON output");

  std::vector<std::size_t> dims{5, 10, 20, 40, 80};
  std::vector<std::string> metrics{"mse", "mae"};
  auto* lsweep_cmd =
      app.add_subcommand("latent-sweep", "Train across latent sizes and scoring metrics");
  lsweep_cmd->add_option("--data", data_dir, "Benchmark directory")->required();
  lsweep_cmd->add_option("--dims", dims, "Latent dimensionalities")->capture_default_str();
  lsweep_cmd->add_option("--metrics", metrics, "Scoring metrics (mse, mae)")
      ->capture_default_str();
  lsweep_cmd->add_option("--out", out_path, "Sweep JSON output");
  add_train_flags(lsweep_cmd);

  auto* dump_cmd = app.add_subcommand("dump-latent", "Emit per-segment latent vectors as JSONL");
  dump_cmd->add_option("--data", data_dir, "Benchmark directory")->required();
  dump_cmd->add_option("--checkpoint", ckpt_path, "Checkpoint")->required();
  dump_cmd->add_option("--split", split, "Split to embed")->capture_default_str();
  dump_cmd->add_option("--out", out_path, "JSONL output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "genclean: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*synth_cmd) return cmd_synth(cfg, out_path);
    if (*train_cmd) return cmd_train(cfg, data_dir, out_path, report_path, strict);
    if (*cal_cmd) return cmd_calibrate(cfg, data_dir, ckpt_path, out_path);
    if (*clean_cmd)
      return cmd_clean(cfg, input_path, ckpt_path, out_path, verdicts_path, decoded_path);
    if (*eval_cmd) return cmd_eval(cfg, data_dir, ckpt_path, split, out_path);
    if (*events_cmd) return cmd_events(cfg, input_path, cleaned_path, out_path);
    if (*matrix_cmd) return cmd_matrix(cfg, data_dir, ckpt_path, out_path, csv_path);
    if (*stream_cmd) return cmd_stream(cfg, input_path, ckpt_path, pace, out_path, stats_path);
    if (*sweep_cmd) return cmd_freq_sweep(cfg, data_dir, ckpt_path, rates, out_path);
    if (*lsweep_cmd) return cmd_latent_sweep(cfg, data_dir, dims, metrics, out_path);
    if (*dump_cmd) return cmd_dump_latent(cfg, data_dir, ckpt_path, split, out_path);
  } catch (const NumericFailure& e) {
    std::cerr << "genclean: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    std::cerr << "genclean: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "genclean: internal error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
