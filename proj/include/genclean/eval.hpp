#pragma once
// Metrics, statistical tests, and the cross-patient generalisation matrix.
// Positive class = Artifact throughout.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "genclean/detector.hpp"
#include "genclean/signal.hpp"
#include "genclean/synth.hpp"

namespace genclean::eval {

struct Confusion {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(bool predicted_artifact, bool is_artifact) {
    if (predicted_artifact)
      is_artifact ? ++tp : ++fp;
    else
      is_artifact ? ++fn : ++tn;
  }
};

struct Metrics {
  double accuracy = 0.0;
  std::optional<double> sensitivity;  // absent when no positives exist
  std::optional<double> specificity;  // absent when no negatives exist
  std::optional<double> f1;           // absent when 2tp + fp + fn = 0
};

inline Metrics metrics(const Confusion& c) {
  if (c.total() == 0) throw Error("metrics: empty confusion matrix");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fn > 0) m.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.tn + c.fp > 0) m.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
  if (2 * c.tp + c.fp + c.fn > 0)
    m.f1 = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
  return m;
}

/// Mann-Whitney AUC with midrank tie handling. +inf sentinel scores rank
/// above every finite score (and tie with each other).
inline double roc_auc(const std::vector<double>& scores, const std::vector<bool>& is_artifact) {
  if (scores.size() != is_artifact.size()) throw Error("roc_auc: length mismatch");
  std::size_t n_pos = 0;
  for (bool b : is_artifact) n_pos += b;
  const std::size_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error("roc_auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k)
      if (is_artifact[order[k]]) rank_sum_pos += midrank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

struct KsResult {
  double d = 0.0;
  double p = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test. D is the exact ECDF sup-distance; the
/// p-value uses the asymptotic Kolmogorov distribution with the small-sample
/// lambda correction.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());

  double d = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] <= x) ++ia;
    while (ib < b.size() && b[ib] <= x) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }

  const double ne = na * nb / (na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  double p;
  if (lambda < 0.2) {
    p = 1.0;  // series does not converge usefully; the tail is all mass
  } else {
    p = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      p += 2.0 * sign * term;
      sign = -sign;
      if (term < 1e-12) break;
    }
  }
  return {d, std::clamp(p, 0.0, 1.0)};
}

/// Bonferroni adjustment: p * m, clamped to 1.
inline std::vector<double> bonferroni(const std::vector<double>& p_values) {
  const double m = static_cast<double>(p_values.size());
  std::vector<double> out;
  out.reserve(p_values.size());
  for (double p : p_values) out.push_back(std::min(1.0, p * m));
  return out;
}

// ---------------------------------------------------------------------------
// Detector evaluation
// ---------------------------------------------------------------------------

struct EvalOutcome {
  Confusion confusion;
  Metrics summary;
  double auc = 0.0;
  std::vector<double> scores;
  std::vector<bool> labels;
};

inline EvalOutcome evaluate_detector(const detector::CalibratedDetector& det,
                                     const std::vector<Segment>& test_segments) {
  EvalOutcome out;
  for (const auto& seg : test_segments) {
    if (!seg.label) throw Error("evaluate_detector: unlabeled test segment");
    const bool truth = *seg.label == Label::Artifact;
    auto verdict = detector::classify(det, seg);
    out.confusion.add(verdict.is_artifact, truth);
    out.scores.push_back(verdict.score);
    out.labels.push_back(truth);
  }
  out.summary = metrics(out.confusion);
  out.auc = roc_auc(out.scores, out.labels);
  return out;
}

// ---------------------------------------------------------------------------
// Generalisation matrix
// ---------------------------------------------------------------------------

struct GenCell {
  double accuracy = 0.0;
  double f1 = 0.0;
};

struct GenMatrix {
  std::vector<std::string> patient_ids;           // row/column labels
  std::vector<std::vector<GenCell>> cells;        // rows: per-patient models;
                                                  // last column: pooled model
  std::size_t rows() const { return cells.size(); }
  std::size_t cols() const { return cells.empty() ? 0 : cells[0].size(); }

  double mean_off_diagonal_accuracy() const {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j + 1 < cols(); ++j)
        if (i != j) {
          acc += cells[i][j].accuracy;
          ++n;
        }
    return n ? acc / static_cast<double>(n) : 0.0;
  }
  double mean_pooled_accuracy() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows(); ++i) acc += cells[i][cols() - 1].accuracy;
    return rows() ? acc / static_cast<double>(rows()) : 0.0;
  }
};

/// Trains one detector per patient (seed = master seed + patient index) and
/// evaluates every model on every patient's balanced test set; the final
/// column holds the pooled model's per-patient results.
inline GenMatrix generalisation_matrix(const synth::Benchmark& bench,
                                       const detector::CalibratedDetector& pooled,
                                       const vae::VaeArchitecture& arch,
                                       const vae::TrainConfig& train_cfg,
                                       const detector::DetectorConfig& det_cfg) {
  if (bench.patients.size() < 2) throw Error("generalisation_matrix: need at least 2 patients");
  GenMatrix m;
  for (const auto& p : bench.patients) m.patient_ids.push_back(p.id);

  const std::size_t n = bench.patients.size();
  m.cells.assign(n, std::vector<GenCell>(n + 1));

  for (std::size_t i = 0; i < n; ++i) {
    const auto& pi = bench.patients[i];
    vae::TrainConfig cfg = train_cfg;
    cfg.seed = train_cfg.seed + i;
    detector::TrainedDetector trained;
    try {
      trained = detector::train_detector(pi.train.segments, pi.validation.segments, arch, cfg,
                                         det_cfg);
    } catch (const std::exception& e) {
      throw Error("generalisation_matrix: training failed for patient " + pi.id + ": " + e.what());
    }
    for (std::size_t j = 0; j < n; ++j) {
      auto outcome = evaluate_detector(trained.detector, bench.patients[j].test.segments);
      m.cells[i][j] = {outcome.summary.accuracy, outcome.summary.f1.value_or(0.0)};
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    auto outcome = evaluate_detector(pooled, bench.patients[j].test.segments);
    m.cells[j][n] = {outcome.summary.accuracy, outcome.summary.f1.value_or(0.0)};
  }
  return m;
}

}  // namespace genclean::eval
