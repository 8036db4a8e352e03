#pragma once
// Variational autoencoder over 10-second pulsatile segments: 1-D conv encoder,
// transposed-conv decoder, closed-form Gaussian KL, sum-based ELBO, label-free
// training with early stopping and a posterior-collapse guard, and binary
// checkpoint serialization.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "genclean/dsp.hpp"
#include "genclean/nn.hpp"
#include "genclean/signal.hpp"
#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace genclean::vae {

enum class ScoreMetric { Mse, Mae };

inline std::string to_string(ScoreMetric m) { return m == ScoreMetric::Mse ? "mse" : "mae"; }
inline ScoreMetric score_metric_from_string(const std::string& s) {
  if (s == "mse") return ScoreMetric::Mse;
  if (s == "mae") return ScoreMetric::Mae;
  throw Error("unknown score metric \"" + s + "\" (expected \"mse\" or \"mae\")");
}

// ---------------------------------------------------------------------------
// Architecture
// ---------------------------------------------------------------------------

/// Encoder: conv(1->c0,k,s0) relu, conv(c0->c1,k,s1) relu, conv(c1->c2,k,s2)
/// relu, flatten, dense heads for mu and logvar. Decoder mirrors it exactly
/// with transposed convolutions and a linear final layer.
struct VaeArchitecture {
  std::size_t input_len = 1200;
  std::size_t latent_dim = 20;
  std::array<std::size_t, 3> channels{8, 16, 32};
  std::array<std::size_t, 3> strides{2, 2, 5};
  std::size_t kernel = 9;

  std::size_t padding() const { return (kernel - 1) / 2; }

  /// Per-stage lengths {L0, L1, L2, L3} with Li+1 = ceil(Li / stride_i).
  std::array<std::size_t, 4> lengths() const {
    std::array<std::size_t, 4> l{};
    l[0] = input_len;
    for (int i = 0; i < 3; ++i) l[i + 1] = (l[i] + strides[i] - 1) / strides[i];
    return l;
  }
  std::size_t flat_len() const { return channels[2] * lengths()[3]; }

  void validate() const {
    if (input_len == 0 || latent_dim == 0) throw Error("vae: input_len/latent_dim must be positive");
    if (kernel % 2 == 0) throw Error("vae: kernel must be odd");
    for (auto s : strides)
      if (s == 0) throw Error("vae: strides must be positive");
    const auto l = lengths();
    for (int i = 0; i < 3; ++i)
      if (l[i] < strides[i]) throw Error("vae: input too short for stride chain");
  }

  nlohmann::json to_json() const {
    nlohmann::json enc = nlohmann::json::array();
    nlohmann::json dec = nlohmann::json::array();
    std::size_t in_ch = 1;
    for (int i = 0; i < 3; ++i) {
      enc.push_back({{"op", "conv1d"},
                     {"in_ch", in_ch},
                     {"out_ch", channels[i]},
                     {"kernel", kernel},
                     {"stride", strides[i]},
                     {"activation", "relu"}});
      in_ch = channels[i];
    }
    enc.push_back({{"op", "dense"}, {"heads", {"mu", "logvar"}}, {"out", latent_dim}});
    dec.push_back({{"op", "dense"}, {"out", flat_len()}, {"activation", "relu"}});
    const auto l = lengths();
    std::size_t cur = channels[2];
    for (int i = 2; i >= 0; --i) {
      const std::size_t out_ch = i > 0 ? channels[i - 1] : 1;
      dec.push_back({{"op", "tconv1d"},
                     {"in_ch", cur},
                     {"out_ch", out_ch},
                     {"kernel", kernel},
                     {"stride", strides[i]},
                     {"out_len", l[i]},
                     {"activation", i > 0 ? "relu" : "linear"}});
      cur = out_ch;
    }
    return {{"input_len", input_len}, {"latent_dim", latent_dim},
            {"channels", channels},   {"strides", strides},
            {"kernel", kernel},       {"encoder", enc},
            {"decoder", dec}};
  }

  static VaeArchitecture from_json(const nlohmann::json& j) {
    VaeArchitecture a;
    a.input_len = j.at("input_len").get<std::size_t>();
    a.latent_dim = j.at("latent_dim").get<std::size_t>();
    auto ch = j.at("channels").get<std::vector<std::size_t>>();
    auto st = j.at("strides").get<std::vector<std::size_t>>();
    if (ch.size() != 3 || st.size() != 3) throw Error("checkpoint: arch must have 3 conv stages");
    std::copy(ch.begin(), ch.end(), a.channels.begin());
    std::copy(st.begin(), st.end(), a.strides.begin());
    a.kernel = j.at("kernel").get<std::size_t>();
    a.validate();
    return a;
  }
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

template <typename T>
struct VaeModel {
  VaeArchitecture arch;

  std::array<nn::Param<T>, 3> enc_w, enc_b;
  nn::Param<T> mu_w, mu_b, lv_w, lv_b;
  nn::Param<T> dec_fc_w, dec_fc_b;
  std::array<nn::Param<T>, 3> dec_w, dec_b;

  explicit VaeModel(const VaeArchitecture& a = {}) : arch(a) {
    arch.validate();
    std::size_t in_ch = 1;
    for (int i = 0; i < 3; ++i) {
      enc_w[i] = nn::Param<T>({arch.channels[i], in_ch, arch.kernel});
      enc_b[i] = nn::Param<T>({arch.channels[i]});
      in_ch = arch.channels[i];
    }
    const std::size_t flat = arch.flat_len();
    mu_w = nn::Param<T>({arch.latent_dim, flat});
    mu_b = nn::Param<T>({arch.latent_dim});
    lv_w = nn::Param<T>({arch.latent_dim, flat});
    lv_b = nn::Param<T>({arch.latent_dim});
    dec_fc_w = nn::Param<T>({flat, arch.latent_dim});
    dec_fc_b = nn::Param<T>({flat});
    // tconv weights are [in_ch, out_ch, k]
    dec_w[0] = nn::Param<T>({arch.channels[2], arch.channels[1], arch.kernel});
    dec_b[0] = nn::Param<T>({arch.channels[1]});
    dec_w[1] = nn::Param<T>({arch.channels[1], arch.channels[0], arch.kernel});
    dec_b[1] = nn::Param<T>({arch.channels[0]});
    dec_w[2] = nn::Param<T>({arch.channels[0], 1, arch.kernel});
    dec_b[2] = nn::Param<T>({1});
  }

  /// Fixed parameter order shared by Adam, checkpoints, and gradient checks.
  std::vector<nn::Param<T>*> params() {
    return {&enc_w[0], &enc_b[0], &enc_w[1], &enc_b[1], &enc_w[2], &enc_b[2],
            &mu_w,     &mu_b,     &lv_w,     &lv_b,     &dec_fc_w, &dec_fc_b,
            &dec_w[0], &dec_b[0], &dec_w[1], &dec_b[1], &dec_w[2], &dec_b[2]};
  }
  std::vector<const nn::Param<T>*> params() const {
    auto* self = const_cast<VaeModel*>(this);
    auto ps = self->params();
    return {ps.begin(), ps.end()};
  }
  static std::vector<std::string> param_names() {
    return {"enc1.w", "enc1.b", "enc2.w", "enc2.b", "enc3.w", "enc3.b",
            "mu.w",   "mu.b",   "logvar.w", "logvar.b", "dec_fc.w", "dec_fc.b",
            "dec1.w", "dec1.b", "dec2.w", "dec2.b", "dec3.w", "dec3.b"};
  }

  void init(std::uint64_t seed) {
    nn::Rng rng(nn::Rng::derive(seed, 0xA11C));
    std::size_t in_ch = 1;
    for (int i = 0; i < 3; ++i) {
      nn::kaiming_init(enc_w[i], in_ch * arch.kernel, rng);
      in_ch = arch.channels[i];
    }
    const std::size_t flat = arch.flat_len();
    nn::kaiming_init(mu_w, flat, rng);
    nn::kaiming_init(lv_w, flat, rng);
    nn::kaiming_init(dec_fc_w, arch.latent_dim, rng);
    nn::kaiming_init(dec_w[0], arch.channels[2] * arch.kernel, rng);
    nn::kaiming_init(dec_w[1], arch.channels[1] * arch.kernel, rng);
    nn::kaiming_init(dec_w[2], arch.channels[0] * arch.kernel, rng);
  }
};

/// Latent summary of one segment: posterior mean, log-variance, and the draw.
struct LatentVector {
  std::vector<double> mu, logvar, z;
};

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

template <typename T>
struct Workspace {
  nn::Tensor<T> x;                       // [1, L0]
  nn::Tensor<T> z1, a1, z2, a2, z3, a3;  // conv stages (pre/post relu)
  nn::Tensor<T> flat, mu, logvar, noise, z;
  nn::Tensor<T> d0, d0r;                 // decoder dense pre/post relu
  nn::Tensor<T> t1, at1, t2, at2, recon;  // tconv stages; recon is [1, L0]
};

template <typename T>
inline void forward(const VaeModel<T>& m, const nn::Tensor<T>& x, const nn::Tensor<T>& noise,
                    Workspace<T>& ws) {
  const auto& a = m.arch;
  if (x.shape != std::vector<std::size_t>{1, a.input_len})
    throw Error("vae forward: input must have shape [1, " + std::to_string(a.input_len) + "]");
  if (noise.shape != std::vector<std::size_t>{a.latent_dim})
    throw Error("vae forward: noise must have latent_dim elements");
  const auto l = a.lengths();
  const auto p = a.padding();

  ws.x = x;
  ws.z1 = nn::conv1d_forward(x, m.enc_w[0].value, m.enc_b[0].value, a.strides[0], p);
  ws.a1 = nn::relu(ws.z1);
  ws.z2 = nn::conv1d_forward(ws.a1, m.enc_w[1].value, m.enc_b[1].value, a.strides[1], p);
  ws.a2 = nn::relu(ws.z2);
  ws.z3 = nn::conv1d_forward(ws.a2, m.enc_w[2].value, m.enc_b[2].value, a.strides[2], p);
  ws.a3 = nn::relu(ws.z3);

  ws.flat = ws.a3;
  ws.flat.shape = {a.flat_len()};
  ws.mu = nn::dense_forward(ws.flat, m.mu_w.value, m.mu_b.value);
  ws.logvar = nn::dense_forward(ws.flat, m.lv_w.value, m.lv_b.value);

  ws.noise = noise;
  ws.z = nn::Tensor<T>({a.latent_dim});
  for (std::size_t i = 0; i < a.latent_dim; ++i)
    ws.z[i] = ws.mu[i] + std::exp(T(0.5) * ws.logvar[i]) * noise[i];

  ws.d0 = nn::dense_forward(ws.z, m.dec_fc_w.value, m.dec_fc_b.value);
  ws.d0r = nn::relu(ws.d0);
  nn::Tensor<T> u3 = ws.d0r;
  u3.shape = {a.channels[2], l[3]};
  ws.t1 = nn::tconv1d_forward(u3, m.dec_w[0].value, m.dec_b[0].value, a.strides[2], p, l[2]);
  ws.at1 = nn::relu(ws.t1);
  ws.t2 = nn::tconv1d_forward(ws.at1, m.dec_w[1].value, m.dec_b[1].value, a.strides[1], p, l[1]);
  ws.at2 = nn::relu(ws.t2);
  ws.recon = nn::tconv1d_forward(ws.at2, m.dec_w[2].value, m.dec_b[2].value, a.strides[0], p, l[0]);
}

/// Closed-form KL of N(mu, e^logvar) against the unit Gaussian prior, summed
/// over dimensions: -1/2 sum(1 + logvar - mu^2 - e^logvar).
inline double kl_gaussian(const std::vector<double>& mu, const std::vector<double>& logvar) {
  if (mu.size() != logvar.size()) throw Error("kl_gaussian: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    acc += 1.0 + logvar[i] - mu[i] * mu[i] - std::exp(logvar[i]);
  return -0.5 * acc;
}

struct ElboTerms {
  double total = 0.0;
  double recon = 0.0;  // sum of squared errors, not mean
  double kl = 0.0;
};

/// Sum-based ELBO in normalized space: squared-error reconstruction plus the
/// Gaussian KL. Minimizing `total` maximizes the ELBO up to constants.
inline ElboTerms elbo_loss(const std::vector<double>& x_norm, const std::vector<double>& x_recon,
                           const std::vector<double>& mu, const std::vector<double>& logvar) {
  if (x_norm.size() != x_recon.size()) throw Error("elbo_loss: length mismatch");
  ElboTerms t;
  for (std::size_t i = 0; i < x_norm.size(); ++i) {
    const double d = x_norm[i] - x_recon[i];
    t.recon += d * d;
  }
  t.kl = kl_gaussian(mu, logvar);
  t.total = t.recon + t.kl;
  return t;
}

template <typename T>
inline ElboTerms elbo_from_workspace(const Workspace<T>& ws) {
  ElboTerms t;
  for (std::size_t i = 0; i < ws.x.size(); ++i) {
    const double d = static_cast<double>(ws.x[i]) - static_cast<double>(ws.recon[i]);
    t.recon += d * d;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < ws.mu.size(); ++i) {
    const double mu = ws.mu[i], lv = ws.logvar[i];
    acc += 1.0 + lv - mu * mu - std::exp(lv);
  }
  t.kl = -0.5 * acc;
  t.total = t.recon + t.kl;
  return t;
}

template <typename T>
inline void add_into(nn::Tensor<T>& dst, const nn::Tensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

/// Per-segment gradient buffer aligned with VaeModel::params() order.
template <typename T>
struct ModelGrads {
  std::vector<nn::Tensor<T>> g;

  explicit ModelGrads(const VaeModel<T>& m) {
    for (const auto* p : m.params()) g.emplace_back(p->value.shape);
  }
  void zero() {
    for (auto& t : g) t.fill(T(0));
  }
};

/// Backpropagates d(total)/d(params) of the summed ELBO into `out.g`.
template <typename T>
inline void backward(const VaeModel<T>& m, const Workspace<T>& ws, ModelGrads<T>& out) {
  const auto& a = m.arch;
  const auto l = a.lengths();
  const auto p = a.padding();
  enum {  // indices into params() order
    kEnc1W, kEnc1B, kEnc2W, kEnc2B, kEnc3W, kEnc3B,
    kMuW, kMuB, kLvW, kLvB, kDecFcW, kDecFcB,
    kDec1W, kDec1B, kDec2W, kDec2B, kDec3W, kDec3B
  };

  // reconstruction loss
  nn::Tensor<T> g_recon(ws.recon.shape);
  for (std::size_t i = 0; i < g_recon.size(); ++i)
    g_recon[i] = T(2) * (ws.recon[i] - ws.x[i]);

  // decoder
  auto g3 = nn::tconv1d_backward(g_recon, ws.at2, m.dec_w[2].value, a.strides[0], p);
  add_into(out.g[kDec3W], g3.w), add_into(out.g[kDec3B], g3.b);
  auto g_t2 = nn::relu_backward(g3.x, ws.t2);
  auto g2 = nn::tconv1d_backward(g_t2, ws.at1, m.dec_w[1].value, a.strides[1], p);
  add_into(out.g[kDec2W], g2.w), add_into(out.g[kDec2B], g2.b);
  auto g_t1 = nn::relu_backward(g2.x, ws.t1);
  nn::Tensor<T> u3 = ws.d0r;
  u3.shape = {a.channels[2], l[3]};
  auto g1 = nn::tconv1d_backward(g_t1, u3, m.dec_w[0].value, a.strides[2], p);
  add_into(out.g[kDec1W], g1.w), add_into(out.g[kDec1B], g1.b);
  nn::Tensor<T> g_d0r = g1.x;
  g_d0r.shape = {a.flat_len()};
  auto g_d0 = nn::relu_backward(g_d0r, ws.d0);
  auto gfc = nn::dense_backward(g_d0, ws.z, m.dec_fc_w.value);
  add_into(out.g[kDecFcW], gfc.w), add_into(out.g[kDecFcB], gfc.b);

  // reparameterization and KL
  nn::Tensor<T> g_mu(ws.mu.shape), g_lv(ws.logvar.shape);
  for (std::size_t i = 0; i < a.latent_dim; ++i) {
    const T gz = gfc.x[i];
    g_mu[i] = gz + ws.mu[i];  // KL term: d/dmu = mu
    g_lv[i] = gz * T(0.5) * std::exp(T(0.5) * ws.logvar[i]) * ws.noise[i] +
              T(0.5) * (std::exp(ws.logvar[i]) - T(1));
  }

  // encoder heads
  auto gmu = nn::dense_backward(g_mu, ws.flat, m.mu_w.value);
  add_into(out.g[kMuW], gmu.w), add_into(out.g[kMuB], gmu.b);
  auto glv = nn::dense_backward(g_lv, ws.flat, m.lv_w.value);
  add_into(out.g[kLvW], glv.w), add_into(out.g[kLvB], glv.b);
  nn::Tensor<T> g_flat(ws.flat.shape);
  for (std::size_t i = 0; i < g_flat.size(); ++i) g_flat[i] = gmu.x[i] + glv.x[i];
  g_flat.shape = {a.channels[2], l[3]};

  // encoder convs
  auto g_z3 = nn::relu_backward(g_flat, ws.z3);
  auto ge3 = nn::conv1d_backward(g_z3, ws.a2, m.enc_w[2].value, a.strides[2], p);
  add_into(out.g[kEnc3W], ge3.w), add_into(out.g[kEnc3B], ge3.b);
  auto g_z2 = nn::relu_backward(ge3.x, ws.z2);
  auto ge2 = nn::conv1d_backward(g_z2, ws.a1, m.enc_w[1].value, a.strides[1], p);
  add_into(out.g[kEnc2W], ge2.w), add_into(out.g[kEnc2B], ge2.b);
  auto g_z1 = nn::relu_backward(ge2.x, ws.z1);
  auto ge1 = nn::conv1d_backward(g_z1, ws.x, m.enc_w[0].value, a.strides[0], p);
  add_into(out.g[kEnc1W], ge1.w), add_into(out.g[kEnc1B], ge1.b);
}

// ---------------------------------------------------------------------------
// Inference helpers
// ---------------------------------------------------------------------------

template <typename T>
inline std::pair<std::vector<double>, std::vector<double>> encode(const VaeModel<T>& m,
                                                                  const std::vector<double>& x) {
  if (x.size() != m.arch.input_len) throw Error("encode: input length mismatch");
  nn::Tensor<T> xt({1, m.arch.input_len});
  for (std::size_t i = 0; i < x.size(); ++i) xt[i] = static_cast<T>(x[i]);
  nn::Tensor<T> noise({m.arch.latent_dim});
  Workspace<T> ws;
  forward(m, xt, noise, ws);
  std::vector<double> mu(ws.mu.data.begin(), ws.mu.data.end());
  std::vector<double> lv(ws.logvar.data.begin(), ws.logvar.data.end());
  return {mu, lv};
}

inline std::vector<double> reparameterize(const std::vector<double>& mu,
                                          const std::vector<double>& logvar,
                                          const std::vector<double>& noise) {
  if (mu.size() != logvar.size() || mu.size() != noise.size())
    throw Error("reparameterize: length mismatch");
  std::vector<double> z(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i)
    z[i] = mu[i] + std::exp(0.5 * logvar[i]) * noise[i];
  return z;
}

template <typename T>
inline std::vector<double> decode(const VaeModel<T>& m, const std::vector<double>& z) {
  const auto& a = m.arch;
  if (z.size() != a.latent_dim) throw Error("decode: latent length mismatch");
  const auto l = a.lengths();
  const auto p = a.padding();
  nn::Tensor<T> zt({a.latent_dim});
  for (std::size_t i = 0; i < z.size(); ++i) zt[i] = static_cast<T>(z[i]);
  auto d0 = nn::dense_forward(zt, m.dec_fc_w.value, m.dec_fc_b.value);
  auto d0r = nn::relu(d0);
  d0r.shape = {a.channels[2], l[3]};
  auto t1 = nn::relu(nn::tconv1d_forward(d0r, m.dec_w[0].value, m.dec_b[0].value, a.strides[2], p, l[2]));
  auto t2 = nn::relu(nn::tconv1d_forward(t1, m.dec_w[1].value, m.dec_b[1].value, a.strides[1], p, l[1]));
  auto r = nn::tconv1d_forward(t2, m.dec_w[2].value, m.dec_b[2].value, a.strides[0], p, l[0]);
  return {r.data.begin(), r.data.end()};
}

/// Deterministic reconstruction (noise = 0, so z = mu). Returns the decoded
/// waveform in model space plus the latent summary.
template <typename T>
inline std::pair<std::vector<double>, LatentVector> reconstruct(const VaeModel<T>& m,
                                                                const std::vector<double>& x) {
  if (x.size() != m.arch.input_len) throw Error("reconstruct: input length mismatch");
  nn::Tensor<T> xt({1, m.arch.input_len});
  for (std::size_t i = 0; i < x.size(); ++i) xt[i] = static_cast<T>(x[i]);
  nn::Tensor<T> noise({m.arch.latent_dim});
  Workspace<T> ws;
  forward(m, xt, noise, ws);
  LatentVector lat;
  lat.mu.assign(ws.mu.data.begin(), ws.mu.data.end());
  lat.logvar.assign(ws.logvar.data.begin(), ws.logvar.data.end());
  lat.z = lat.mu;
  std::vector<double> recon(ws.recon.data.begin(), ws.recon.data.end());
  return {recon, lat};
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
  double lr = 0.001;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 300;
  std::size_t patience = 50;
  std::uint64_t seed = 0;
  bool normalize = true;  // reversible instance normalization of each segment
  double eps = 1e-5;

  void validate() const {
    if (lr <= 0 || batch_size == 0 || max_epochs == 0 || patience == 0)
      throw Error("train config: lr/batch/epochs/patience must be positive");
    if (patience > max_epochs) throw Error("train config: patience must be <= max_epochs");
  }
};

enum class StopReason { EarlyStop, MaxEpochs };

struct EpochStats {
  double train_total = 0, train_recon = 0, train_kl = 0;
  double val_total = 0, val_recon = 0, val_kl = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;  // 1-based
  StopReason stop_reason = StopReason::MaxEpochs;
  double wall_seconds = 0;
  double best_val_total = 0;
  double best_val_recon = 0;
  double baseline_recon = 0;  // constant-mean predictor on the validation set
  bool collapse_flag = false;
};

/// Tracks the best validation loss; signals stop after `patience` epochs
/// without strict improvement.
struct EarlyStopper {
  std::size_t patience;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;

  explicit EarlyStopper(std::size_t p) : patience(p) {}
  /// Call once per epoch (1-based). Returns true when training should stop.
  bool update(std::size_t epoch, double val_loss) {
    if (val_loss < best) {
      best = val_loss;
      best_epoch = epoch;
      return false;
    }
    return epoch - best_epoch >= patience;
  }
};

namespace detail {

template <typename T>
inline std::vector<nn::Tensor<T>> prepare_inputs(const std::vector<std::vector<double>>& raw,
                                                 const TrainConfig& cfg, std::size_t input_len) {
  std::vector<nn::Tensor<T>> out;
  out.reserve(raw.size());
  for (const auto& seg : raw) {
    if (seg.size() != input_len)
      throw Error("train: segment length " + std::to_string(seg.size()) + " != input_len " +
                  std::to_string(input_len));
    std::vector<double> v = seg;
    if (cfg.normalize) v = dsp::revin_normalize(v, dsp::revin_stats(v, cfg.eps));
    nn::Tensor<T> t({1, input_len});
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (std::isnan(v[i])) throw Error("train: segment contains NaN");
      t[i] = static_cast<T>(v[i]);
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace detail

/// Label-free training. Inputs are raw-scale segments of exactly input_len
/// samples that already passed heuristic filtering; each is normalized with
/// its own statistics (unless cfg.normalize is off). Deterministic for a
/// fixed (data, arch, cfg) regardless of thread count: per-segment gradients
/// are reduced in segment order.
template <typename T = float>
inline std::pair<VaeModel<T>, TrainReport> train(const std::vector<std::vector<double>>& train_raw,
                                                 const std::vector<std::vector<double>>& val_raw,
                                                 const VaeArchitecture& arch,
                                                 const TrainConfig& cfg) {
  cfg.validate();
  arch.validate();
  if (train_raw.empty()) throw Error("train: empty training set");
  if (val_raw.empty()) throw Error("train: empty validation set");

  const auto t_start = std::chrono::steady_clock::now();
  auto train_in = detail::prepare_inputs<T>(train_raw, cfg, arch.input_len);
  auto val_in = detail::prepare_inputs<T>(val_raw, cfg, arch.input_len);

  VaeModel<T> model(arch);
  model.init(cfg.seed);
  nn::Rng rng(nn::Rng::derive(cfg.seed, 0x7ea1));

  TrainReport report;
  // Constant-mean predictor: in normalized space it predicts 0 everywhere; in
  // raw space it predicts the segment mean. Either way the residual energy is
  // the sum of squared deviations from the segment mean (after normalization
  // for the normalized case).
  for (const auto& v : val_in) {
    double acc = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) mean += static_cast<double>(v[i]);
    mean /= static_cast<double>(v.size());
    const double center = cfg.normalize ? 0.0 : mean;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = static_cast<double>(v[i]) - center;
      acc += d * d;
    }
    report.baseline_recon += acc;
  }

  const std::size_t n_train = train_in.size();
  const std::size_t bs = std::min(cfg.batch_size, n_train);
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  std::vector<ModelGrads<T>> item_grads;
  for (std::size_t i = 0; i < bs; ++i) item_grads.emplace_back(model);
  std::vector<Workspace<T>> item_ws(bs);
  std::vector<nn::Tensor<T>> item_noise(bs, nn::Tensor<T>({arch.latent_dim}));
  std::vector<ElboTerms> item_loss(bs);

  auto params = model.params();
  EarlyStopper stopper(cfg.patience);
  std::vector<nn::Tensor<T>> best_params;
  auto snapshot = [&]() {
    best_params.clear();
    for (auto* p : params) best_params.push_back(p->value);
  };
  snapshot();

  std::vector<ElboTerms> val_loss(val_in.size());
  report.stop_reason = StopReason::MaxEpochs;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    EpochStats es;

    for (std::size_t batch_start = 0; batch_start < n_train; batch_start += bs) {
      const std::size_t nb = std::min(bs, n_train - batch_start);
      for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t d = 0; d < arch.latent_dim; ++d)
          item_noise[i][d] = static_cast<T>(rng.normal());

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
      for (std::size_t i = 0; i < nb; ++i) {
        item_grads[i].zero();
        forward(model, train_in[order[batch_start + i]], item_noise[i], item_ws[i]);
        item_loss[i] = elbo_from_workspace(item_ws[i]);
        backward(model, item_ws[i], item_grads[i]);
      }

      for (auto* p : params) p->zero_grad();
      for (std::size_t i = 0; i < nb; ++i) {  // fixed reduction order
        es.train_total += item_loss[i].total;
        es.train_recon += item_loss[i].recon;
        es.train_kl += item_loss[i].kl;
        for (std::size_t pi = 0; pi < params.size(); ++pi)
          add_into(params[pi]->grad, item_grads[i].g[pi]);
      }
      for (auto* p : params) nn::adam_step(*p, cfg.lr);
    }

    // deterministic validation: noise = 0, z = mu
    nn::Tensor<T> zero_noise({arch.latent_dim});
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::size_t i = 0; i < val_in.size(); ++i) {
      Workspace<T> ws;
      forward(model, val_in[i], zero_noise, ws);
      val_loss[i] = elbo_from_workspace(ws);
    }
    for (const auto& t : val_loss) {
      es.val_total += t.total;
      es.val_recon += t.recon;
      es.val_kl += t.kl;
    }
    report.epochs.push_back(es);

    const bool improved = es.val_total < stopper.best;
    const bool stop = stopper.update(epoch, es.val_total);
    if (improved) {
      snapshot();
      report.best_val_total = es.val_total;
      report.best_val_recon = es.val_recon;
    }
    if (stop) {
      report.stop_reason = StopReason::EarlyStop;
      break;
    }
  }

  report.best_epoch = stopper.best_epoch;
  for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->value = best_params[pi];
  report.collapse_flag = report.best_val_recon >= report.baseline_recon;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return {std::move(model), report};
}

// ---------------------------------------------------------------------------
// Checkpoint serialization
//
// Layout: magic "GCLN1\n", u32 little-endian header length, JSON header, then
// all parameter tensors as little-endian 32-bit floats in header order.
// ---------------------------------------------------------------------------

struct CheckpointMeta {
  double fs_target_hz = 120.0;
  double eps = 1e-5;
  std::optional<double> threshold;
  ScoreMetric score_metric = ScoreMetric::Mse;
};

inline constexpr char kCheckpointMagic[6] = {'G', 'C', 'L', 'N', '1', '\n'};

inline void save_checkpoint(const VaeModel<float>& model, const CheckpointMeta& meta,
                            const std::string& path) {
  nlohmann::json params = nlohmann::json::array();
  auto names = VaeModel<float>::param_names();
  auto ps = model.params();
  for (std::size_t i = 0; i < ps.size(); ++i)
    params.push_back({{"name", names[i]}, {"shape", ps[i]->value.shape}});

  nlohmann::json header{{"arch", model.arch.to_json()},
                        {"latent_dim", model.arch.latent_dim},
                        {"input_len", model.arch.input_len},
                        {"fs_target_hz", meta.fs_target_hz},
                        {"eps", meta.eps},
                        {"threshold", meta.threshold ? nlohmann::json(*meta.threshold)
                                                     : nlohmann::json(nullptr)},
                        {"score_metric", to_string(meta.score_metric)},
                        {"params", params}};
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint \"" + path + "\"");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const auto hlen = static_cast<std::uint32_t>(hs.size());
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (auto* p : ps)
    out.write(reinterpret_cast<const char*>(p->value.data.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(float)));
  if (!out) throw Error("write failed for checkpoint \"" + path + "\"");
}

inline std::pair<VaeModel<float>, CheckpointMeta> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint \"" + path + "\"");
  char magic[6];
  in.read(magic, 6);
  if (in.gcount() != 6 || std::memcmp(magic, kCheckpointMagic, 6) != 0)
    throw Error("\"" + path + "\" is not a GenClean checkpoint");
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  if (in.gcount() != 4) throw Error("checkpoint \"" + path + "\": truncated header length");
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  if (static_cast<std::uint32_t>(in.gcount()) != hlen)
    throw Error("checkpoint \"" + path + "\": truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const std::exception& e) {
    throw Error("checkpoint \"" + path + "\": bad header JSON: " + e.what());
  }

  VaeArchitecture arch = VaeArchitecture::from_json(header.at("arch"));
  if (header.at("latent_dim").get<std::size_t>() != arch.latent_dim ||
      header.at("input_len").get<std::size_t>() != arch.input_len)
    throw Error("checkpoint \"" + path + "\": header latent_dim/input_len disagree with arch");

  CheckpointMeta meta;
  meta.fs_target_hz = header.at("fs_target_hz").get<double>();
  meta.eps = header.at("eps").get<double>();
  if (!header.at("threshold").is_null()) meta.threshold = header.at("threshold").get<double>();
  meta.score_metric = score_metric_from_string(header.at("score_metric").get<std::string>());

  VaeModel<float> model(arch);
  auto ps = model.params();
  const auto& jp = header.at("params");
  if (jp.size() != ps.size()) throw Error("checkpoint \"" + path + "\": wrong parameter count");
  auto names = VaeModel<float>::param_names();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto shape = jp[i].at("shape").get<std::vector<std::size_t>>();
    if (shape != ps[i]->value.shape)
      throw Error("checkpoint \"" + path + "\": shape mismatch for " + names[i]);
    in.read(reinterpret_cast<char*>(ps[i]->value.data.data()),
            static_cast<std::streamsize>(ps[i]->value.size() * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != ps[i]->value.size() * sizeof(float))
      throw Error("checkpoint \"" + path + "\": truncated tensor " + names[i]);
  }
  return {std::move(model), meta};
}

}  // namespace genclean::vae
