#pragma once
// From-scratch neural-network kernels: flat tensors, 1-D convolution and its
// transpose, dense layers, ReLU, and Adam. Templated on the scalar type:
// float for production models, double for finite-difference gradient checks.
// Reductions always accumulate in double.

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "genclean/signal.hpp"

namespace genclean::nn {

template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(numel(shape), T(0));
  }
  static std::size_t numel(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }
  std::size_t size() const { return data.size(); }
  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  T& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

namespace detail {

inline void require(bool cond, const char* what) {
  if (!cond) throw Error(std::string("nn: ") + what);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Deterministic RNG (uniforms and Box-Muller normals from mt19937, so results
// do not depend on the standard library's distribution implementations)
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

  double uniform() {  // [0, 1)
    return (static_cast<double>(gen_()) + 0.5) * (1.0 / 4294967296.0);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::uint32_t next_u32() { return gen_(); }

  /// Derives an independent deterministic child seed.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  template <typename It>
  void shuffle(It first, It last) {
    const auto n = static_cast<std::size_t>(last - first);
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform() * static_cast<double>(i));
      std::swap(first[i - 1], first[j < i ? j : i - 1]);
    }
  }

 private:
  std::mt19937 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// Parameter with Adam state
// ---------------------------------------------------------------------------

template <typename T>
struct Param {
  Tensor<T> value, grad, m, v;
  std::int64_t step_count = 0;

  explicit Param(std::vector<std::size_t> shape = {})
      : value(shape), grad(shape), m(shape), v(std::move(shape)) {}

  void zero_grad() { grad.fill(T(0)); }
};

/// One Adam update using the gradient currently stored in `param.grad`.
template <typename T>
inline void adam_step(Param<T>& param, double lr = 0.001, double beta1 = 0.9,
                      double beta2 = 0.999, double adam_eps = 1e-8) {
  detail::require(param.value.same_shape(param.grad), "adam_step: shape mismatch");
  param.step_count += 1;
  const double t = static_cast<double>(param.step_count);
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < param.value.size(); ++i) {
    const double g = static_cast<double>(param.grad[i]);
    const double m = beta1 * static_cast<double>(param.m[i]) + (1.0 - beta1) * g;
    const double v = beta2 * static_cast<double>(param.v[i]) + (1.0 - beta2) * g * g;
    param.m[i] = static_cast<T>(m);
    param.v[i] = static_cast<T>(v);
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    param.value[i] =
        static_cast<T>(static_cast<double>(param.value[i]) - lr * m_hat / (std::sqrt(v_hat) + adam_eps));
  }
}

/// Kaiming-uniform fan-in initialization; biases start at zero.
template <typename T>
inline void kaiming_init(Param<T>& w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& x : w.value.data) x = static_cast<T>(rng.uniform(-bound, bound));
}

// ---------------------------------------------------------------------------
// Convolution kernels. Weight layouts:
//   conv1d:  w[out_ch, in_ch, k], "same"-style zero padding p = (k-1)/2
//   tconv1d: w[in_ch, out_ch, k], exact adjoint of conv1d with the same
//            (stride, padding); the caller supplies the output length.
// Convention is cross-correlation (no kernel flip).
// ---------------------------------------------------------------------------

namespace detail {

// y[b, t] = sum_a sum_j w[b, a, j] * x[a, t*stride + j - padding]
template <typename T>
inline void corr_gather(const Tensor<T>& x, const Tensor<T>& w, std::size_t stride,
                        std::size_t padding, Tensor<T>& y) {
  const std::size_t A = x.shape[0], L = x.shape[1];
  const std::size_t B = w.shape[0], K = w.shape[2];
  const std::size_t Lo = y.shape[1];
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t t = 0; t < Lo; ++t) {
      double acc = 0.0;
      const long long base = static_cast<long long>(t * stride) - static_cast<long long>(padding);
      for (std::size_t a = 0; a < A; ++a) {
        const T* xr = &x.data[a * L];
        const T* wr = &w.data[(b * A + a) * K];
        for (std::size_t j = 0; j < K; ++j) {
          const long long src = base + static_cast<long long>(j);
          if (src >= 0 && src < static_cast<long long>(L))
            acc += static_cast<double>(wr[j]) * static_cast<double>(xr[src]);
        }
      }
      y.data[b * Lo + t] += static_cast<T>(acc);
    }
  }
}

// x[a, t*stride + j - padding] += sum_b w[b, a, j] * y[b, t]   (adjoint of gather)
template <typename T>
inline void corr_scatter(const Tensor<T>& y, const Tensor<T>& w, std::size_t stride,
                         std::size_t padding, Tensor<T>& x) {
  const std::size_t A = x.shape[0], L = x.shape[1];
  const std::size_t B = w.shape[0], K = w.shape[2];
  const std::size_t Lo = y.shape[1];
  for (std::size_t a = 0; a < A; ++a) {
    T* xr = &x.data[a * L];
    for (std::size_t t = 0; t < Lo; ++t) {
      const long long base = static_cast<long long>(t * stride) - static_cast<long long>(padding);
      for (std::size_t b = 0; b < B; ++b) {
        const double yv = static_cast<double>(y.data[b * Lo + t]);
        const T* wr = &w.data[(b * A + a) * K];
        for (std::size_t j = 0; j < K; ++j) {
          const long long dst = base + static_cast<long long>(j);
          if (dst >= 0 && dst < static_cast<long long>(L))
            xr[dst] += static_cast<T>(static_cast<double>(wr[j]) * yv);
        }
      }
    }
  }
}

// gw[b, a, j] = sum_t u[b, t] * v[a, t*stride + j - padding]
template <typename T>
inline void corr_wgrad(const Tensor<T>& u, const Tensor<T>& v, std::size_t stride,
                       std::size_t padding, Tensor<T>& gw) {
  const std::size_t B = gw.shape[0], A = gw.shape[1], K = gw.shape[2];
  const std::size_t Lo = u.shape[1], L = v.shape[1];
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t a = 0; a < A; ++a) {
      T* wr = &gw.data[(b * A + a) * K];
      for (std::size_t j = 0; j < K; ++j) {
        double acc = 0.0;
        for (std::size_t t = 0; t < Lo; ++t) {
          const long long src = static_cast<long long>(t * stride) + static_cast<long long>(j) -
                                static_cast<long long>(padding);
          if (src >= 0 && src < static_cast<long long>(L))
            acc += static_cast<double>(u.data[b * Lo + t]) * static_cast<double>(v.data[a * L + src]);
        }
        wr[j] += static_cast<T>(acc);
      }
    }
  }
}

inline std::size_t conv_out_len(std::size_t len, std::size_t k, std::size_t stride,
                                std::size_t padding) {
  return (len + 2 * padding - k) / stride + 1;
}

}  // namespace detail

template <typename T>
inline Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                                std::size_t stride, std::size_t padding) {
  detail::require(x.shape.size() == 2 && w.shape.size() == 3 && b.shape.size() == 1,
                  "conv1d_forward: ranks must be x[ci,l], w[co,ci,k], b[co]");
  detail::require(w.shape[1] == x.shape[0], "conv1d_forward: in_ch mismatch between x and w");
  detail::require(w.shape[0] == b.shape[0], "conv1d_forward: out_ch mismatch between w and b");
  detail::require(w.shape[2] % 2 == 1, "conv1d_forward: kernel must be odd");
  detail::require(padding == (w.shape[2] - 1) / 2, "conv1d_forward: padding must be (k-1)/2");
  detail::require(stride >= 1, "conv1d_forward: stride must be >= 1");

  const std::size_t out_len = detail::conv_out_len(x.shape[1], w.shape[2], stride, padding);
  Tensor<T> y({w.shape[0], out_len});
  detail::corr_gather(x, w, stride, padding, y);
  for (std::size_t c = 0; c < y.shape[0]; ++c)
    for (std::size_t t = 0; t < out_len; ++t) y.at(c, t) += b[c];
  return y;
}

template <typename T>
struct ConvGrads {
  Tensor<T> x, w, b;
};

template <typename T>
inline ConvGrads<T> conv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                                    const Tensor<T>& w, std::size_t stride, std::size_t padding) {
  detail::require(grad_out.shape.size() == 2 && grad_out.shape[0] == w.shape[0],
                  "conv1d_backward: grad_out shape mismatch");
  ConvGrads<T> g{Tensor<T>(x.shape), Tensor<T>(w.shape), Tensor<T>({w.shape[0]})};
  detail::corr_scatter(grad_out, w, stride, padding, g.x);
  detail::corr_wgrad(grad_out, x, stride, padding, g.w);
  for (std::size_t c = 0; c < w.shape[0]; ++c) {
    double acc = 0.0;
    for (std::size_t t = 0; t < grad_out.shape[1]; ++t)
      acc += static_cast<double>(grad_out.at(c, t));
    g.b[c] = static_cast<T>(acc);
  }
  return g;
}

template <typename T>
inline Tensor<T> tconv1d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                                 std::size_t stride, std::size_t padding, std::size_t out_len) {
  detail::require(x.shape.size() == 2 && w.shape.size() == 3 && b.shape.size() == 1,
                  "tconv1d_forward: ranks must be x[ci,l], w[ci,co,k], b[co]");
  detail::require(w.shape[0] == x.shape[0], "tconv1d_forward: in_ch mismatch between x and w");
  detail::require(w.shape[1] == b.shape[0], "tconv1d_forward: out_ch mismatch between w and b");
  detail::require(detail::conv_out_len(out_len, w.shape[2], stride, padding) == x.shape[1],
                  "tconv1d_forward: out_len inconsistent with stride/padding");

  Tensor<T> y({w.shape[1], out_len});
  detail::corr_scatter(x, w, stride, padding, y);
  for (std::size_t c = 0; c < y.shape[0]; ++c)
    for (std::size_t t = 0; t < out_len; ++t) y.at(c, t) += b[c];
  return y;
}

template <typename T>
inline ConvGrads<T> tconv1d_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                                     const Tensor<T>& w, std::size_t stride, std::size_t padding) {
  detail::require(grad_out.shape.size() == 2 && grad_out.shape[0] == w.shape[1],
                  "tconv1d_backward: grad_out shape mismatch");
  ConvGrads<T> g{Tensor<T>(x.shape), Tensor<T>(w.shape), Tensor<T>({w.shape[1]})};
  detail::corr_gather(grad_out, w, stride, padding, g.x);
  detail::corr_wgrad(x, grad_out, stride, padding, g.w);
  for (std::size_t c = 0; c < w.shape[1]; ++c) {
    double acc = 0.0;
    for (std::size_t t = 0; t < grad_out.shape[1]; ++t)
      acc += static_cast<double>(grad_out.at(c, t));
    g.b[c] = static_cast<T>(acc);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Dense layer and ReLU
// ---------------------------------------------------------------------------

template <typename T>
inline Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  detail::require(x.shape.size() == 1 && w.shape.size() == 2 && b.shape.size() == 1,
                  "dense_forward: ranks must be x[n], w[m,n], b[m]");
  detail::require(w.shape[1] == x.shape[0] && w.shape[0] == b.shape[0],
                  "dense_forward: shape mismatch");
  const std::size_t m = w.shape[0], n = w.shape[1];
  Tensor<T> y({m});
  for (std::size_t i = 0; i < m; ++i) {
    double acc = static_cast<double>(b[i]);
    const T* wr = &w.data[i * n];
    for (std::size_t j = 0; j < n; ++j)
      acc += static_cast<double>(wr[j]) * static_cast<double>(x[j]);
    y[i] = static_cast<T>(acc);
  }
  return y;
}

template <typename T>
struct DenseGrads {
  Tensor<T> x, w, b;
};

template <typename T>
inline DenseGrads<T> dense_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                                    const Tensor<T>& w) {
  detail::require(grad_out.shape.size() == 1 && grad_out.shape[0] == w.shape[0],
                  "dense_backward: grad_out shape mismatch");
  const std::size_t m = w.shape[0], n = w.shape[1];
  DenseGrads<T> g{Tensor<T>({n}), Tensor<T>(w.shape), Tensor<T>({m})};
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      acc += static_cast<double>(w.data[i * n + j]) * static_cast<double>(grad_out[i]);
    g.x[j] = static_cast<T>(acc);
  }
  for (std::size_t i = 0; i < m; ++i) {
    const double gi = static_cast<double>(grad_out[i]);
    for (std::size_t j = 0; j < n; ++j)
      g.w.data[i * n + j] = static_cast<T>(gi * static_cast<double>(x[j]));
    g.b[i] = static_cast<T>(gi);
  }
  return g;
}

template <typename T>
inline Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

/// Gradient passes through where the pre-activation was > 0.
template <typename T>
inline Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& x) {
  detail::require(grad_out.same_shape(x), "relu_backward: shape mismatch");
  Tensor<T> g(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] > T(0) ? grad_out[i] : T(0);
  return g;
}

}  // namespace genclean::nn
