#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ventbench/rng.hpp"

namespace ventbench {

// Fully-connected network with a rectified linear unit after every layer,
// including the last. Weights are row-major (out x in). All buffers are plain
// vectors so models copy and serialize trivially.
struct MlpWeights {
  std::vector<int> sizes;                   // layer widths, input first
  std::vector<std::vector<double>> w;       // per layer, out*in row-major
  std::vector<std::vector<double>> b;       // per layer, out

  int layer_count() const { return static_cast<int>(sizes.size()) - 1; }
  int input_size() const { return sizes.front(); }
  int output_size() const { return sizes.back(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (int l = 0; l < layer_count(); ++l)
      n += w[static_cast<std::size_t>(l)].size() + b[static_cast<std::size_t>(l)].size();
    return n;
  }

  bool same_shape(const MlpWeights& o) const { return sizes == o.sizes; }
};

// Uniform init in +-sqrt(6 / (fan_in + fan_out)); biases start slightly
// positive so no rectified unit is born dead.
inline MlpWeights mlp_init(const std::vector<int>& sizes, Rng& rng,
                           double bias_init = 0.5) {
  if (sizes.size() < 2) throw std::invalid_argument("mlp_init: need >= 2 layer sizes");
  MlpWeights m;
  m.sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double r = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> w(static_cast<std::size_t>(fan_in) * static_cast<std::size_t>(fan_out));
    for (double& x : w) x = rng.uniform(-r, r);
    m.w.push_back(std::move(w));
    m.b.push_back(std::vector<double>(static_cast<std::size_t>(fan_out), bias_init));
  }
  return m;
}

// Activations of every layer, input included; filled by mlp_forward_cached
// and consumed by mlp_gradient.
struct MlpActivations {
  std::vector<std::vector<double>> a;  // a[0] = input, a[L] = output
};

namespace detail {
// Canonical dot-product order used by every forward path: four partial sums
// over the index classes i mod 4, combined as bias + ((p0+p1) + (p2+p3)).
// One fixed order keeps the reference and the transposed inference kernels
// bit-identical while leaving instruction-level parallelism on the table.
inline double dot_mod4(const double* w, const double* x, int n, double bias) {
  double p0 = 0.0, p1 = 0.0, p2 = 0.0, p3 = 0.0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    p0 += w[i] * x[i];
    p1 += w[i + 1] * x[i + 1];
    p2 += w[i + 2] * x[i + 2];
    p3 += w[i + 3] * x[i + 3];
  }
  for (; i < n; ++i) {
    switch (i & 3) {
      case 0: p0 += w[i] * x[i]; break;
      case 1: p1 += w[i] * x[i]; break;
      case 2: p2 += w[i] * x[i]; break;
      default: p3 += w[i] * x[i]; break;
    }
  }
  return bias + ((p0 + p1) + (p2 + p3));
}
}  // namespace detail

inline void mlp_forward_cached(const MlpWeights& m, const std::vector<double>& x,
                               MlpActivations& acts) {
  if (static_cast<int>(x.size()) != m.input_size())
    throw std::invalid_argument("mlp_forward: input size mismatch");
  acts.a.resize(static_cast<std::size_t>(m.layer_count()) + 1);
  acts.a[0] = x;
  for (int l = 0; l < m.layer_count(); ++l) {
    const int in = m.sizes[static_cast<std::size_t>(l)];
    const int out = m.sizes[static_cast<std::size_t>(l) + 1];
    const auto& wl = m.w[static_cast<std::size_t>(l)];
    const auto& bl = m.b[static_cast<std::size_t>(l)];
    const auto& prev = acts.a[static_cast<std::size_t>(l)];
    auto& cur = acts.a[static_cast<std::size_t>(l) + 1];
    cur.assign(static_cast<std::size_t>(out), 0.0);
    for (int o = 0; o < out; ++o) {
      const double* wrow = wl.data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
      const double s = detail::dot_mod4(wrow, prev.data(), in, bl[static_cast<std::size_t>(o)]);
      cur[static_cast<std::size_t>(o)] = s > 0.0 ? s : 0.0;
    }
  }
}

inline std::vector<double> mlp_forward(const MlpWeights& m,
                                       const std::vector<double>& x) {
  MlpActivations acts;
  mlp_forward_cached(m, x, acts);
  return acts.a.back();
}

// Gradient buffers shaped like the weights.
struct MlpGradients {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  static MlpGradients zeros_like(const MlpWeights& m) {
    MlpGradients g;
    for (int l = 0; l < m.layer_count(); ++l) {
      g.w.push_back(std::vector<double>(m.w[static_cast<std::size_t>(l)].size(), 0.0));
      g.b.push_back(std::vector<double>(m.b[static_cast<std::size_t>(l)].size(), 0.0));
    }
    return g;
  }

  void scale(double f) {
    for (auto& v : w)
      for (double& x : v) x *= f;
    for (auto& v : b)
      for (double& x : v) x *= f;
  }
};

// Reverse-mode gradients for one sample. `upstream` is dL/dy at the output;
// accumulates parameter gradients into `grads` and returns dL/dx through
// `input_grad`. The rectifier subgradient at exactly zero is taken as zero.
inline void mlp_gradient(const MlpWeights& m, const MlpActivations& acts,
                         const std::vector<double>& upstream,
                         MlpGradients& grads, std::vector<double>* input_grad) {
  if (static_cast<int>(upstream.size()) != m.output_size())
    throw std::invalid_argument("mlp_gradient: upstream size mismatch");
  std::vector<double> g = upstream;
  for (int l = m.layer_count() - 1; l >= 0; --l) {
    const int in = m.sizes[static_cast<std::size_t>(l)];
    const int out = m.sizes[static_cast<std::size_t>(l) + 1];
    const auto& act_out = acts.a[static_cast<std::size_t>(l) + 1];
    const auto& act_in = acts.a[static_cast<std::size_t>(l)];
    auto& gw = grads.w[static_cast<std::size_t>(l)];
    auto& gb = grads.b[static_cast<std::size_t>(l)];
    std::vector<double> gprev(static_cast<std::size_t>(in), 0.0);
    const auto& wl = m.w[static_cast<std::size_t>(l)];
    for (int o = 0; o < out; ++o) {
      const double go =
          act_out[static_cast<std::size_t>(o)] > 0.0 ? g[static_cast<std::size_t>(o)] : 0.0;
      if (go == 0.0) continue;
      gb[static_cast<std::size_t>(o)] += go;
      double* gwrow = gw.data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
      const double* wrow = wl.data() + static_cast<std::size_t>(o) * static_cast<std::size_t>(in);
      for (int i = 0; i < in; ++i) {
        gwrow[i] += go * act_in[static_cast<std::size_t>(i)];
        gprev[static_cast<std::size_t>(i)] += go * wrow[i];
      }
    }
    g = std::move(gprev);
  }
  if (input_grad) *input_grad = std::move(g);
}

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  MlpGradients m;  // first moments
  MlpGradients v;  // second moments
  long t = 0;

  static AdamState zeros_like(const MlpWeights& w) {
    return {MlpGradients::zeros_like(w), MlpGradients::zeros_like(w), 0};
  }
};

// Bias-corrected Adam update applied in place.
inline void adam_step(MlpWeights& w, const MlpGradients& g, AdamState& st,
                      const AdamParams& p = AdamParams{}) {
  ++st.t;
  const double c1 = 1.0 - std::pow(p.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(p.beta2, static_cast<double>(st.t));
  auto update = [&](std::vector<double>& param, const std::vector<double>& grad,
                    std::vector<double>& m1, std::vector<double>& m2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      m1[i] = p.beta1 * m1[i] + (1.0 - p.beta1) * grad[i];
      m2[i] = p.beta2 * m2[i] + (1.0 - p.beta2) * grad[i] * grad[i];
      param[i] -= p.lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + p.eps);
    }
  };
  for (int l = 0; l < w.layer_count(); ++l) {
    const auto li = static_cast<std::size_t>(l);
    update(w.w[li], g.w[li], st.m.w[li], st.v.w[li]);
    update(w.b[li], g.b[li], st.m.b[li], st.v.b[li]);
  }
}

}  // namespace ventbench
