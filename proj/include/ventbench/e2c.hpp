#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "ventbench/config.hpp"
#include "ventbench/control.hpp"
#include "ventbench/env.hpp"
#include "ventbench/mlp.hpp"
#include "ventbench/protocols.hpp"
#include "ventbench/rng.hpp"
#include "ventbench/types.hpp"

namespace ventbench {

inline constexpr int kStateDim = 27;
inline constexpr int kActionDim = 6;
inline constexpr int kLatentDim = 6;

// Fixed per-slot physiological ranges used to map states and actions onto
// [0, 1]. These are constants of the artifact, not data statistics, so the
// learned model stays usable on states outside the training distribution.
struct NormalizationSpec {
  std::array<double, kStateDim> s_min{350, 10, 5,  40, 40, 70, 40, 0,  1,
                                      35,  20, 0,  0,  0,  1,  1,  1,  0,
                                      0,   1,  0,  5,  0,  6.5, 1, 0,  1};
  std::array<double, kStateDim> s_max{1200, 70,  95,  160, 100, 150, 100, 13, 30,
                                      40,   150, 300, 500, 9,   8,   30,  30, 1600,
                                      30,   30,  0.1, 100, 100, 7.8, 30,  1,  25};
  std::array<double, kActionDim> a_min{0.0, 1.0, 0.1, 1.0, 1.0, 0.0};
  std::array<double, kActionDim> a_max{1.0, 30.0, 3.0, 30.0, 25.0, 1.0};

  // Normalization multiplies by the cached reciprocal span, so the mapping is
  // the same arithmetic in every code path.
  std::array<double, kStateDim> s_inv_span() const {
    std::array<double, kStateDim> inv;
    for (int i = 0; i < kStateDim; ++i) {
      const auto j = static_cast<std::size_t>(i);
      inv[j] = 1.0 / (s_max[j] - s_min[j]);
    }
    return inv;
  }
  std::array<double, kActionDim> a_inv_span() const {
    std::array<double, kActionDim> inv;
    for (int i = 0; i < kActionDim; ++i) {
      const auto j = static_cast<std::size_t>(i);
      inv[j] = 1.0 / (a_max[j] - a_min[j]);
    }
    return inv;
  }

  static NormalizationSpec from_config(const Config& c) {
    NormalizationSpec n;
    for (int i = 0; i < kStateDim; ++i) {
      const std::string k = "norm.s" + std::to_string(i) + ".";
      n.s_min[static_cast<std::size_t>(i)] = c.get(k + "min", n.s_min[static_cast<std::size_t>(i)]);
      n.s_max[static_cast<std::size_t>(i)] = c.get(k + "max", n.s_max[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < kActionDim; ++i) {
      const std::string k = "norm.a" + std::to_string(i) + ".";
      n.a_min[static_cast<std::size_t>(i)] = c.get(k + "min", n.a_min[static_cast<std::size_t>(i)]);
      n.a_max[static_cast<std::size_t>(i)] = c.get(k + "max", n.a_max[static_cast<std::size_t>(i)]);
    }
    n.validate();
    return n;
  }

  void validate() const {
    for (int i = 0; i < kStateDim; ++i)
      if (!(s_min[static_cast<std::size_t>(i)] < s_max[static_cast<std::size_t>(i)]))
        throw std::runtime_error("normalization: state slot " + std::to_string(i) +
                                 " has min >= max");
    for (int i = 0; i < kActionDim; ++i)
      if (!(a_min[static_cast<std::size_t>(i)] < a_max[static_cast<std::size_t>(i)]))
        throw std::runtime_error("normalization: action component " +
                                 std::to_string(i) + " has min >= max");
  }
};

inline std::array<double, kStateDim> normalize_state(const ObservedState& s,
                                                     const NormalizationSpec& n) {
  std::array<double, kStateDim> out;
  for (int i = 0; i < kStateDim; ++i) {
    const auto j = static_cast<std::size_t>(i);
    const double inv = 1.0 / (n.s_max[j] - n.s_min[j]);
    out[j] = std::clamp((s[i] - n.s_min[j]) * inv, 0.0, 1.0);
  }
  return out;
}

inline ObservedState denormalize_state(const std::array<double, kStateDim>& v,
                                       const NormalizationSpec& n) {
  ObservedState s;
  for (int i = 0; i < kStateDim; ++i) {
    const auto j = static_cast<std::size_t>(i);
    s[i] = n.s_min[j] + std::clamp(v[j], 0.0, 1.0) * (n.s_max[j] - n.s_min[j]);
  }
  return s;
}

inline std::array<double, kActionDim> normalize_action(const VentilatorAction& a,
                                                       const NormalizationSpec& n) {
  const auto arr = a.to_array();
  std::array<double, kActionDim> out;
  for (int i = 0; i < kActionDim; ++i) {
    const auto j = static_cast<std::size_t>(i);
    const double inv = 1.0 / (n.a_max[j] - n.a_min[j]);
    out[j] = std::clamp((arr[j] - n.a_min[j]) * inv, 0.0, 1.0);
  }
  return out;
}

struct TransitionTriplet {
  ObservedState s;
  VentilatorAction a;
  ObservedState s_next;
};

struct TransitionDataset {
  std::vector<TransitionTriplet> triplets;
  std::vector<std::int32_t> episode;  // episode id per triplet
  int episode_count = 0;
};

// Roll the random policy over the cohort and collect consecutive
// state-action-state triplets; triplets never straddle episodes.
inline TransitionDataset generate_dataset(const std::vector<PatientProfile>& cohort,
                                          int runs, int steps, std::uint64_t seed,
                                          const SimParams& sim,
                                          const EnvParams& env_params,
                                          const BoundsTable& bounds,
                                          const ActionBounds& ab) {
  TransitionDataset ds;
  ds.triplets.reserve(static_cast<std::size_t>(cohort.size()) *
                      static_cast<std::size_t>(runs) *
                      static_cast<std::size_t>(steps - 1));
  std::int32_t ep = 0;
  for (int run = 0; run < runs; ++run) {
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      Rng rng(derive_seed(seed, 0xDA7A, static_cast<std::uint64_t>(run), i));
      const PolicyFn policy = [&](const PolicyContext&) { return random_action(rng, ab); };
      const EpisodeTrajectory traj =
          run_episode(policy, cohort[i], steps, sim, env_params, bounds, ab);
      for (std::size_t t = 0; t + 1 < traj.steps.size(); ++t) {
        ds.triplets.push_back({traj.steps[t].obs, traj.steps[t + 1].action,
                               traj.steps[t + 1].obs});
        ds.episode.push_back(ep);
      }
      ++ep;
    }
  }
  ds.episode_count = ep;
  return ds;
}

struct TrainValSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

// Whole-episode split so adjacent triplets never leak across the boundary.
inline TrainValSplit split_by_episode(const TransitionDataset& ds,
                                      double val_fraction, std::uint64_t seed) {
  std::vector<int> episodes(static_cast<std::size_t>(ds.episode_count));
  std::iota(episodes.begin(), episodes.end(), 0);
  Rng rng(derive_seed(seed, 0x5917));
  for (std::size_t i = episodes.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(episodes[i - 1], episodes[j]);
  }
  const auto n_val = static_cast<std::size_t>(
      std::max(1.0, std::floor(val_fraction * static_cast<double>(episodes.size()))));
  std::vector<bool> is_val(static_cast<std::size_t>(ds.episode_count), false);
  for (std::size_t i = 0; i < n_val && i < episodes.size(); ++i)
    is_val[static_cast<std::size_t>(episodes[i])] = true;
  TrainValSplit split;
  for (std::size_t i = 0; i < ds.triplets.size(); ++i) {
    if (is_val[static_cast<std::size_t>(ds.episode[i])])
      split.val.push_back(i);
    else
      split.train.push_back(i);
  }
  return split;
}

struct E2cModel {
  MlpWeights encoder;          // 27 -> 16 -> 6
  MlpWeights decoder;          // 6 -> 16 -> 27
  MlpWeights latent_dynamics;  // 12 -> 8 -> 6
  NormalizationSpec norm;
};

struct TrainParams {
  int epochs = 256;
  int batch = 64;
  double val_fraction = 0.1;
  AdamParams adam;
  double bias_init = 0.5;

  static TrainParams from_config(const Config& c) {
    TrainParams p;
    p.epochs = static_cast<int>(c.get("train.epochs", p.epochs));
    p.batch = static_cast<int>(c.get("train.batch", p.batch));
    p.val_fraction = c.get("train.val_fraction", p.val_fraction);
    p.adam.lr = c.get("train.adam_lr", p.adam.lr);
    p.adam.beta1 = c.get("train.adam_beta1", p.adam.beta1);
    p.adam.beta2 = c.get("train.adam_beta2", p.adam.beta2);
    p.adam.eps = c.get("train.adam_eps", p.adam.eps);
    p.bias_init = c.get("train.bias_init", p.bias_init);
    return p;
  }
};

struct LossPoint {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct AutoencoderResult {
  MlpWeights encoder;
  MlpWeights decoder;
  std::vector<LossPoint> losses;
  double val_rmse = 0.0;
};

struct LatentDynamicsResult {
  MlpWeights latent_dynamics;
  std::vector<LossPoint> losses;
  double val_rmse = 0.0;          // one-step prediction, normalized units
  double persistence_rmse = 0.0;  // baseline that predicts s_next = s
};

namespace detail {

inline void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.next_u64() % i)]);
}

struct NormalizedData {
  std::vector<std::array<double, kStateDim>> s;
  std::vector<std::array<double, kActionDim>> a;
  std::vector<std::array<double, kStateDim>> s_next;
};

inline NormalizedData normalize_dataset(const TransitionDataset& ds,
                                        const NormalizationSpec& n) {
  NormalizedData d;
  d.s.reserve(ds.triplets.size());
  d.a.reserve(ds.triplets.size());
  d.s_next.reserve(ds.triplets.size());
  for (const auto& t : ds.triplets) {
    d.s.push_back(normalize_state(t.s, n));
    d.a.push_back(normalize_action(t.a, n));
    d.s_next.push_back(normalize_state(t.s_next, n));
  }
  return d;
}

}  // namespace detail

// Stage one: minimize the mean squared reconstruction error of normalized
// states. Returns the trained pair plus the per-epoch loss curve.
inline AutoencoderResult train_autoencoder(const TransitionDataset& ds,
                                           const NormalizationSpec& norm,
                                           const TrainParams& tp,
                                           std::uint64_t seed) {
  if (ds.triplets.empty()) throw std::invalid_argument("train_autoencoder: empty dataset");
  const detail::NormalizedData data = detail::normalize_dataset(ds, norm);
  const TrainValSplit split = split_by_episode(ds, tp.val_fraction, seed);

  Rng rng(derive_seed(seed, 0xAE));
  AutoencoderResult res;
  res.encoder = mlp_init({kStateDim, 16, kLatentDim}, rng, tp.bias_init);
  res.decoder = mlp_init({kLatentDim, 16, kStateDim}, rng, tp.bias_init);
  AdamState enc_opt = AdamState::zeros_like(res.encoder);
  AdamState dec_opt = AdamState::zeros_like(res.decoder);

  std::vector<std::size_t> order = split.train;
  MlpActivations enc_acts, dec_acts;
  std::vector<double> x(kStateDim), up(kStateDim), gz;
  const auto batch = static_cast<std::size_t>(tp.batch);

  auto val_mse = [&]() {
    double se = 0.0;
    for (std::size_t i : split.val) {
      const auto& xs = data.s[i];
      const auto z = mlp_forward(res.encoder, std::vector<double>(xs.begin(), xs.end()));
      const auto y = mlp_forward(res.decoder, z);
      for (int j = 0; j < kStateDim; ++j) {
        const double d = y[static_cast<std::size_t>(j)] - xs[static_cast<std::size_t>(j)];
        se += d * d;
      }
    }
    return se / (static_cast<double>(split.val.size()) * kStateDim);
  };

  for (int epoch = 0; epoch < tp.epochs; ++epoch) {
    detail::shuffle_indices(order, rng);
    double train_se = 0.0;
    std::size_t train_n = 0;
    for (std::size_t start = 0; start + batch <= order.size(); start += batch) {
      MlpGradients genc = MlpGradients::zeros_like(res.encoder);
      MlpGradients gdec = MlpGradients::zeros_like(res.decoder);
      for (std::size_t k = 0; k < batch; ++k) {
        const auto& xs = data.s[order[start + k]];
        x.assign(xs.begin(), xs.end());
        mlp_forward_cached(res.encoder, x, enc_acts);
        mlp_forward_cached(res.decoder, enc_acts.a.back(), dec_acts);
        const auto& y = dec_acts.a.back();
        for (int j = 0; j < kStateDim; ++j) {
          const double d = y[static_cast<std::size_t>(j)] - xs[static_cast<std::size_t>(j)];
          up[static_cast<std::size_t>(j)] =
              2.0 * d / (static_cast<double>(batch) * kStateDim);
          train_se += d * d;
        }
        mlp_gradient(res.decoder, dec_acts, up, gdec, &gz);
        mlp_gradient(res.encoder, enc_acts, gz, genc, nullptr);
      }
      train_n += batch;
      adam_step(res.decoder, gdec, dec_opt, tp.adam);
      adam_step(res.encoder, genc, enc_opt, tp.adam);
    }
    res.losses.push_back({epoch, train_se / (static_cast<double>(train_n) * kStateDim),
                          val_mse()});
  }
  res.val_rmse = std::sqrt(res.losses.back().val_mse);
  return res;
}

// Stage two: the autoencoder weights stay frozen; the latent dynamics net is
// trained so decoding its prediction matches the normalized next state.
inline LatentDynamicsResult train_latent_dynamics(const TransitionDataset& ds,
                                                  const MlpWeights& encoder,
                                                  const MlpWeights& decoder,
                                                  const NormalizationSpec& norm,
                                                  const TrainParams& tp,
                                                  std::uint64_t seed) {
  if (ds.triplets.empty())
    throw std::invalid_argument("train_latent_dynamics: empty dataset");
  const detail::NormalizedData data = detail::normalize_dataset(ds, norm);
  const TrainValSplit split = split_by_episode(ds, tp.val_fraction, seed);

  Rng rng(derive_seed(seed, 0xD79));
  LatentDynamicsResult res;
  res.latent_dynamics = mlp_init({kLatentDim + kActionDim, 8, kLatentDim}, rng,
                                 tp.bias_init);
  AdamState opt = AdamState::zeros_like(res.latent_dynamics);

  std::vector<std::size_t> order = split.train;
  MlpActivations enc_acts, dyn_acts, dec_acts;
  std::vector<double> x(kStateDim), din(kLatentDim + kActionDim), up(kStateDim), gz;
  const auto batch = static_cast<std::size_t>(tp.batch);

  auto predict_norm = [&](std::size_t i, std::vector<double>& out) {
    const auto& xs = data.s[i];
    x.assign(xs.begin(), xs.end());
    mlp_forward_cached(encoder, x, enc_acts);
    const auto& z = enc_acts.a.back();
    for (int j = 0; j < kLatentDim; ++j) din[static_cast<std::size_t>(j)] = z[static_cast<std::size_t>(j)];
    for (int j = 0; j < kActionDim; ++j)
      din[static_cast<std::size_t>(kLatentDim + j)] = data.a[i][static_cast<std::size_t>(j)];
    mlp_forward_cached(res.latent_dynamics, din, dyn_acts);
    mlp_forward_cached(decoder, dyn_acts.a.back(), dec_acts);
    out = dec_acts.a.back();
  };

  auto eval_mse = [&](const std::vector<std::size_t>& idx, bool persistence) {
    double se = 0.0;
    std::vector<double> y;
    for (std::size_t i : idx) {
      if (!persistence) predict_norm(i, y);
      for (int j = 0; j < kStateDim; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const double pred = persistence ? data.s[i][jj] : y[jj];
        const double d = pred - data.s_next[i][jj];
        se += d * d;
      }
    }
    return se / (static_cast<double>(idx.size()) * kStateDim);
  };

  for (int epoch = 0; epoch < tp.epochs; ++epoch) {
    detail::shuffle_indices(order, rng);
    double train_se = 0.0;
    std::size_t train_n = 0;
    for (std::size_t start = 0; start + batch <= order.size(); start += batch) {
      MlpGradients gdyn = MlpGradients::zeros_like(res.latent_dynamics);
      MlpGradients gdec_discard = MlpGradients::zeros_like(decoder);
      for (std::size_t k = 0; k < batch; ++k) {
        const std::size_t i = order[start + k];
        std::vector<double> y;
        predict_norm(i, y);
        for (int j = 0; j < kStateDim; ++j) {
          const auto jj = static_cast<std::size_t>(j);
          const double d = y[jj] - data.s_next[i][jj];
          up[jj] = 2.0 * d / (static_cast<double>(batch) * kStateDim);
          train_se += d * d;
        }
        // gradients flow through the frozen decoder but are not applied to it
        mlp_gradient(decoder, dec_acts, up, gdec_discard, &gz);
        mlp_gradient(res.latent_dynamics, dyn_acts, gz, gdyn, nullptr);
      }
      train_n += batch;
      adam_step(res.latent_dynamics, gdyn, opt, tp.adam);
    }
    res.losses.push_back({epoch, train_se / (static_cast<double>(train_n) * kStateDim),
                          eval_mse(split.val, false)});
  }
  res.val_rmse = std::sqrt(res.losses.back().val_mse);
  res.persistence_rmse = std::sqrt(eval_mse(split.val, true));
  return res;
}

namespace detail {
// Fixed-size two-layer evaluation in the canonical dot-product order.
template <int In, int Hid, int Out>
inline void two_layer_relu(const MlpWeights& net, const double* x, double* y) {
  double h[Hid];
  const double* w1 = net.w[0].data();
  const double* b1 = net.b[0].data();
  for (int o = 0; o < Hid; ++o) {
    const double s = dot_mod4(w1 + o * In, x, In, b1[o]);
    h[o] = s > 0.0 ? s : 0.0;
  }
  const double* w2 = net.w[1].data();
  const double* b2 = net.b[1].data();
  for (int o = 0; o < Out; ++o) {
    const double s = dot_mod4(w2 + o * Hid, h, Hid, b2[o]);
    y[o] = s > 0.0 ? s : 0.0;
  }
}
}  // namespace detail

// Eq.-style learned one-step prediction: normalize, encode, advance in latent
// space with the action appended, decode, denormalize.
inline ObservedState learned_predict(const E2cModel& m, const ObservedState& s,
                                     const VentilatorAction& a) {
  const auto sn = normalize_state(s, m.norm);
  const auto an = normalize_action(a, m.norm);
  double din[kLatentDim + kActionDim];
  detail::two_layer_relu<kStateDim, 16, kLatentDim>(m.encoder, sn.data(), din);
  for (int i = 0; i < kActionDim; ++i)
    din[kLatentDim + i] = an[static_cast<std::size_t>(i)];
  double zn[kLatentDim];
  detail::two_layer_relu<kLatentDim + kActionDim, 8, kLatentDim>(
      m.latent_dynamics, din, zn);
  std::array<double, kStateDim> yn;
  detail::two_layer_relu<kLatentDim, 16, kStateDim>(m.decoder, zn, yn.data());
  return denormalize_state(yn, m.norm);
}

namespace detail {
// Column-major layer copy used by the inference hot path. Iterating the input
// index outermost turns the update into vectorizable output-wise accumulation
// while keeping each output's summation order identical to the row-major
// reference loop. Sizes are compile-time so the accumulators live in
// registers.
template <int In, int Out, int OutPad = (Out + 3) & ~3>
struct TransposedLayer {
  static constexpr int kIn = In;
  static constexpr int kOutPad = OutPad;
  std::array<double, static_cast<std::size_t>(In) * OutPad> wt{};  // wt[i*OutPad+o]
  std::array<double, OutPad> bias{};

  void build(const MlpWeights& net, int layer) {
    const auto l = static_cast<std::size_t>(layer);
    if (net.sizes[l] != In || net.sizes[l + 1] != Out)
      throw std::logic_error("transposed layer size mismatch");
    for (int o = 0; o < Out; ++o) {
      bias[static_cast<std::size_t>(o)] = net.b[l][static_cast<std::size_t>(o)];
      for (int i = 0; i < In; ++i)
        wt[static_cast<std::size_t>(i) * OutPad + static_cast<std::size_t>(o)] =
            net.w[l][static_cast<std::size_t>(o) * In + static_cast<std::size_t>(i)];
    }
  }

  void apply_relu(const double* x, double* y) const {
    static_assert(In >= 4, "layer too narrow for the blocked kernel");
    // four accumulator sets, one per index class i mod 4, matching dot_mod4;
    // the first block initializes them so no zero fill is needed
    double p0[OutPad], p1[OutPad], p2[OutPad], p3[OutPad];
    const double* row = wt.data();
    {
      const double x0 = x[0], x1 = x[1], x2 = x[2], x3 = x[3];
      for (int o = 0; o < OutPad; ++o) {
        p0[o] = row[o] * x0;
        p1[o] = row[OutPad + o] * x1;
        p2[o] = row[2 * OutPad + o] * x2;
        p3[o] = row[3 * OutPad + o] * x3;
      }
      row += 4 * OutPad;
    }
    for (int i = 4; i + 4 <= In; i += 4, row += 4 * OutPad) {
      const double x0 = x[i], x1 = x[i + 1], x2 = x[i + 2], x3 = x[i + 3];
      for (int o = 0; o < OutPad; ++o) {
        p0[o] += row[o] * x0;
        p1[o] += row[OutPad + o] * x1;
        p2[o] += row[2 * OutPad + o] * x2;
        p3[o] += row[3 * OutPad + o] * x3;
      }
    }
    if constexpr ((In & 3) != 0) {
      constexpr int base = In & ~3;
      const double* r = wt.data() + static_cast<std::size_t>(base) * OutPad;
      if constexpr ((In & 3) > 0) {
        const double xv = x[base];
        for (int o = 0; o < OutPad; ++o) p0[o] += r[o] * xv;
      }
      if constexpr ((In & 3) > 1) {
        const double xv = x[base + 1];
        for (int o = 0; o < OutPad; ++o) p1[o] += r[OutPad + o] * xv;
      }
      if constexpr ((In & 3) > 2) {
        const double xv = x[base + 2];
        for (int o = 0; o < OutPad; ++o) p2[o] += r[2 * OutPad + o] * xv;
      }
    }
    for (int o = 0; o < OutPad; ++o) {
      const double s = bias[static_cast<std::size_t>(o)] + ((p0[o] + p1[o]) + (p2[o] + p3[o]));
      y[o] = s > 0.0 ? s : 0.0;
    }
  }
};
}  // namespace detail

// Precomputed inference form of the learned model; produces bit-identical
// predictions to learned_predict.
class E2cFastEval {
 public:
  explicit E2cFastEval(const E2cModel& m)
      : norm_(m.norm), s_inv_(m.norm.s_inv_span()), a_inv_(m.norm.a_inv_span()) {
    enc1_.build(m.encoder, 0);
    enc2_.build(m.encoder, 1);
    dyn1_.build(m.latent_dynamics, 0);
    dyn2_.build(m.latent_dynamics, 1);
    dec1_.build(m.decoder, 0);
    dec2_.build(m.decoder, 1);
  }

  ObservedState predict(const ObservedState& s, const VentilatorAction& a) const {
    double sn[kStateDim];
    for (int i = 0; i < kStateDim; ++i) {
      const auto j = static_cast<std::size_t>(i);
      sn[i] = std::clamp((s[i] - norm_.s_min[j]) * s_inv_[j], 0.0, 1.0);
    }
    double h[32], din[16], z[8], yn_pad[28];
    enc1_.apply_relu(sn, h);
    enc2_.apply_relu(h, din);
    const auto arr = a.to_array();
    for (int i = 0; i < kActionDim; ++i) {
      const auto j = static_cast<std::size_t>(i);
      din[kLatentDim + i] =
          std::clamp((arr[j] - norm_.a_min[j]) * a_inv_[j], 0.0, 1.0);
    }
    dyn1_.apply_relu(din, h);
    dyn2_.apply_relu(h, z);
    dec1_.apply_relu(z, h);
    dec2_.apply_relu(h, yn_pad);
    ObservedState out;
    for (int i = 0; i < kStateDim; ++i) {
      const auto j = static_cast<std::size_t>(i);
      out[i] = norm_.s_min[j] +
               std::clamp(yn_pad[i], 0.0, 1.0) * (norm_.s_max[j] - norm_.s_min[j]);
    }
    return out;
  }

 private:
  NormalizationSpec norm_;
  std::array<double, kStateDim> s_inv_;
  std::array<double, kActionDim> a_inv_;
  detail::TransposedLayer<kStateDim, 16> enc1_;
  detail::TransposedLayer<16, kLatentDim> enc2_;
  detail::TransposedLayer<kLatentDim + kActionDim, 8> dyn1_;
  detail::TransposedLayer<8, kLatentDim> dyn2_;
  detail::TransposedLayer<kLatentDim, 16> dec1_;
  detail::TransposedLayer<16, kStateDim> dec2_;
};

class LearnedDynamics final : public DynamicsModel {
 public:
  explicit LearnedDynamics(E2cModel model)
      : model_(std::move(model)), fast_(model_) {}
  std::string_view tag() const override { return "learned"; }
  void reset(const ObservedState&) override {}
  ObservedState predict(const ObservedState& s, const VentilatorAction& a) override {
    return fast_.predict(s, a);
  }
  const E2cModel& model() const { return model_; }

 private:
  E2cModel model_;
  E2cFastEval fast_;
};

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace detail {
inline void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("unexpected end of file");
  return v;
}
inline void write_f64(std::ostream& out, const double* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}
inline void read_f64(std::istream& in, double* p, std::size_t n) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw std::runtime_error("unexpected end of file");
}
}  // namespace detail

inline constexpr char kDatasetMagic[8] = {'V', 'B', 'T', 'D', 'S', '0', '0', '1'};
inline constexpr std::uint32_t kDatasetVersion = 1;

// Binary fast path: 16-byte magic/version header, then the triplet count and
// per-triplet episode id plus the 60 doubles.
inline void save_dataset_binary(const TransitionDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  out.write(kDatasetMagic, sizeof kDatasetMagic);
  detail::write_u32(out, kDatasetVersion);
  detail::write_u32(out, 0);  // reserved
  const auto n = static_cast<std::uint64_t>(ds.triplets.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  detail::write_u32(out, static_cast<std::uint32_t>(ds.episode_count));
  for (std::size_t i = 0; i < ds.triplets.size(); ++i) {
    detail::write_u32(out, static_cast<std::uint32_t>(ds.episode[i]));
    const auto& t = ds.triplets[i];
    detail::write_f64(out, t.s.v.data(), kStateDim);
    const auto a = t.a.to_array();
    detail::write_f64(out, a.data(), kActionDim);
    detail::write_f64(out, t.s_next.v.data(), kStateDim);
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline TransitionDataset load_dataset_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kDatasetMagic, sizeof magic) != 0)
    throw std::runtime_error(path + ": not a dataset file (bad magic)");
  const std::uint32_t version = detail::read_u32(in);
  if (version != kDatasetVersion)
    throw std::runtime_error(path + ": unsupported dataset version " +
                             std::to_string(version));
  detail::read_u32(in);  // reserved
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in) throw std::runtime_error(path + ": truncated header");
  TransitionDataset ds;
  ds.episode_count = static_cast<int>(detail::read_u32(in));
  ds.triplets.resize(n);
  ds.episode.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    ds.episode[i] = static_cast<std::int32_t>(detail::read_u32(in));
    auto& t = ds.triplets[i];
    detail::read_f64(in, t.s.v.data(), kStateDim);
    std::array<double, kActionDim> a;
    detail::read_f64(in, a.data(), kActionDim);
    t.a = VentilatorAction::from_array(a);
    detail::read_f64(in, t.s_next.v.data(), kStateDim);
  }
  return ds;
}

// Row-per-triplet CSV with header s0..s26,a0..a5,sn0..sn26. Episode structure
// is not part of this format; the loader reconstructs it from the block
// length, so the row count must be divisible by steps-1.
inline void save_dataset_csv(const TransitionDataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset file: " + path);
  for (int i = 0; i < kStateDim; ++i) out << (i ? "," : "") << "s" << i;
  for (int i = 0; i < kActionDim; ++i) out << ",a" << i;
  for (int i = 0; i < kStateDim; ++i) out << ",sn" << i;
  out << "\n";
  char buf[32];
  auto emit = [&](double v, bool lead_comma) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (lead_comma) out << ',';
    out << buf;
  };
  for (const auto& t : ds.triplets) {
    for (int i = 0; i < kStateDim; ++i) emit(t.s[i], i > 0);
    const auto a = t.a.to_array();
    for (int i = 0; i < kActionDim; ++i) emit(a[static_cast<std::size_t>(i)], true);
    for (int i = 0; i < kStateDim; ++i) emit(t.s_next[i], true);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline TransitionDataset load_dataset_csv(const std::string& path,
                                          int triplets_per_episode) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  TransitionDataset ds;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TransitionTriplet t;
    std::array<double, kActionDim> a;
    std::size_t pos = 0;
    auto next = [&]() {
      const auto comma = line.find(',', pos);
      const std::string cell = line.substr(pos, comma - pos);
      pos = comma == std::string::npos ? line.size() : comma + 1;
      return std::stod(cell);
    };
    for (int i = 0; i < kStateDim; ++i) t.s[i] = next();
    for (int i = 0; i < kActionDim; ++i) a[static_cast<std::size_t>(i)] = next();
    for (int i = 0; i < kStateDim; ++i) t.s_next[i] = next();
    t.a = VentilatorAction::from_array(a);
    ds.triplets.push_back(t);
  }
  if (triplets_per_episode < 1 ||
      ds.triplets.size() % static_cast<std::size_t>(triplets_per_episode) != 0)
    throw std::runtime_error(path + ": row count is not a multiple of " +
                             std::to_string(triplets_per_episode));
  ds.episode.resize(ds.triplets.size());
  for (std::size_t i = 0; i < ds.triplets.size(); ++i)
    ds.episode[i] = static_cast<std::int32_t>(i / static_cast<std::size_t>(triplets_per_episode));
  ds.episode_count = static_cast<int>(ds.triplets.size() /
                                      static_cast<std::size_t>(triplets_per_episode));
  return ds;
}

inline void save_loss_csv(const std::vector<LossPoint>& losses,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write loss file: " + path);
  out << "epoch,train_mse,val_mse\n";
  char buf[96];
  for (const auto& l : losses) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", l.epoch, l.train_mse, l.val_mse);
    out << buf;
  }
}

inline constexpr char kModelMagic[8] = {'V', 'B', 'E', '2', 'C', 'W', '0', '1'};
inline constexpr std::uint32_t kModelVersion = 1;

// Flat binary: magic, version, then for each of the three nets the layer
// sizes followed by row-major weight matrices and bias vectors, then the
// normalization ranges.
inline void save_model(const E2cModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out.write(kModelMagic, sizeof kModelMagic);
  detail::write_u32(out, kModelVersion);
  detail::write_u32(out, 3);
  for (const MlpWeights* net : {&m.encoder, &m.decoder, &m.latent_dynamics}) {
    detail::write_u32(out, static_cast<std::uint32_t>(net->sizes.size()));
    for (int s : net->sizes) detail::write_u32(out, static_cast<std::uint32_t>(s));
    for (int l = 0; l < net->layer_count(); ++l) {
      const auto li = static_cast<std::size_t>(l);
      detail::write_f64(out, net->w[li].data(), net->w[li].size());
      detail::write_f64(out, net->b[li].data(), net->b[li].size());
    }
  }
  detail::write_u32(out, kStateDim);
  detail::write_f64(out, m.norm.s_min.data(), kStateDim);
  detail::write_f64(out, m.norm.s_max.data(), kStateDim);
  detail::write_u32(out, kActionDim);
  detail::write_f64(out, m.norm.a_min.data(), kActionDim);
  detail::write_f64(out, m.norm.a_max.data(), kActionDim);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline E2cModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kModelMagic, sizeof magic) != 0)
    throw std::runtime_error(path + ": not a model file (bad magic)");
  const std::uint32_t version = detail::read_u32(in);
  if (version != kModelVersion)
    throw std::runtime_error(path + ": unsupported model version " +
                             std::to_string(version));
  if (detail::read_u32(in) != 3)
    throw std::runtime_error(path + ": expected 3 networks");
  E2cModel m;
  const std::vector<std::vector<int>> expected = {
      {kStateDim, 16, kLatentDim},
      {kLatentDim, 16, kStateDim},
      {kLatentDim + kActionDim, 8, kLatentDim}};
  MlpWeights* nets[3] = {&m.encoder, &m.decoder, &m.latent_dynamics};
  for (int n = 0; n < 3; ++n) {
    const std::uint32_t nsizes = detail::read_u32(in);
    std::vector<int> sizes(nsizes);
    for (auto& s : sizes) s = static_cast<int>(detail::read_u32(in));
    if (sizes != expected[static_cast<std::size_t>(n)])
      throw std::runtime_error(path + ": unexpected layer sizes in network " +
                               std::to_string(n));
    nets[n]->sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const auto in_n = static_cast<std::size_t>(sizes[l]);
      const auto out_n = static_cast<std::size_t>(sizes[l + 1]);
      std::vector<double> w(in_n * out_n), b(out_n);
      detail::read_f64(in, w.data(), w.size());
      detail::read_f64(in, b.data(), b.size());
      nets[n]->w.push_back(std::move(w));
      nets[n]->b.push_back(std::move(b));
    }
  }
  if (detail::read_u32(in) != kStateDim)
    throw std::runtime_error(path + ": normalization block mismatch");
  detail::read_f64(in, m.norm.s_min.data(), kStateDim);
  detail::read_f64(in, m.norm.s_max.data(), kStateDim);
  if (detail::read_u32(in) != kActionDim)
    throw std::runtime_error(path + ": normalization block mismatch");
  detail::read_f64(in, m.norm.a_min.data(), kActionDim);
  detail::read_f64(in, m.norm.a_max.data(), kActionDim);
  m.norm.validate();
  return m;
}

}  // namespace ventbench
