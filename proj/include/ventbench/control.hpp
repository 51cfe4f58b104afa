#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "ventbench/protocols.hpp"
#include "ventbench/reward.hpp"
#include "ventbench/rng.hpp"
#include "ventbench/sim.hpp"

namespace ventbench {

// One-step dynamics used by the sampling controllers. reset() starts a new
// rollout from the given observation; predict() advances it by one action.
// The learned model is a pure function of (s, a); the exact model carries the
// simulator's hidden state, seeded from the environment before each decision.
class DynamicsModel {
 public:
  virtual ~DynamicsModel() = default;
  virtual std::string_view tag() const = 0;
  virtual void reset(const ObservedState& s0) = 0;
  virtual ObservedState predict(const ObservedState& s, const VentilatorAction& a) = 0;
};

class ExactDynamics final : public DynamicsModel {
 public:
  ExactDynamics(const SimParams& sim, double dt_min) : sim_(sim), dt_min_(dt_min) {}

  // Called by the controller adapter with the environment's current state.
  void set_snapshot(const PhysioState& s) { snapshot_ = s; }

  std::string_view tag() const override { return "exact"; }
  void reset(const ObservedState&) override { rollout_ = snapshot_; }
  ObservedState predict(const ObservedState&, const VentilatorAction& a) override {
    rollout_ = step(rollout_, a, dt_min_, sim_);
    return observe(rollout_, a, sim_);
  }

 private:
  SimParams sim_;
  double dt_min_;
  PhysioState snapshot_;
  PhysioState rollout_;
};

struct ActionSequence {
  std::vector<VentilatorAction> actions;
};

struct RolloutResult {
  double total_reward = 0.0;
  std::vector<ObservedState> states;
};

struct ControlParams {
  int samples = 32;        // K
  int horizon = 4;         // H
  double lambda = 1.0;     // MPPI inverse temperature
  double gamma = 0.2;      // rollout reward discount

  static ControlParams from_config(const Config& c) {
    ControlParams p;
    p.samples = static_cast<int>(c.get("control.samples", p.samples));
    p.horizon = static_cast<int>(c.get("control.horizon", p.horizon));
    p.lambda = c.get("control.lambda", p.lambda);
    p.gamma = c.get("control.gamma", p.gamma);
    return p;
  }
};

inline std::vector<ActionSequence> sample_sequences(int k, int h, Rng& rng,
                                                    const ActionBounds& b) {
  if (k < 1 || h < 1)
    throw std::invalid_argument("sample_sequences: K and H must be >= 1");
  std::vector<ActionSequence> out(static_cast<std::size_t>(k));
  for (auto& seq : out) {
    seq.actions.reserve(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) seq.actions.push_back(random_action(rng, b));
  }
  return out;
}

inline RolloutResult rollout(DynamicsModel& model, const ObservedState& s0,
                             const ActionSequence& seq,
                             const MarkerBoundsSet& bounds,
                             const ActionBounds& action_bounds, double gamma) {
  RolloutResult r;
  r.states.reserve(seq.actions.size());
  model.reset(s0);
  ObservedState s = s0;
  double weight = 1.0;
  for (const VentilatorAction& a : seq.actions) {
    s = model.predict(s, a);
    if (!s.finite()) {
      r.total_reward = -std::numeric_limits<double>::infinity();
      return r;
    }
    r.states.push_back(s);
    r.total_reward += weight * reward_total(s, a, bounds, action_bounds);
    weight *= gamma;
  }
  return r;
}

namespace detail {
// Reward-only rollout; same arithmetic as rollout() without recording states.
inline double rollout_total(DynamicsModel& model, const ObservedState& s0,
                            const ActionSequence& seq,
                            const MarkerBoundsSet& bounds,
                            const ActionBounds& action_bounds, double gamma) {
  model.reset(s0);
  ObservedState s = s0;
  double total = 0.0;
  double weight = 1.0;
  for (const VentilatorAction& a : seq.actions) {
    s = model.predict(s, a);
    if (!s.finite()) return -std::numeric_limits<double>::infinity();
    total += weight * reward_total(s, a, bounds, action_bounds);
    weight *= gamma;
  }
  return total;
}

inline std::vector<double> rollout_rewards(DynamicsModel& model,
                                           const ObservedState& s,
                                           const std::vector<ActionSequence>& seqs,
                                           const MarkerBoundsSet& bounds,
                                           const ActionBounds& ab, double gamma) {
  std::vector<double> rewards;
  rewards.reserve(seqs.size());
  for (const ActionSequence& seq : seqs)
    rewards.push_back(rollout_total(model, s, seq, bounds, ab, gamma));
  return rewards;
}
}  // namespace detail

// Sampling MPC: execute the first action of the best sampled sequence.
// Ties break to the lowest sample index. If every rollout diverges, the
// caller-provided fallback action is returned.
inline VentilatorAction smpc(DynamicsModel& model, const ObservedState& s,
                             int k, int h, Rng& rng,
                             const MarkerBoundsSet& bounds,
                             const ActionBounds& ab, double gamma,
                             std::optional<VentilatorAction> fallback = {}) {
  const auto seqs = sample_sequences(k, h, rng, ab);
  const auto rewards = detail::rollout_rewards(model, s, seqs, bounds, ab, gamma);
  int best = -1;
  double best_r = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(rewards.size()); ++i) {
    if (std::isfinite(rewards[static_cast<std::size_t>(i)]) &&
        rewards[static_cast<std::size_t>(i)] > best_r) {
      best_r = rewards[static_cast<std::size_t>(i)];
      best = i;
    }
  }
  if (best < 0) {
    if (fallback) return *fallback;
    throw std::runtime_error("smpc: every rollout diverged and no fallback was given");
  }
  return seqs[static_cast<std::size_t>(best)].actions.front();
}

// Path-integral variant: exponentially reward-weighted average of the
// sampled first actions, computed with a max-shift so weights are stable.
// lambda -> infinity recovers the smpc argmax; lambda = 0 is the plain mean.
inline VentilatorAction mppi(DynamicsModel& model, const ObservedState& s,
                             int k, int h, double lambda, Rng& rng,
                             const MarkerBoundsSet& bounds,
                             const ActionBounds& ab, double gamma,
                             std::optional<VentilatorAction> fallback = {}) {
  if (lambda < 0.0) throw std::invalid_argument("mppi: lambda must be >= 0");
  const auto seqs = sample_sequences(k, h, rng, ab);
  const auto rewards = detail::rollout_rewards(model, s, seqs, bounds, ab, gamma);
  double max_r = -std::numeric_limits<double>::infinity();
  for (double r : rewards)
    if (std::isfinite(r) && r > max_r) max_r = r;
  if (!std::isfinite(max_r)) {
    if (fallback) return *fallback;
    throw std::runtime_error("mppi: every rollout diverged and no fallback was given");
  }
  double wsum = 0.0;
  std::array<double, 6> acc{};
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (!std::isfinite(rewards[i])) continue;
    const double w = std::exp(lambda * (rewards[i] - max_r));
    const auto arr = seqs[i].actions.front().to_array();
    for (int j = 0; j < 6; ++j) acc[static_cast<std::size_t>(j)] += w * arr[static_cast<std::size_t>(j)];
    wsum += w;
  }
  for (double& x : acc) x /= wsum;
  return repair_action(VentilatorAction::from_array(acc), ab);
}

}  // namespace ventbench
