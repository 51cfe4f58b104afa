#pragma once

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ventbench/protocols.hpp"
#include "ventbench/reward.hpp"
#include "ventbench/sim.hpp"
#include "ventbench/types.hpp"

namespace ventbench {

struct StepRecord {
  ObservedState obs;       // observation after the action took effect
  VentilatorAction action; // repaired action actually applied
  double reward = 0.0;     // reward_total(obs, action)
  PhysioState physio;      // hidden state snapshot after the step
};

struct EpisodeTrajectory {
  std::vector<StepRecord> steps;
  double total_reward = 0.0;
};

struct EnvParams {
  double dt_min = 30.0;
  int horizon = 96;

  static EnvParams from_config(const Config& c) {
    EnvParams p;
    p.dt_min = c.get("env.dt_min", p.dt_min);
    p.horizon = static_cast<int>(c.get("env.horizon", p.horizon));
    return p;
  }
};

// One patient episode. Applies repaired actions at a fixed decision interval
// and records the trajectory; the reward at each step scores the state the
// action produced.
class Environment {
 public:
  Environment(const PatientProfile& profile, const SimParams& sim,
              const EnvParams& env, const BoundsTable& bounds,
              const ActionBounds& action_bounds)
      : profile_(profile),
        sim_(sim),
        env_(env),
        bounds_(bounds.resolve(profile.sex, profile.age)),
        action_bounds_(action_bounds),
        physio_(derive_physiology(profile, sim)) {
    initial_obs_ = observe(physio_, initial_action(), sim_);
  }

  // Room-air resting settings used only to render the pre-treatment
  // observation the first decision is based on.
  static VentilatorAction initial_action() {
    return VentilatorAction{0.21, 2.0, 1.0, 12.0, 1.0, 0.5};
  }

  const ObservedState& initial_observation() const { return initial_obs_; }
  const PhysioState& physio() const { return physio_; }
  const PatientProfile& profile() const { return profile_; }
  const MarkerBoundsSet& marker_bounds() const { return bounds_; }
  const ActionBounds& action_bounds() const { return action_bounds_; }
  const SimParams& sim_params() const { return sim_; }
  double dt_min() const { return env_.dt_min; }
  int horizon() const { return env_.horizon; }
  bool finished() const { return static_cast<int>(trajectory_.steps.size()) >= env_.horizon; }
  const EpisodeTrajectory& trajectory() const { return trajectory_; }

  std::pair<ObservedState, double> step(const VentilatorAction& raw) {
    if (finished())
      throw std::logic_error("env_step: episode already ran its full horizon");
    const VentilatorAction a = repair_action(raw, action_bounds_);
    physio_ = ventbench::step(physio_, a, env_.dt_min, sim_);
    const ObservedState obs = observe(physio_, a, sim_);
    const double r = reward_total(obs, a, bounds_, action_bounds_);
    trajectory_.steps.push_back({obs, a, r, physio_});
    trajectory_.total_reward += r;
    return {obs, r};
  }

 private:
  PatientProfile profile_;
  SimParams sim_;
  EnvParams env_;
  MarkerBoundsSet bounds_;
  ActionBounds action_bounds_;
  PhysioState physio_;
  ObservedState initial_obs_;
  EpisodeTrajectory trajectory_;
};

// A policy maps the current observation (plus privileged simulator access for
// model-based controllers) to the next action.
struct PolicyContext {
  const ObservedState& obs;
  const PhysioState& physio;
  const PatientProfile& profile;
  int step_index;
};

using PolicyFn = std::function<VentilatorAction(const PolicyContext&)>;

inline EpisodeTrajectory run_episode(const PolicyFn& policy,
                                     const PatientProfile& profile,
                                     int steps, const SimParams& sim,
                                     const EnvParams& env_params,
                                     const BoundsTable& bounds,
                                     const ActionBounds& action_bounds) {
  if (steps < 1) throw std::invalid_argument("run_episode: steps must be >= 1");
  EnvParams ep = env_params;
  ep.horizon = steps;
  Environment env(profile, sim, ep, bounds, action_bounds);
  ObservedState obs = env.initial_observation();
  for (int t = 0; t < steps; ++t) {
    const VentilatorAction a = policy({obs, env.physio(), profile, t});
    if (!a.finite())
      throw std::runtime_error("run_episode: policy produced a non-finite action at step " +
                               std::to_string(t));
    obs = env.step(a).first;
  }
  return env.trajectory();
}

}  // namespace ventbench
