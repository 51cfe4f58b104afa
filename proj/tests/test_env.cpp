#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "ventbench/env.hpp"

using namespace ventbench;

namespace {
struct Fixture {
  SimParams sim;
  EnvParams env;
  BoundsTable bounds;
  ActionBounds ab;
  PatientProfile prof{Sex::kFemale, 34, 164.0, 0.5};
};
}  // namespace

TEST_CASE("an episode runs its horizon and then refuses to step") {
  Fixture f;
  f.env.horizon = 96;
  Environment env(f.prof, f.sim, f.env, f.bounds, f.ab);
  const VentilatorAction a{0.4, 18, 1.0, 15, 8, 0.5};
  for (int t = 0; t < 96; ++t) {
    REQUIRE_FALSE(env.finished());
    env.step(a);
  }
  CHECK(env.finished());
  CHECK(env.trajectory().steps.size() == 96);
  CHECK_THROWS_AS(env.step(a), std::logic_error);
}

TEST_CASE("the recorded reward scores the post-action state") {
  Fixture f;
  f.env.horizon = 4;
  Environment env(f.prof, f.sim, f.env, f.bounds, f.ab);
  const VentilatorAction raw{0.4, 18, 1.0, 15, 8, 0.5};
  const auto [obs, r] = env.step(raw);
  const auto repaired = repair_action(raw, f.ab);
  CHECK(r == reward_total(obs, repaired, env.marker_bounds(), f.ab));
  CHECK(env.trajectory().steps.back().reward == r);
}

TEST_CASE("identical action sequences give identical trajectories") {
  Fixture f;
  f.env.horizon = 20;
  Rng rng(9);
  std::vector<VentilatorAction> actions;
  for (int t = 0; t < 20; ++t) actions.push_back(random_action(rng, f.ab));
  auto run = [&]() {
    Environment env(f.prof, f.sim, f.env, f.bounds, f.ab);
    for (const auto& a : actions) env.step(a);
    return env.trajectory();
  };
  const auto t1 = run();
  const auto t2 = run();
  REQUIRE(t1.steps.size() == t2.steps.size());
  CHECK(t1.total_reward == t2.total_reward);
  for (std::size_t i = 0; i < t1.steps.size(); ++i) {
    CHECK(t1.steps[i].obs.v == t2.steps[i].obs.v);
    CHECK(t1.steps[i].reward == t2.steps[i].reward);
  }
}

TEST_CASE("episode runner returns a full trajectory") {
  Fixture f;
  const VentilatorAction a{0.4, 18, 1.0, 15, 8, 0.5};
  const auto traj = run_episode([&](const PolicyContext&) { return a; }, f.prof,
                                96, f.sim, f.env, f.bounds, f.ab);
  CHECK(traj.steps.size() == 96);
  double sum = 0.0;
  for (const auto& s : traj.steps) sum += s.reward;
  CHECK(traj.total_reward == Catch::Approx(sum).margin(1e-9));
}

TEST_CASE("96 half-hour decisions span 48 hours") {
  Fixture f;
  CHECK(f.env.horizon * f.env.dt_min == 48.0 * 60.0);
}

TEST_CASE("a healthy patient under a constant protective action accumulates "
          "its steady per-step reward") {
  Fixture f;
  f.prof.severity0 = 0.0;
  f.prof.sex = Sex::kMale;
  f.prof.height_cm = 175.0;
  f.prof.age = 40;
  const VentilatorAction a{0.3, 14, 1.2, 13, 5, 0.5};
  const auto traj = run_episode([&](const PolicyContext&) { return a; }, f.prof,
                                96, f.sim, f.env, f.bounds, f.ab);
  const double steady = traj.steps.back().reward;
  CHECK(traj.total_reward ==
        Catch::Approx(96.0 * steady).margin(0.05 * std::abs(96.0 * steady) + 1.0));
}

TEST_CASE("a policy returning non-finite values aborts the episode") {
  Fixture f;
  const auto bad = [](const PolicyContext&) {
    VentilatorAction a;
    a.pinsp = std::numeric_limits<double>::infinity();
    return a;
  };
  CHECK_THROWS_AS(run_episode(bad, f.prof, 8, f.sim, f.env, f.bounds, f.ab),
                  std::runtime_error);
}
