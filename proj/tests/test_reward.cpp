#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ventbench/reward.hpp"
#include "ventbench/rng.hpp"

using namespace ventbench;

namespace {
// All seven markers inside the reference bands for a 30-year-old female.
ObservedState reference_state() {
  ObservedState s;
  s[slot::kSpo2Pct] = 91.0;
  s[slot::kPao2] = 85.0;
  s[slot::kAwRr] = 15.0;
  s[slot::kIeRatio] = 0.4;
  s[slot::kPplat] = 20.0;
  s[slot::kPh] = 7.4;
  s[slot::kHeartRate] = 77.0;
  return s;
}
}  // namespace

TEST_CASE("marker reward branches") {
  CHECK(reward_marker(90.0, 0.5, 0.25, 88.0, 95.0) == 0.5);
  CHECK(std::abs(reward_marker(86.0, 0.5, 0.25, 88.0, 95.0) - 0.0) < 1e-12);
  CHECK(std::abs(reward_marker(7.55, 1.0, 1.0, 7.3, 7.45) - 0.9) < 1e-12);
  // the band boundary belongs to the in-range branch
  CHECK(reward_marker(88.0, 0.5, 0.25, 88.0, 95.0) == 0.5);
  CHECK(reward_marker(95.0, 0.5, 0.25, 88.0, 95.0) == 0.5);
  CHECK_THROWS_AS(reward_marker(1.0, 1.0, 1.0, 5.0, 4.0), std::invalid_argument);
}

TEST_CASE("marker reward is continuous at the band edges") {
  const double eps = 1e-9;
  const double at_lb = reward_marker(88.0, 0.5, 0.25, 88.0, 95.0);
  const double below = reward_marker(88.0 - eps, 0.5, 0.25, 88.0, 95.0);
  const double at_ub = reward_marker(95.0, 0.5, 0.25, 88.0, 95.0);
  const double above = reward_marker(95.0 + eps, 0.5, 0.25, 88.0, 95.0);
  CHECK(std::abs(at_lb - below) < 1e-8);
  CHECK(std::abs(at_ub - above) < 1e-8);
}

TEST_CASE("marker reward is non-increasing away from the band") {
  Rng rng(21);
  for (int i = 0; i < 500; ++i) {
    const double d1 = rng.uniform(0.0, 50.0);
    const double d2 = d1 + rng.uniform(0.0, 10.0);
    REQUIRE(reward_marker(88.0 - d2, 0.5, 0.25, 88.0, 95.0) <=
            reward_marker(88.0 - d1, 0.5, 0.25, 88.0, 95.0));
    REQUIRE(reward_marker(95.0 + d2, 0.5, 0.25, 88.0, 95.0) <=
            reward_marker(95.0 + d1, 0.5, 0.25, 88.0, 95.0));
  }
}

TEST_CASE("reference state scores the full marker sum") {
  const BoundsTable table;
  const auto bounds = table.resolve(Sex::kFemale, 30);
  CHECK(std::abs(reward_state(reference_state(), bounds) - 5.5) < 1e-12);
}

TEST_CASE("a single pH violation costs its linear penalty") {
  const BoundsTable table;
  const auto bounds = table.resolve(Sex::kFemale, 30);
  ObservedState s = reference_state();
  s[slot::kPh] = 7.2;
  CHECK(std::abs(reward_state(s, bounds) - 5.4) < 1e-12);
}

TEST_CASE("state reward ignores non-marker slots") {
  const BoundsTable table;
  const auto bounds = table.resolve(Sex::kFemale, 30);
  ObservedState s = reference_state();
  const double base = reward_state(s, bounds);
  s[slot::kEtco2Pct] = 1234.5;
  s[slot::kFlowInsp] = -99.0;
  s[slot::kCstat] = 0.0;
  CHECK(reward_state(s, bounds) == base);
}

TEST_CASE("heart-rate band tracks age") {
  const BoundsTable table;
  const auto at30 = table.resolve(Sex::kFemale, 30);
  const auto at60 = table.resolve(Sex::kMale, 60);
  CHECK(at30[6].lb == 74.0);
  CHECK(at30[6].ub == 81.0);
  CHECK(at60[6].lb == Catch::Approx(74.0 - 0.2 * 30.0));
  CHECK(at60[6].ub == Catch::Approx(81.0 - 0.2 * 30.0));
  // only the heart-rate band moves
  for (int i = 0; i < 6; ++i) {
    CHECK(at60[static_cast<std::size_t>(i)].lb == at30[static_cast<std::size_t>(i)].lb);
    CHECK(at60[static_cast<std::size_t>(i)].ub == at30[static_cast<std::size_t>(i)].ub);
  }
}

TEST_CASE("action penalty endpoints") {
  ActionBounds b;
  SECTION("lower bound costs nothing") {
    const auto a = VentilatorAction::from_array(b.lb);
    CHECK(reward_action(a, b) == 0.0);
  }
  SECTION("upper bound with unit weights costs the full sum") {
    b.w = {1, 1, 1, 1, 1, 1};
    const auto a = VentilatorAction::from_array(b.ub);
    CHECK(std::abs(reward_action(a, b) + 6.0) < 1e-12);
  }
  SECTION("midpoint with uniform small weights") {
    b.w = {0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
    std::array<double, 6> mid;
    for (int i = 0; i < 6; ++i)
      mid[static_cast<std::size_t>(i)] =
          0.5 * (b.lb[static_cast<std::size_t>(i)] + b.ub[static_cast<std::size_t>(i)]);
    CHECK(std::abs(reward_action(VentilatorAction::from_array(mid), b) + 0.3) < 1e-12);
  }
}

TEST_CASE("action penalty stays within its range") {
  ActionBounds b;
  double wsum = 0.0;
  for (double w : b.w) wsum += w;
  Rng rng(22);
  for (int i = 0; i < 1000; ++i) {
    std::array<double, 6> arr;
    for (int j = 0; j < 6; ++j)
      arr[static_cast<std::size_t>(j)] =
          rng.uniform(b.lb[static_cast<std::size_t>(j)], b.ub[static_cast<std::size_t>(j)]);
    const double r = reward_action(VentilatorAction::from_array(arr), b);
    REQUIRE(r <= 0.0);
    REQUIRE(r >= -wsum - 1e-12);
  }
}

TEST_CASE("total reward decomposes into state and action parts") {
  const BoundsTable table;
  const auto bounds = table.resolve(Sex::kFemale, 30);
  ActionBounds ab;
  const auto s = reference_state();
  SECTION("in-bounds state at the action floor") {
    const auto a = VentilatorAction::from_array(ab.lb);
    CHECK(std::abs(reward_total(s, a, bounds, ab) - 5.5) < 1e-12);
  }
  SECTION("changing the action leaves the state term alone") {
    VentilatorAction a1{0.3, 15, 1.0, 14, 6, 0.2};
    VentilatorAction a2{0.9, 28, 1.0, 14, 20, 0.2};
    const double d = reward_total(s, a2, bounds, ab) - reward_total(s, a1, bounds, ab);
    CHECK(d == Catch::Approx(reward_action(a2, ab) - reward_action(a1, ab)).epsilon(1e-12));
  }
  SECTION("zero weights reduce the total to the state reward") {
    ab.w = {0, 0, 0, 0, 0, 0};
    VentilatorAction a{0.9, 28, 1.0, 14, 20, 0.2};
    CHECK(reward_total(s, a, bounds, ab) == reward_state(s, bounds));
  }
}
