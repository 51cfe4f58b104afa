#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "ventbench/protocols.hpp"

using namespace ventbench;

namespace {
bool is_valid(const VentilatorAction& a, const ActionBounds& b) {
  const auto arr = a.to_array();
  for (int i = 0; i < 6; ++i)
    if (arr[static_cast<std::size_t>(i)] < b.lb[static_cast<std::size_t>(i)] - 1e-12 ||
        arr[static_cast<std::size_t>(i)] > b.ub[static_cast<std::size_t>(i)] + 1e-12)
      return false;
  return a.peep < a.pinsp && a.tinsp <= 0.9 * 60.0 / a.rr + 1e-12;
}
}  // namespace

TEST_CASE("repair leaves valid actions untouched") {
  const ActionBounds b;
  const VentilatorAction a{0.4, 18.0, 1.0, 15.0, 8.0, 0.5};
  const auto r = repair_action(a, b);
  CHECK(r.to_array() == a.to_array());
}

TEST_CASE("repair adjusts PEEP down below the inspiratory pressure") {
  const auto r = repair_action({0.4, 20.0, 1.0, 15.0, 25.0, 0.5});
  CHECK(r.peep == 19.0);
  CHECK(r.pinsp == 20.0);
}

TEST_CASE("repair caps inspiratory time at 90% of the breath period") {
  const auto r = repair_action({0.4, 20.0, 2.9, 30.0, 5.0, 0.5});
  CHECK(r.tinsp == Catch::Approx(0.9 * 2.0).epsilon(1e-12));
}

TEST_CASE("repair handles the degenerate bottom of the pressure range") {
  const auto r = repair_action({0.4, 1.0, 1.0, 15.0, 10.0, 0.5});
  CHECK(r.peep < r.pinsp);
  CHECK(r.peep >= 1.0);
}

TEST_CASE("repair rejects non-finite components") {
  VentilatorAction a{0.4, std::numeric_limits<double>::quiet_NaN(), 1.0, 15.0, 8.0, 0.5};
  CHECK_THROWS_AS(repair_action(a), std::invalid_argument);
}

TEST_CASE("repair is idempotent on random raw vectors") {
  const ActionBounds b;
  Rng rng(31);
  for (int i = 0; i < 5000; ++i) {
    std::array<double, 6> arr;
    for (int j = 0; j < 6; ++j) arr[static_cast<std::size_t>(j)] = rng.uniform(-10.0, 40.0);
    const auto once = repair_action(VentilatorAction::from_array(arr), b);
    const auto twice = repair_action(once, b);
    REQUIRE(once.to_array() == twice.to_array());
    REQUIRE(is_valid(once, b));
  }
}

TEST_CASE("random actions are valid and reproducible") {
  const ActionBounds b;
  Rng a(77), c(77);
  double fio2_sum = 0.0, slope_sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto x = random_action(a, b);
    REQUIRE(is_valid(x, b));
    const auto y = random_action(c, b);
    REQUIRE(x.to_array() == y.to_array());
    fio2_sum += x.fio2;
    slope_sum += x.slope;
  }
  // components untouched by repair keep the uniform midpoint
  CHECK(fio2_sum / n == Catch::Approx(0.5).margin(0.01));
  CHECK(slope_sum / n == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("predicted body weight formula") {
  CHECK(predicted_body_weight(Sex::kFemale, 152.4) == 45.5);
  CHECK(predicted_body_weight(Sex::kMale, 175.0) == Catch::Approx(70.57).margin(0.01));
  for (double h : {140.0, 160.0, 180.0, 205.0})
    CHECK(predicted_body_weight(Sex::kMale, h) -
              predicted_body_weight(Sex::kFemale, h) ==
          Catch::Approx(4.5).epsilon(1e-12));
}

TEST_CASE("maximum intervention uses full oxygen and high PEEP") {
  const ProtocolParams pr;
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    PatientProfile prof;
    prof.sex = rng.uniform01() < 0.5 ? Sex::kMale : Sex::kFemale;
    prof.age = rng.uniform_int(18, 65);
    prof.height_cm = rng.uniform(140.0, 200.0);
    prof.severity0 = rng.uniform(0.3, 0.9);
    const auto a = max_intervention(prof, pr);
    REQUIRE(a.fio2 == 1.0);
    REQUIRE(a.peep >= 18.0);
    REQUIRE(a.peep <= 24.0);
    const auto again = max_intervention(prof, pr);
    REQUIRE(a.to_array() == again.to_array());
  }
}

TEST_CASE("ladder lookup clamps to its ends") {
  const auto& ladder = default_ladder();
  CHECK(peep_fio2_lookup(ladder, 0).fio2 == 0.3);
  CHECK(peep_fio2_lookup(ladder, 0).peep == 5.0);
  CHECK(peep_fio2_lookup(ladder, static_cast<int>(ladder.size()) - 1).fio2 == 1.0);
  CHECK(peep_fio2_lookup(ladder, static_cast<int>(ladder.size()) - 1).peep == 24.0);
  CHECK(peep_fio2_lookup(ladder, -5).fio2 == 0.3);
  CHECK(peep_fio2_lookup(ladder, 1000).peep == 24.0);
}

namespace {
ObservedState protocol_state(double pao2, double spo2_pct, double ph,
                             double pplat, double c_stat) {
  ObservedState s;
  s[slot::kPao2] = pao2;
  s[slot::kSpo2Pct] = spo2_pct;
  s[slot::kPh] = ph;
  s[slot::kPplat] = pplat;
  s[slot::kCstat] = c_stat;
  s[slot::kMinuteVent] = 5.0;
  return s;
}
}  // namespace

TEST_CASE("protocol walks the ladder on oxygenation") {
  const ProtocolParams pr;
  const PatientProfile prof{Sex::kMale, 40, 175.0, 0.6};
  SECTION("hypoxemia climbs one row") {
    ArdsnetState st = ardsnet_init(pr);
    const int before = st.row;
    ardsnet_policy(protocol_state(50.0, 85.0, 7.38, 22.0, 40.0), prof, st, pr);
    CHECK(st.row == before + 1);
  }
  SECTION("in-target oxygenation stays put") {
    ArdsnetState st = ardsnet_init(pr);
    const int before = st.row;
    const double vt_before = st.vt_per_kg;
    ardsnet_policy(protocol_state(70.0, 92.0, 7.38, 22.0, 40.0), prof, st, pr);
    CHECK(st.row == before);
    CHECK(st.vt_per_kg == vt_before);
  }
  SECTION("high oxygenation weans one row") {
    ArdsnetState st = ardsnet_init(pr);
    const int before = st.row;
    ardsnet_policy(protocol_state(90.0, 97.0, 7.38, 22.0, 40.0), prof, st, pr);
    CHECK(st.row == before - 1);
  }
}

TEST_CASE("protocol raises the rate on acidosis") {
  const ProtocolParams pr;
  const PatientProfile prof{Sex::kMale, 40, 175.0, 0.6};
  ArdsnetState st = ardsnet_init(pr);
  const auto first = ardsnet_policy(protocol_state(70.0, 92.0, 7.38, 22.0, 40.0),
                                    prof, st, pr);
  const auto second = ardsnet_policy(protocol_state(70.0, 92.0, 7.25, 22.0, 40.0),
                                     prof, st, pr);
  CHECK(second.rr == Catch::Approx(first.rr + 2.0).epsilon(1e-12));
  const auto third = ardsnet_policy(protocol_state(70.0, 92.0, 7.50, 22.0, 40.0),
                                    prof, st, pr);
  CHECK(third.rr == Catch::Approx(second.rr - 2.0).epsilon(1e-12));
}

TEST_CASE("protocol backs the tidal volume off high plateau pressures") {
  const ProtocolParams pr;
  const PatientProfile prof{Sex::kMale, 40, 175.0, 0.6};
  ArdsnetState st = ardsnet_init(pr);
  ardsnet_policy(protocol_state(70.0, 92.0, 7.38, 31.0, 40.0), prof, st, pr);
  CHECK(st.vt_per_kg == 5.0);
  // and restores it when pressures relax
  ardsnet_policy(protocol_state(70.0, 92.0, 7.38, 20.0, 40.0), prof, st, pr);
  CHECK(st.vt_per_kg == 6.0);
}

TEST_CASE("protocol output always sits on a ladder row") {
  const ProtocolParams pr;
  const ActionBounds b;
  const PatientProfile prof{Sex::kFemale, 55, 158.0, 0.8};
  ArdsnetState st = ardsnet_init(pr);
  Rng rng(41);
  for (int i = 0; i < 500; ++i) {
    const auto s = protocol_state(rng.uniform(35.0, 110.0), rng.uniform(80.0, 100.0),
                                  rng.uniform(7.0, 7.7), rng.uniform(8.0, 32.0),
                                  rng.uniform(15.0, 70.0));
    const auto a = ardsnet_policy(s, prof, st, pr);
    bool on_ladder = false;
    for (const auto& row : pr.ladder)
      if (a.fio2 == row.fio2 && a.peep == row.peep) on_ladder = true;
    REQUIRE(on_ladder);
    // already valid: repair changes nothing
    const auto repaired = repair_action(a, b);
    REQUIRE(repaired.to_array() == a.to_array());
  }
}
