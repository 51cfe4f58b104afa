#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "ventbench/bench.hpp"
#include "ventbench/config.hpp"

using namespace ventbench;

TEST_CASE("config parses key-value lines with comments") {
  const std::string path = "test_cfg_tmp.cfg";
  {
    std::ofstream out(path);
    out << "# physiology\n"
        << "sim.tau_gas_min = 25\n"
        << "sim.shunt_model = tension   # override\n"
        << "\n"
        << "bench.patients=10\n";
  }
  const Config c = Config::load(path);
  CHECK(c.get("sim.tau_gas_min", 0.0) == 25.0);
  CHECK(c.get("sim.shunt_model", std::string()) == "tension");
  CHECK(c.get("bench.patients", 0.0) == 10.0);
  CHECK(c.get("missing.key", 42.0) == 42.0);
  std::remove(path.c_str());
}

TEST_CASE("config rejects malformed lines and bad numbers") {
  const std::string path = "test_cfg_bad.cfg";
  {
    std::ofstream out(path);
    out << "this line has no equals sign\n";
  }
  CHECK_THROWS_AS(Config::load(path), std::runtime_error);
  {
    std::ofstream out(path);
    out << "sim.tau_gas_min = not_a_number\n";
  }
  const Config c = Config::load(path);
  CHECK_THROWS_AS(c.get("sim.tau_gas_min", 0.0), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("config overrides reach the parameter structs") {
  Config c;
  c.set("sim.tau_gas_min", 33.0);
  c.set("sim.shunt_model", std::string("tension"));
  c.set("control.lambda", 9.0);
  const SimParams sp = SimParams::from_config(c);
  CHECK(sp.tau_gas == 33.0);
  CHECK(sp.shunt_model == ShuntModel::kTension);
  CHECK(BenchParams::from_config(c).lambda == 9.0);
}

TEST_CASE("materialized defaults cover every constant and round-trip") {
  const Config full = config_with_defaults(Config{});
  // spot checks from each section
  CHECK(full.has("sim.k_co2"));
  CHECK(full.has("bounds.hr.age_slope"));
  CHECK(full.has("action.peep.ub"));
  CHECK(full.has("ardsnet.ladder"));
  CHECK(full.has("maxint.peep_hi"));
  CHECK(full.has("range.bp_dia_lo"));
  CHECK(full.has("train.adam_lr"));
  CHECK(full.has("norm.s26.max"));
  const std::string path = "test_cfg_full.cfg";
  full.save(path);
  const Config again = Config::load(path);
  CHECK(again.entries().size() == full.entries().size());
  const SimParams a = SimParams::from_config(full);
  const SimParams b = SimParams::from_config(again);
  CHECK(a.shunt_base == b.shunt_base);
  CHECK(a.hr_base_intercept == b.hr_base_intercept);
  std::remove(path.c_str());
}
