#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ventbench/control.hpp"
#include "ventbench/e2c.hpp"
#include "ventbench/env.hpp"
#include "ventbench/protocols.hpp"

namespace ventbench {

inline constexpr int kReportSchemaVersion = 1;

struct Cohort {
  std::vector<PatientProfile> patients;
  std::uint64_t seed = 0;
};

struct CohortParams {
  int age_lo = 18;
  int age_hi = 65;
  double severity_lo = 0.3;
  double severity_hi = 0.9;
  double height_mean_male = 175.0;
  double height_mean_female = 162.0;
  double height_sd = 7.0;

  static CohortParams from_config(const Config& c) {
    CohortParams p;
    p.age_lo = static_cast<int>(c.get("cohort.age_lo", p.age_lo));
    p.age_hi = static_cast<int>(c.get("cohort.age_hi", p.age_hi));
    p.severity_lo = c.get("cohort.severity_lo", p.severity_lo);
    p.severity_hi = c.get("cohort.severity_hi", p.severity_hi);
    p.height_mean_male = c.get("cohort.height_mean_male", p.height_mean_male);
    p.height_mean_female = c.get("cohort.height_mean_female", p.height_mean_female);
    p.height_sd = c.get("cohort.height_sd", p.height_sd);
    return p;
  }
};

// Alternating-sex cohort with uniform ages, severities uniform over the
// mild-to-severe range, and sex-specific normal heights.
inline Cohort make_cohort(int n, std::uint64_t seed,
                          const CohortParams& p = CohortParams{}) {
  if (n < 2 || n % 2 != 0)
    throw std::invalid_argument("make_cohort: n must be even and >= 2");
  Cohort c;
  c.seed = seed;
  Rng rng(derive_seed(seed, 0xC0407));
  c.patients.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    PatientProfile prof;
    prof.sex = (i % 2 == 0) ? Sex::kMale : Sex::kFemale;
    prof.age = rng.uniform_int(p.age_lo, p.age_hi);
    const double mean = prof.sex == Sex::kMale ? p.height_mean_male : p.height_mean_female;
    prof.height_cm = std::clamp(rng.normal(mean, p.height_sd), 120.0, 210.0);
    prof.severity0 = rng.uniform(p.severity_lo, p.severity_hi);
    prof.validate();
    c.patients.push_back(prof);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

enum class PolicyKind { kRandom, kMaxIntervention, kArdsnet, kSmpc, kE2cSmpc, kE2cMppi };

inline std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kRandom: return "random";
    case PolicyKind::kMaxIntervention: return "max-intervention";
    case PolicyKind::kArdsnet: return "ardsnet";
    case PolicyKind::kSmpc: return "smpc";
    case PolicyKind::kE2cSmpc: return "e2c-smpc";
    case PolicyKind::kE2cMppi: return "e2c-mppi";
  }
  throw std::logic_error("unknown policy kind");
}

inline PolicyKind policy_from_string(const std::string& s) {
  if (s == "random") return PolicyKind::kRandom;
  if (s == "max-intervention" || s == "maxint") return PolicyKind::kMaxIntervention;
  if (s == "ardsnet") return PolicyKind::kArdsnet;
  if (s == "smpc") return PolicyKind::kSmpc;
  if (s == "e2c-smpc") return PolicyKind::kE2cSmpc;
  if (s == "e2c-mppi") return PolicyKind::kE2cMppi;
  throw std::runtime_error("unknown policy: " + s);
}

struct BenchParams {
  int patients = 100;
  int steps = 96;
  double dt_min = 30.0;
  std::uint64_t seed = 7;
  int smpc_samples = 32;
  int e2c_samples = 1024;
  int horizon = 4;
  double lambda = 1.0;
  double gamma = 0.2;
  int dataset_runs = 2;
  int jobs = 0;  // 0 = serial

  static BenchParams from_config(const Config& c) {
    BenchParams p;
    p.patients = static_cast<int>(c.get("bench.patients", p.patients));
    p.steps = static_cast<int>(c.get("bench.steps", p.steps));
    p.dt_min = c.get("env.dt_min", p.dt_min);
    p.seed = static_cast<std::uint64_t>(c.get("bench.seed", static_cast<double>(p.seed)));
    p.smpc_samples = static_cast<int>(c.get("control.smpc_samples", p.smpc_samples));
    p.e2c_samples = static_cast<int>(c.get("control.e2c_samples", p.e2c_samples));
    p.horizon = static_cast<int>(c.get("control.horizon", p.horizon));
    p.lambda = c.get("control.lambda", p.lambda);
    p.gamma = c.get("control.gamma", p.gamma);
    p.dataset_runs = static_cast<int>(c.get("train.dataset_runs", p.dataset_runs));
    return p;
  }
};

// Everything a policy needs per episode, owned by the episode runner.
class EpisodePolicy {
 public:
  EpisodePolicy(PolicyKind kind, const PatientProfile& profile,
                const SimParams& sim, const ProtocolParams& protocol,
                const BoundsTable& bounds, const ActionBounds& ab,
                const BenchParams& bp, std::uint64_t episode_seed,
                const E2cModel* model)
      : kind_(kind),
        profile_(profile),
        sim_(sim),
        protocol_(protocol),
        bounds_(bounds.resolve(profile.sex, profile.age)),
        ab_(ab),
        bp_(bp),
        rng_(episode_seed),
        ards_(ardsnet_init(protocol)) {
    if (kind == PolicyKind::kSmpc)
      exact_ = std::make_unique<ExactDynamics>(sim, bp.dt_min);
    if (kind == PolicyKind::kE2cSmpc || kind == PolicyKind::kE2cMppi) {
      if (!model)
        throw std::runtime_error("policy " + to_string(kind) +
                                 " requires a trained model");
      learned_ = std::make_unique<LearnedDynamics>(*model);
    }
    if (kind == PolicyKind::kMaxIntervention)
      maxint_ = max_intervention(profile, protocol, sim, ab);
  }

  VentilatorAction act(const PolicyContext& ctx) {
    switch (kind_) {
      case PolicyKind::kRandom:
        return random_action(rng_, ab_);
      case PolicyKind::kMaxIntervention:
        return maxint_;
      case PolicyKind::kArdsnet:
        return ardsnet_policy(ctx.obs, profile_, ards_, protocol_, sim_, ab_);
      case PolicyKind::kSmpc: {
        exact_->set_snapshot(ctx.physio);
        return smpc(*exact_, ctx.obs, bp_.smpc_samples, bp_.horizon, rng_,
                    bounds_, ab_, bp_.gamma, fallback(ctx));
      }
      case PolicyKind::kE2cSmpc:
        return smpc(*learned_, ctx.obs, bp_.e2c_samples, bp_.horizon, rng_,
                    bounds_, ab_, bp_.gamma, fallback(ctx));
      case PolicyKind::kE2cMppi:
        return mppi(*learned_, ctx.obs, bp_.e2c_samples, bp_.horizon,
                    bp_.lambda, rng_, bounds_, ab_, bp_.gamma, fallback(ctx));
    }
    throw std::logic_error("unknown policy kind");
  }

 private:
  // Safe default when every rollout diverges: the protocol action for the
  // current state, computed on a copy so protocol memory is not disturbed.
  VentilatorAction fallback(const PolicyContext& ctx) {
    ArdsnetState scratch = ards_;
    return ardsnet_policy(ctx.obs, profile_, scratch, protocol_, sim_, ab_);
  }

  PolicyKind kind_;
  PatientProfile profile_;
  SimParams sim_;
  ProtocolParams protocol_;
  MarkerBoundsSet bounds_;
  ActionBounds ab_;
  BenchParams bp_;
  Rng rng_;
  ArdsnetState ards_;
  VentilatorAction maxint_;
  std::unique_ptr<ExactDynamics> exact_;
  std::unique_ptr<LearnedDynamics> learned_;
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

inline constexpr int kRangeMarkers = 9;
inline const char* kRangeMarkerNames[kRangeMarkers] = {
    "vt", "rr", "spo2", "ie", "hr", "bp_sys", "bp_dia", "pplat", "ph"};

struct RangeParams {
  double vtkg_lo = 4.0, vtkg_hi = 8.0;      // mL/kg
  double bp_sys_lo = 90.0, bp_sys_hi = 140.0;
  double bp_dia_lo = 60.0, bp_dia_hi = 90.0;

  static RangeParams from_config(const Config& c) {
    RangeParams p;
    p.vtkg_lo = c.get("range.vtkg_lo", p.vtkg_lo);
    p.vtkg_hi = c.get("range.vtkg_hi", p.vtkg_hi);
    p.bp_sys_lo = c.get("range.bp_sys_lo", p.bp_sys_lo);
    p.bp_sys_hi = c.get("range.bp_sys_hi", p.bp_sys_hi);
    p.bp_dia_lo = c.get("range.bp_dia_lo", p.bp_dia_lo);
    p.bp_dia_hi = c.get("range.bp_dia_hi", p.bp_dia_hi);
    return p;
  }
};

// Fraction of the ventilation period each marker spent inside its healthy
// range, in percent and unrounded.
inline std::array<double, kRangeMarkers> in_range_percentages(
    const EpisodeTrajectory& traj, const PatientProfile& prof,
    const MarkerBoundsSet& bounds, const RangeParams& rp) {
  if (traj.steps.empty())
    throw std::invalid_argument("in_range_percentages: empty trajectory");
  const double pbw = predicted_body_weight(prof.sex, prof.height_cm);
  std::array<double, kRangeMarkers> count{};
  auto in = [](double x, double lo, double hi) { return x >= lo && x <= hi; };
  for (const StepRecord& r : traj.steps) {
    const ObservedState& o = r.obs;
    const bool checks[kRangeMarkers] = {
        in(o[slot::kTidalVolume] / pbw, rp.vtkg_lo, rp.vtkg_hi),
        in(o[slot::kAwRr], bounds[2].lb, bounds[2].ub),
        in(o[slot::kSpo2Pct], bounds[0].lb, bounds[0].ub),
        in(o[slot::kIeRatio], bounds[3].lb, bounds[3].ub),
        in(o[slot::kHeartRate], bounds[6].lb, bounds[6].ub),
        in(o[slot::kSystolicBp], rp.bp_sys_lo, rp.bp_sys_hi),
        in(o[slot::kDiastolicBp], rp.bp_dia_lo, rp.bp_dia_hi),
        in(o[slot::kPplat], bounds[4].lb, bounds[4].ub),
        in(o[slot::kPh], bounds[5].lb, bounds[5].ub)};
    for (int m = 0; m < kRangeMarkers; ++m)
      if (checks[m]) count[static_cast<std::size_t>(m)] += 1.0;
  }
  for (double& c : count) c = 100.0 * c / static_cast<double>(traj.steps.size());
  return count;
}

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // 1.96 * s / sqrt(n), sample standard deviation
};

inline MeanCi mean_ci(const std::vector<double>& values) {
  if (values.size() < 2)
    throw std::invalid_argument("mean_ci: need at least 2 values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  const double sd = std::sqrt(sq / static_cast<double>(values.size() - 1));
  return {mean, 1.96 * sd / std::sqrt(static_cast<double>(values.size()))};
}

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

struct PolicyReport {
  std::string name;
  double mean_total_reward = 0.0;
  double ci95_half_width = 0.0;
  std::array<double, kRangeMarkers> in_range_pct{};
  std::vector<double> per_patient_total;
};

struct BenchmarkReport {
  int schema_version = kReportSchemaVersion;
  std::uint64_t master_seed = 0;
  std::uint64_t cohort_seed = 0;
  int patients = 0;
  int steps = 0;
  double dt_min = 30.0;
  std::vector<PolicyReport> policies;
  std::map<std::string, std::string> config_snapshot;
};

struct BenchTiming {
  std::map<std::string, double> policy_wall_s;
  double total_wall_s = 0.0;
};

struct BenchSetup {
  SimParams sim;
  EnvParams env;
  BoundsTable bounds;
  ActionBounds action_bounds;
  ProtocolParams protocol;
  RangeParams ranges;
  BenchParams bench;
  CohortParams cohort;

  static BenchSetup from_config(const Config& c) {
    BenchSetup s;
    s.sim = SimParams::from_config(c);
    s.env = EnvParams::from_config(c);
    s.bounds = BoundsTable::from_config(c);
    s.action_bounds = ActionBounds::from_config(c);
    s.protocol = ProtocolParams::from_config(c);
    s.ranges = RangeParams::from_config(c);
    s.bench = BenchParams::from_config(c);
    s.cohort = CohortParams::from_config(c);
    return s;
  }
};

inline std::uint64_t episode_seed(std::uint64_t master, PolicyKind kind,
                                  std::size_t patient_index) {
  return derive_seed(master, 0xE5150D + static_cast<std::uint64_t>(kind),
                     patient_index);
}

inline EpisodeTrajectory run_policy_episode(PolicyKind kind,
                                            const PatientProfile& prof,
                                            std::size_t patient_index,
                                            const BenchSetup& s,
                                            const E2cModel* model) {
  EpisodePolicy policy(kind, prof, s.sim, s.protocol, s.bounds, s.action_bounds,
                       s.bench, episode_seed(s.bench.seed, kind, patient_index),
                       model);
  return run_episode([&policy](const PolicyContext& ctx) { return policy.act(ctx); },
                     prof, s.bench.steps, s.sim, s.env, s.bounds, s.action_bounds);
}

// Run every (policy, patient) episode. Episodes are independent and
// dispatched to a pool keyed by index, so parallel and serial execution
// produce identical reports.
inline BenchmarkReport run_benchmark(const std::vector<PolicyKind>& kinds,
                                     const Cohort& cohort, const BenchSetup& s,
                                     const E2cModel* model,
                                     BenchTiming* timing = nullptr) {
  for (PolicyKind k : kinds)
    if ((k == PolicyKind::kE2cSmpc || k == PolicyKind::kE2cMppi) && !model)
      throw std::runtime_error("policy " + to_string(k) +
                               " requires a trained model file (--model-path)");
  BenchmarkReport report;
  report.master_seed = s.bench.seed;
  report.cohort_seed = cohort.seed;
  report.patients = static_cast<int>(cohort.patients.size());
  report.steps = s.bench.steps;
  report.dt_min = s.bench.dt_min;

  const auto t_all = std::chrono::steady_clock::now();
  for (PolicyKind kind : kinds) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = cohort.patients.size();
    std::vector<double> totals(n);
    std::vector<std::array<double, kRangeMarkers>> pcts(n);

    auto run_one = [&](std::size_t i) {
      const EpisodeTrajectory traj =
          run_policy_episode(kind, cohort.patients[i], i, s, model);
      totals[i] = traj.total_reward;
      pcts[i] = in_range_percentages(
          traj, cohort.patients[i],
          s.bounds.resolve(cohort.patients[i].sex, cohort.patients[i].age),
          s.ranges);
    };

    if (s.bench.jobs > 1) {
      std::atomic<std::size_t> next{0};
      auto worker = [&]() {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
          run_one(i);
      };
      std::vector<std::thread> pool;
      const int threads = std::min<int>(s.bench.jobs, static_cast<int>(n));
      pool.reserve(static_cast<std::size_t>(threads));
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    } else {
      for (std::size_t i = 0; i < n; ++i) run_one(i);
    }

    PolicyReport pr;
    pr.name = to_string(kind);
    const MeanCi ci = mean_ci(totals);
    pr.mean_total_reward = ci.mean;
    pr.ci95_half_width = ci.half_width;
    pr.per_patient_total = totals;
    for (int m = 0; m < kRangeMarkers; ++m) {
      double acc = 0.0;
      for (const auto& p : pcts) acc += p[static_cast<std::size_t>(m)];
      pr.in_range_pct[static_cast<std::size_t>(m)] = acc / static_cast<double>(n);
    }
    report.policies.push_back(std::move(pr));
    if (timing)
      timing->policy_wall_s[to_string(kind)] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  if (timing)
    timing->total_wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_all).count();
  return report;
}

// ---------------------------------------------------------------------------
// Report and trajectory serialization
// ---------------------------------------------------------------------------

using ordered_json = nlohmann::ordered_json;

inline ordered_json report_to_json(const BenchmarkReport& r) {
  ordered_json j;
  j["schema_version"] = r.schema_version;
  j["master_seed"] = r.master_seed;
  j["cohort_seed"] = r.cohort_seed;
  j["patients"] = r.patients;
  j["steps"] = r.steps;
  j["dt_min"] = r.dt_min;
  j["policies"] = ordered_json::array();
  for (const PolicyReport& p : r.policies) {
    ordered_json pj;
    pj["name"] = p.name;
    pj["mean_total_reward"] = p.mean_total_reward;
    pj["ci95_half_width"] = p.ci95_half_width;
    ordered_json ranges;
    for (int m = 0; m < kRangeMarkers; ++m)
      ranges[kRangeMarkerNames[m]] = p.in_range_pct[static_cast<std::size_t>(m)];
    pj["in_range_pct"] = ranges;
    pj["per_patient_total"] = p.per_patient_total;
    j["policies"].push_back(pj);
  }
  j["config"] = r.config_snapshot;
  return j;
}

inline BenchmarkReport report_from_json(const ordered_json& j) {
  if (!j.contains("schema_version") ||
      j["schema_version"].get<int>() != kReportSchemaVersion)
    throw std::runtime_error("report schema version mismatch (expected " +
                             std::to_string(kReportSchemaVersion) + ")");
  BenchmarkReport r;
  r.master_seed = j["master_seed"].get<std::uint64_t>();
  r.cohort_seed = j["cohort_seed"].get<std::uint64_t>();
  r.patients = j["patients"].get<int>();
  r.steps = j["steps"].get<int>();
  r.dt_min = j["dt_min"].get<double>();
  for (const auto& pj : j["policies"]) {
    PolicyReport p;
    p.name = pj["name"].get<std::string>();
    p.mean_total_reward = pj["mean_total_reward"].get<double>();
    p.ci95_half_width = pj["ci95_half_width"].get<double>();
    for (int m = 0; m < kRangeMarkers; ++m)
      p.in_range_pct[static_cast<std::size_t>(m)] =
          pj["in_range_pct"][kRangeMarkerNames[m]].get<double>();
    p.per_patient_total = pj["per_patient_total"].get<std::vector<double>>();
    r.policies.push_back(std::move(p));
  }
  if (j.contains("config"))
    r.config_snapshot = j["config"].get<std::map<std::string, std::string>>();
  return r;
}

inline void save_report(const BenchmarkReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report: " + path);
  out << report_to_json(r).dump(2) << "\n";
}

inline BenchmarkReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open report: " + path);
  ordered_json j;
  in >> j;
  return report_from_json(j);
}

inline void save_timing(const BenchTiming& t, const std::string& path) {
  ordered_json j;
  j["total_wall_s"] = t.total_wall_s;
  j["policy_wall_s"] = t.policy_wall_s;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write timing file: " + path);
  out << j.dump(2) << "\n";
}

// Text table in the style of the per-marker results table.
inline std::string render_report_text(const BenchmarkReport& r) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-17s %10s %8s", "policy", "reward", "ci95");
  out += buf;
  for (int m = 0; m < kRangeMarkers; ++m) {
    std::snprintf(buf, sizeof buf, " %7s", kRangeMarkerNames[m]);
    out += buf;
  }
  out += "\n";
  for (const PolicyReport& p : r.policies) {
    std::snprintf(buf, sizeof buf, "%-17s %10.1f %8.1f", p.name.c_str(),
                  p.mean_total_reward, p.ci95_half_width);
    out += buf;
    for (int m = 0; m < kRangeMarkers; ++m) {
      std::snprintf(buf, sizeof buf, " %7.0f", p.in_range_pct[static_cast<std::size_t>(m)]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

inline std::string render_report_csv(const BenchmarkReport& r) {
  std::string out = "policy,mean_total_reward,ci95_half_width";
  for (int m = 0; m < kRangeMarkers; ++m)
    out += std::string(",") + kRangeMarkerNames[m] + "_pct";
  out += "\n";
  char buf[64];
  for (const PolicyReport& p : r.policies) {
    out += p.name;
    std::snprintf(buf, sizeof buf, ",%.17g", p.mean_total_reward);
    out += buf;
    std::snprintf(buf, sizeof buf, ",%.17g", p.ci95_half_width);
    out += buf;
    for (int m = 0; m < kRangeMarkers; ++m) {
      std::snprintf(buf, sizeof buf, ",%.17g", p.in_range_pct[static_cast<std::size_t>(m)]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

// Row-per-step CSV: 27 state columns, 6 action columns, reward.
inline void save_trajectory_csv(const EpisodeTrajectory& traj,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory: " + path);
  out << "step";
  for (int i = 0; i < kStateDim; ++i) out << ",s" << i;
  out << ",fio2,pinsp,tinsp,rr,peep,slope,reward\n";
  char buf[32];
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    out << t;
    auto emit = [&](double v) {
      std::snprintf(buf, sizeof buf, ",%.17g", v);
      out << buf;
    };
    for (int i = 0; i < kStateDim; ++i) emit(traj.steps[t].obs[i]);
    for (double v : traj.steps[t].action.to_array()) emit(v);
    emit(traj.steps[t].reward);
    out << "\n";
  }
}

inline void save_trajectory_summary_json(const EpisodeTrajectory& traj,
                                         const PatientProfile& prof,
                                         const std::string& path) {
  ordered_json j;
  j["patient"] = {{"sex", to_string(prof.sex)},
                  {"age", prof.age},
                  {"height_cm", prof.height_cm},
                  {"severity0", prof.severity0}};
  j["steps"] = traj.steps.size();
  j["total_reward"] = traj.total_reward;
  j["final_severity"] = traj.steps.empty() ? prof.severity0
                                           : traj.steps.back().physio.severity;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory summary: " + path);
  out << j.dump(2) << "\n";
}

inline Config config_with_defaults(const Config& base) {
  Config c = base;
  // Materialize every constant so the snapshot and the shipped default file
  // are complete even when the user supplied a partial config.
  const SimParams sp = SimParams::from_config(base);
  c.set("sim.patm", sp.patm); c.set("sim.ph2o", sp.ph2o); c.set("sim.rq", sp.rq);
  c.set("sim.hco3", sp.hco3); c.set("sim.vco2_per_kg", sp.vco2_per_kg);
  c.set("sim.k_co2", sp.k_co2); c.set("sim.pao2_floor", sp.pao2_floor);
  c.set("sim.paco2_cap", sp.paco2_cap); c.set("sim.tau_gas_min", sp.tau_gas);
  c.set("sim.shunt_model", sp.shunt_model == ShuntModel::kContent
                               ? std::string("content") : std::string("tension"));
  c.set("sim.shunt_base", sp.shunt_base); c.set("sim.shunt_knee", sp.shunt_knee);
  c.set("sim.shunt_sev_gain", sp.shunt_sev_gain);
  c.set("sim.shunt_sev_power", sp.shunt_sev_power);
  c.set("sim.recruit_frac", sp.recruit_frac);
  c.set("sim.recruit_peep_ref", sp.recruit_peep_ref);
  c.set("sim.venous_sat", sp.venous_sat); c.set("sim.shunt_max", sp.shunt_max);
  c.set("sim.peep_ref", sp.peep_ref); c.set("sim.overdist_gain", sp.overdist_gain);
  c.set("sim.c_per_kg", sp.c_per_kg); c.set("sim.c_sev_loss", sp.c_sev_loss);
  c.set("sim.c_min", sp.c_min); c.set("sim.raw_base", sp.raw_base);
  c.set("sim.raw_sev_gain", sp.raw_sev_gain); c.set("sim.vd_per_kg", sp.vd_per_kg);
  c.set("sim.frc_per_kg", sp.frc_per_kg);
  c.set("sim.hr_base_intercept", sp.hr_base_intercept);
  c.set("sim.hr_base_age_slope", sp.hr_base_age_slope);
  c.set("sim.hr_spo2_gain", sp.hr_spo2_gain);
  c.set("sim.hr_spo2_ref_pct", sp.hr_spo2_ref_pct);
  c.set("sim.hr_ph_gain", sp.hr_ph_gain); c.set("sim.hr_ph_ref", sp.hr_ph_ref);
  c.set("sim.sbp_base", sp.sbp_base); c.set("sim.sbp_peep_gain", sp.sbp_peep_gain);
  c.set("sim.sbp_peep_ref", sp.sbp_peep_ref); c.set("sim.dbp_ratio", sp.dbp_ratio);
  c.set("sim.tau_vitals_min", sp.tau_vitals);
  c.set("sim.heal_rate", sp.heal_rate); c.set("sim.injure_rate", sp.injure_rate);
  c.set("sim.sigma_recovery_floor", sp.sigma_recovery_floor);
  c.set("sim.vtkg_protect_lo", sp.vtkg_protect_lo);
  c.set("sim.vtkg_protect_hi", sp.vtkg_protect_hi);
  c.set("sim.pplat_protect", sp.pplat_protect);
  c.set("sim.spo2_protect", sp.spo2_protect); c.set("sim.dp_injure", sp.dp_injure);
  c.set("sim.pao2_healthy", sp.pao2_healthy);
  c.set("sim.pao2_sev_drop", sp.pao2_sev_drop);
  c.set("sim.paco2_sev_rise", sp.paco2_sev_rise);
  c.set("sim.hr_sev_rise", sp.hr_sev_rise);
  c.set("sim.temp0", sp.temp0); c.set("sim.etco2_ratio", sp.etco2_ratio);

  const EnvParams ep = EnvParams::from_config(base);
  c.set("env.dt_min", ep.dt_min);
  c.set("env.horizon", static_cast<double>(ep.horizon));

  const BoundsTable bt = BoundsTable::from_config(base);
  const MarkerBoundsSet ref = bt.resolve(Sex::kFemale, 30);
  static const char* marker_names[kNumMarkers] = {"spo2", "pao2", "rr", "ie",
                                                  "pplat", "ph", "hr"};
  for (int i = 0; i < kNumMarkers; ++i) {
    const std::string k = std::string("bounds.") + marker_names[i] + ".";
    const auto& b = ref[static_cast<std::size_t>(i)];
    c.set(k + "r_in", b.r_in); c.set(k + "r_out", b.r_out);
    c.set(k + "lb", b.lb); c.set(k + "ub", b.ub);
  }
  c.set("bounds.hr.age_slope", base.get("bounds.hr.age_slope", 0.2));

  const ActionBounds ab = ActionBounds::from_config(base);
  static const char* comp[6] = {"fio2", "pinsp", "tinsp", "rr", "peep", "slope"};
  for (int i = 0; i < 6; ++i) {
    const std::string k = std::string("action.") + comp[i] + ".";
    c.set(k + "lb", ab.lb[static_cast<std::size_t>(i)]);
    c.set(k + "ub", ab.ub[static_cast<std::size_t>(i)]);
    c.set(k + "w", ab.w[static_cast<std::size_t>(i)]);
  }

  const ProtocolParams pp = ProtocolParams::from_config(base);
  c.set("ardsnet.initial_row", static_cast<double>(pp.ardsnet_initial_row));
  c.set("ardsnet.vt0_per_kg", pp.ardsnet_vt0_per_kg);
  c.set("ardsnet.vt_min_per_kg", pp.ardsnet_vt_min_per_kg);
  c.set("ardsnet.vt_max_per_kg", pp.ardsnet_vt_max_per_kg);
  c.set("ardsnet.rr_increment", pp.ardsnet_rr_increment);
  c.set("ardsnet.vt_increment", pp.ardsnet_vt_increment);
  c.set("ardsnet.paco2_setpoint", pp.ardsnet_paco2_setpoint);
  c.set("ardsnet.ie_target", pp.ardsnet_ie_target);
  c.set("ardsnet.slope", pp.ardsnet_slope);
  c.set("ardsnet.ph_lo", pp.ardsnet_ph_lo); c.set("ardsnet.ph_hi", pp.ardsnet_ph_hi);
  c.set("ardsnet.pao2_lo", pp.ardsnet_pao2_lo);
  c.set("ardsnet.pao2_hi", pp.ardsnet_pao2_hi);
  c.set("ardsnet.spo2_lo", pp.ardsnet_spo2_lo);
  c.set("ardsnet.spo2_hi", pp.ardsnet_spo2_hi);
  c.set("ardsnet.pplat_reduce", pp.ardsnet_pplat_reduce);
  c.set("ardsnet.pplat_relax", pp.ardsnet_pplat_relax);
  std::string ladder;
  for (const auto& row : pp.ladder) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%g:%g", ladder.empty() ? "" : ",", row.fio2,
                  row.peep);
    ladder += buf;
  }
  c.set("ardsnet.ladder", ladder);
  c.set("protocol.nominal_raw", pp.nominal_raw);
  c.set("maxint.vt_per_kg", pp.maxint_vt_per_kg);
  c.set("maxint.peep_lo", pp.maxint_peep_lo);
  c.set("maxint.peep_hi", pp.maxint_peep_hi);
  c.set("maxint.pbw_lo", pp.maxint_pbw_lo);
  c.set("maxint.pbw_hi", pp.maxint_pbw_hi);
  c.set("maxint.tinsp", pp.maxint_tinsp);
  c.set("maxint.rr", pp.maxint_rr);
  c.set("maxint.slope", pp.maxint_slope);

  const RangeParams rp = RangeParams::from_config(base);
  c.set("range.vtkg_lo", rp.vtkg_lo); c.set("range.vtkg_hi", rp.vtkg_hi);
  c.set("range.bp_sys_lo", rp.bp_sys_lo); c.set("range.bp_sys_hi", rp.bp_sys_hi);
  c.set("range.bp_dia_lo", rp.bp_dia_lo); c.set("range.bp_dia_hi", rp.bp_dia_hi);

  const BenchParams bp = BenchParams::from_config(base);
  c.set("bench.patients", static_cast<double>(bp.patients));
  c.set("bench.steps", static_cast<double>(bp.steps));
  c.set("bench.seed", static_cast<double>(bp.seed));
  c.set("control.smpc_samples", static_cast<double>(bp.smpc_samples));
  c.set("control.e2c_samples", static_cast<double>(bp.e2c_samples));
  c.set("control.horizon", static_cast<double>(bp.horizon));
  c.set("control.lambda", bp.lambda);
  c.set("control.gamma", bp.gamma);
  c.set("train.dataset_runs", static_cast<double>(bp.dataset_runs));

  const CohortParams cp = CohortParams::from_config(base);
  c.set("cohort.age_lo", static_cast<double>(cp.age_lo));
  c.set("cohort.age_hi", static_cast<double>(cp.age_hi));
  c.set("cohort.severity_lo", cp.severity_lo);
  c.set("cohort.severity_hi", cp.severity_hi);
  c.set("cohort.height_mean_male", cp.height_mean_male);
  c.set("cohort.height_mean_female", cp.height_mean_female);
  c.set("cohort.height_sd", cp.height_sd);

  const TrainParams tp = TrainParams::from_config(base);
  c.set("train.epochs", static_cast<double>(tp.epochs));
  c.set("train.batch", static_cast<double>(tp.batch));
  c.set("train.val_fraction", tp.val_fraction);
  c.set("train.adam_lr", tp.adam.lr);
  c.set("train.adam_beta1", tp.adam.beta1);
  c.set("train.adam_beta2", tp.adam.beta2);
  c.set("train.adam_eps", tp.adam.eps);
  c.set("train.bias_init", tp.bias_init);

  const NormalizationSpec ns = NormalizationSpec::from_config(base);
  for (int i = 0; i < kStateDim; ++i) {
    const std::string k = "norm.s" + std::to_string(i) + ".";
    c.set(k + "min", ns.s_min[static_cast<std::size_t>(i)]);
    c.set(k + "max", ns.s_max[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < kActionDim; ++i) {
    const std::string k = "norm.a" + std::to_string(i) + ".";
    c.set(k + "min", ns.a_min[static_cast<std::size_t>(i)]);
    c.set(k + "max", ns.a_max[static_cast<std::size_t>(i)]);
  }
  return c;
}

}  // namespace ventbench
