#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "ventbench/config.hpp"
#include "ventbench/reward.hpp"
#include "ventbench/rng.hpp"
#include "ventbench/sim.hpp"
#include "ventbench/types.hpp"

namespace ventbench {

// Clamp an action into bounds and resolve the two physical conflicts:
// PEEP at or above Pinsp is adjusted down, and inspiratory time is capped at
// 90% of the breath period. Idempotent.
inline VentilatorAction repair_action(const VentilatorAction& raw,
                                      const ActionBounds& b = ActionBounds{}) {
  if (!raw.finite())
    throw std::invalid_argument("repair_action: non-finite action component");
  auto arr = raw.to_array();
  for (int i = 0; i < 6; ++i) arr[i] = std::clamp(arr[i], b.lb[i], b.ub[i]);
  VentilatorAction a = VentilatorAction::from_array(arr);
  if (a.peep >= a.pinsp) {
    a.peep = std::max(b.lb[4], a.pinsp - 1.0);
    if (a.peep >= a.pinsp) {  // degenerate pinsp at the lower bound
      a.pinsp = a.peep + 1.0;
    }
  }
  const double period = 60.0 / a.rr;
  if (a.tinsp > 0.9 * period) a.tinsp = 0.9 * period;
  return a;
}

inline VentilatorAction random_action(Rng& rng, const ActionBounds& b = ActionBounds{}) {
  std::array<double, 6> arr;
  for (int i = 0; i < 6; ++i) arr[i] = rng.uniform(b.lb[i], b.ub[i]);
  return repair_action(VentilatorAction::from_array(arr), b);
}

// PEEP/FiO2 ladder (lower-PEEP arm), ordered by increasing intervention.
struct PeepFio2Row {
  double fio2 = 0.3;
  double peep = 5.0;
};

inline const std::vector<PeepFio2Row>& default_ladder() {
  static const std::vector<PeepFio2Row> rows = {
      {0.3, 5},  {0.4, 5},  {0.4, 8},  {0.5, 8},  {0.5, 10}, {0.6, 10},
      {0.7, 10}, {0.7, 12}, {0.7, 14}, {0.8, 14}, {0.9, 14}, {0.9, 16},
      {0.9, 18}, {1.0, 18}, {1.0, 20}, {1.0, 22}, {1.0, 24}};
  return rows;
}

inline PeepFio2Row peep_fio2_lookup(const std::vector<PeepFio2Row>& ladder,
                                    int index) {
  const int i = std::clamp(index, 0, static_cast<int>(ladder.size()) - 1);
  return ladder[static_cast<std::size_t>(i)];
}

struct ProtocolParams {
  int ardsnet_initial_row = 5;
  double ardsnet_vt0_per_kg = 6.0;    // mL/kg
  double ardsnet_vt_min_per_kg = 4.0;
  double ardsnet_vt_max_per_kg = 8.0;
  double ardsnet_rr_increment = 2.0;  // breaths/min per pH adjustment
  double ardsnet_vt_increment = 1.0;  // mL/kg per plateau-pressure adjustment
  double ardsnet_paco2_setpoint = 40.0;
  double ardsnet_ie_target = 0.4;
  double ardsnet_slope = 0.5;
  double ardsnet_ph_lo = 7.30;
  double ardsnet_ph_hi = 7.45;
  double ardsnet_pao2_lo = 55.0;
  double ardsnet_pao2_hi = 80.0;
  double ardsnet_spo2_lo = 88.0;   // %
  double ardsnet_spo2_hi = 95.0;   // %
  double ardsnet_pplat_reduce = 30.0;
  double ardsnet_pplat_relax = 25.0;
  double nominal_raw = 10.0;       // cmH2O*s/L assumed when inverting mechanics
  double maxint_vt_per_kg = 8.0;
  double maxint_peep_lo = 18.0;
  double maxint_peep_hi = 24.0;
  double maxint_pbw_lo = 40.0;     // kg mapped to peep_lo
  double maxint_pbw_hi = 90.0;     // kg mapped to peep_hi
  double maxint_tinsp = 1.0;
  double maxint_rr = 30.0;
  double maxint_slope = 0.5;
  std::vector<PeepFio2Row> ladder = default_ladder();

  static ProtocolParams from_config(const Config& c) {
    ProtocolParams p;
    p.ardsnet_initial_row = static_cast<int>(c.get("ardsnet.initial_row", p.ardsnet_initial_row));
    p.ardsnet_vt0_per_kg = c.get("ardsnet.vt0_per_kg", p.ardsnet_vt0_per_kg);
    p.ardsnet_vt_min_per_kg = c.get("ardsnet.vt_min_per_kg", p.ardsnet_vt_min_per_kg);
    p.ardsnet_vt_max_per_kg = c.get("ardsnet.vt_max_per_kg", p.ardsnet_vt_max_per_kg);
    p.ardsnet_rr_increment = c.get("ardsnet.rr_increment", p.ardsnet_rr_increment);
    p.ardsnet_vt_increment = c.get("ardsnet.vt_increment", p.ardsnet_vt_increment);
    p.ardsnet_paco2_setpoint = c.get("ardsnet.paco2_setpoint", p.ardsnet_paco2_setpoint);
    p.ardsnet_ie_target = c.get("ardsnet.ie_target", p.ardsnet_ie_target);
    p.ardsnet_slope = c.get("ardsnet.slope", p.ardsnet_slope);
    p.ardsnet_ph_lo = c.get("ardsnet.ph_lo", p.ardsnet_ph_lo);
    p.ardsnet_ph_hi = c.get("ardsnet.ph_hi", p.ardsnet_ph_hi);
    p.ardsnet_pao2_lo = c.get("ardsnet.pao2_lo", p.ardsnet_pao2_lo);
    p.ardsnet_pao2_hi = c.get("ardsnet.pao2_hi", p.ardsnet_pao2_hi);
    p.ardsnet_spo2_lo = c.get("ardsnet.spo2_lo", p.ardsnet_spo2_lo);
    p.ardsnet_spo2_hi = c.get("ardsnet.spo2_hi", p.ardsnet_spo2_hi);
    p.ardsnet_pplat_reduce = c.get("ardsnet.pplat_reduce", p.ardsnet_pplat_reduce);
    p.ardsnet_pplat_relax = c.get("ardsnet.pplat_relax", p.ardsnet_pplat_relax);
    p.nominal_raw = c.get("protocol.nominal_raw", p.nominal_raw);
    p.maxint_vt_per_kg = c.get("maxint.vt_per_kg", p.maxint_vt_per_kg);
    p.maxint_peep_lo = c.get("maxint.peep_lo", p.maxint_peep_lo);
    p.maxint_peep_hi = c.get("maxint.peep_hi", p.maxint_peep_hi);
    p.maxint_pbw_lo = c.get("maxint.pbw_lo", p.maxint_pbw_lo);
    p.maxint_pbw_hi = c.get("maxint.pbw_hi", p.maxint_pbw_hi);
    p.maxint_tinsp = c.get("maxint.tinsp", p.maxint_tinsp);
    p.maxint_rr = c.get("maxint.rr", p.maxint_rr);
    p.maxint_slope = c.get("maxint.slope", p.maxint_slope);
    // ladder override: "ardsnet.ladder = fio2:peep,fio2:peep,..."
    const std::string ladder = c.get("ardsnet.ladder", std::string());
    if (!ladder.empty()) {
      p.ladder.clear();
      std::istringstream is(ladder);
      std::string item;
      while (std::getline(is, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
          throw std::runtime_error("ardsnet.ladder entries must be fio2:peep");
        p.ladder.push_back({std::stod(item.substr(0, colon)),
                            std::stod(item.substr(colon + 1))});
      }
      if (p.ladder.empty()) throw std::runtime_error("ardsnet.ladder is empty");
    }
    return p;
  }
};

// Constant per-patient maximum-intervention action: full oxygen, high PEEP
// assigned by body size, and inspiratory pressure sized for the maximum
// protective tidal volume at nominal (healthy) compliance.
inline VentilatorAction max_intervention(const PatientProfile& prof,
                                         const ProtocolParams& pr,
                                         const SimParams& sp = SimParams{},
                                         const ActionBounds& ab = ActionBounds{}) {
  const double pbw = predicted_body_weight(prof.sex, prof.height_cm);
  const double t = std::clamp((pbw - pr.maxint_pbw_lo) /
                                  (pr.maxint_pbw_hi - pr.maxint_pbw_lo),
                              0.0, 1.0);
  const double peep = pr.maxint_peep_lo + t * (pr.maxint_peep_hi - pr.maxint_peep_lo);
  const double c_nom = sp.c_per_kg * pbw;
  const double tau = pr.nominal_raw * c_nom * 1e-3;
  const double fill = 1.0 - std::exp(-pr.maxint_tinsp / tau);
  const double dp = pr.maxint_vt_per_kg * pbw / (c_nom * fill);
  VentilatorAction a;
  a.fio2 = 1.0;
  a.pinsp = peep + dp;
  a.tinsp = pr.maxint_tinsp;
  a.rr = pr.maxint_rr;
  a.peep = peep;
  a.slope = pr.maxint_slope;
  return repair_action(a, ab);
}

// Protocol memory carried between decisions.
struct ArdsnetState {
  int row = 5;               // current PEEP/FiO2 ladder row
  double vt_per_kg = 6.0;    // current tidal-volume target, mL/kg
  double rr = -1.0;          // last set rate; < 0 means not yet set
};

inline ArdsnetState ardsnet_init(const ProtocolParams& pr) {
  ArdsnetState st;
  st.row = pr.ardsnet_initial_row;
  st.vt_per_kg = pr.ardsnet_vt0_per_kg;
  return st;
}

// Rules-based protocol step: adjust the tidal-volume target on plateau
// pressure, the rate on pH, and walk the PEEP/FiO2 ladder on oxygenation,
// then invert the breath mechanics to realize the targets.
inline VentilatorAction ardsnet_policy(const ObservedState& s,
                                       const PatientProfile& prof,
                                       ArdsnetState& st,
                                       const ProtocolParams& pr,
                                       const SimParams& sp = SimParams{},
                                       const ActionBounds& ab = ActionBounds{}) {
  const double pbw = predicted_body_weight(prof.sex, prof.height_cm);
  const double pplat = s[slot::kPplat];
  const double ph = s[slot::kPh];
  const double pao2 = s[slot::kPao2];
  const double spo2_pct = s[slot::kSpo2Pct];
  const double c_stat = s[slot::kCstat];

  if (pplat >= pr.ardsnet_pplat_reduce) {
    st.vt_per_kg = std::max(pr.ardsnet_vt_min_per_kg,
                            st.vt_per_kg - pr.ardsnet_vt_increment);
  } else if (pplat < pr.ardsnet_pplat_relax && st.vt_per_kg < pr.ardsnet_vt0_per_kg) {
    st.vt_per_kg = std::min(pr.ardsnet_vt0_per_kg,
                            st.vt_per_kg + pr.ardsnet_vt_increment);
  }
  const double vt = st.vt_per_kg * pbw;
  const double vd = sp.vd_per_kg * pbw;

  if (st.rr < 0.0) {
    // rate for normocapnic alveolar ventilation at the tidal-volume target
    const double va_target =
        sp.k_co2 * sp.vco2_per_kg * pbw / pr.ardsnet_paco2_setpoint;
    st.rr = std::clamp(1000.0 * va_target / std::max(1.0, vt - vd), ab.lb[3],
                       ab.ub[3]);
  }
  if (ph < pr.ardsnet_ph_lo) {
    st.rr = std::min(ab.ub[3], st.rr + pr.ardsnet_rr_increment);
  } else if (ph > pr.ardsnet_ph_hi) {
    st.rr = std::max(ab.lb[3], st.rr - pr.ardsnet_rr_increment);
  }

  const bool below = pao2 < pr.ardsnet_pao2_lo || spo2_pct < pr.ardsnet_spo2_lo;
  const bool above = pao2 > pr.ardsnet_pao2_hi || spo2_pct > pr.ardsnet_spo2_hi;
  if (below) {
    st.row = std::min(static_cast<int>(pr.ladder.size()) - 1, st.row + 1);
  } else if (above) {
    st.row = std::max(0, st.row - 1);
  }
  const PeepFio2Row row = peep_fio2_lookup(pr.ladder, st.row);

  const double period = 60.0 / st.rr;
  const double tinsp = std::clamp(
      period * pr.ardsnet_ie_target / (1.0 + pr.ardsnet_ie_target), ab.lb[2],
      ab.ub[2]);
  const double tau = pr.nominal_raw * c_stat * 1e-3;
  const double fill = 1.0 - std::exp(-tinsp / tau);
  const double dp = vt / (c_stat * fill);

  VentilatorAction a;
  a.fio2 = row.fio2;
  a.pinsp = row.peep + dp;
  a.tinsp = tinsp;
  a.rr = st.rr;
  a.peep = row.peep;
  a.slope = pr.ardsnet_slope;
  return repair_action(a, ab);
}

}  // namespace ventbench
