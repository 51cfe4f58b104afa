#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ventbench/config.hpp"
#include "ventbench/types.hpp"

namespace ventbench {

enum class ShuntModel { kContent, kTension };

// All physiology constants. Pure data; loaded from Config with the shipped
// defaults, so a default-constructed SimParams is the reference setup.
struct SimParams {
  // gas exchange
  double patm = 760.0;           // atmospheric pressure, mmHg
  double ph2o = 47.0;            // water vapor pressure, mmHg
  double rq = 0.8;               // respiratory quotient
  double hco3 = 24.0;            // bicarbonate, mEq/L
  double vco2_per_kg = 2.8;      // CO2 production, mL/min/kg
  double k_co2 = 0.863;          // alveolar ventilation constant, mmHg*L/(mL*min)
  double pao2_floor = 30.0;      // mmHg
  double paco2_cap = 90.0;       // apneic ceiling, mmHg
  double tau_gas = 20.0;         // gas tension time constant, min
  // shunt
  ShuntModel shunt_model = ShuntModel::kContent;
  double shunt_base = 0.28;      // content model: severity-saturated shunt
  double shunt_knee = 0.03;      // content model: severity onset scale
  double shunt_sev_gain = 0.05;  // content model: extra shunt at high severity
  double shunt_sev_power = 3.0;
  double recruit_frac = 0.10;    // content model: PEEP-recruitable fraction
  double recruit_peep_ref = 12.0;
  double venous_sat = 0.72;      // mixed venous O2 saturation
  double shunt_max = 0.5;        // tension model: shunt at severity 1, PEEP 0
  double peep_ref = 12.0;        // tension model: recruitment scale, cmH2O
  double overdist_gain = 0.1;    // shunt added per 10 cmH2O of Pplat over 30
  // respiratory mechanics
  double c_per_kg = 0.9;         // healthy compliance, mL/cmH2O/kg
  double c_sev_loss = 0.65;      // compliance fraction lost at severity 1
  double c_min = 5.0;            // mL/cmH2O
  double raw_base = 10.0;        // airway resistance, cmH2O*s/L
  double raw_sev_gain = 8.0;
  double vd_per_kg = 2.2;        // dead space, mL/kg
  double frc_per_kg = 30.0;      // resting lung volume, mL/kg
  // vitals
  double hr_base_intercept = 86.0;  // resting HR at age 40
  double hr_base_age_slope = 0.2;   // per year
  double hr_spo2_gain = 2.0;        // bpm per % SpO2 below reference
  double hr_spo2_ref_pct = 90.0;
  double hr_ph_gain = 1.0;          // bpm per pH unit below reference
  double hr_ph_ref = 7.35;
  double sbp_base = 120.0;
  double sbp_peep_gain = 1.5;       // mmHg per cmH2O of PEEP above reference
  double sbp_peep_ref = 10.0;
  double dbp_ratio = 0.65;
  double tau_vitals = 15.0;         // min
  // disease progression per 30 min
  double heal_rate = 0.01;
  double injure_rate = 0.015;
  double sigma_recovery_floor = 0.08;
  double vtkg_protect_lo = 4.0;     // mL/kg
  double vtkg_protect_hi = 8.0;
  double pplat_protect = 30.0;      // cmH2O
  double spo2_protect = 0.88;       // fraction
  double dp_injure = 20.0;          // driving pressure, cmH2O
  // initialization
  double pao2_healthy = 95.0;
  double pao2_sev_drop = 48.0;
  double paco2_sev_rise = 10.0;
  double hr_sev_rise = 30.0;
  double temp0 = 37.0;
  double etco2_ratio = 0.95;

  static SimParams from_config(const Config& c) {
    SimParams p;
    p.patm = c.get("sim.patm", p.patm);
    p.ph2o = c.get("sim.ph2o", p.ph2o);
    p.rq = c.get("sim.rq", p.rq);
    p.hco3 = c.get("sim.hco3", p.hco3);
    p.vco2_per_kg = c.get("sim.vco2_per_kg", p.vco2_per_kg);
    p.k_co2 = c.get("sim.k_co2", p.k_co2);
    p.pao2_floor = c.get("sim.pao2_floor", p.pao2_floor);
    p.paco2_cap = c.get("sim.paco2_cap", p.paco2_cap);
    p.tau_gas = c.get("sim.tau_gas_min", p.tau_gas);
    const std::string model = c.get("sim.shunt_model", std::string("content"));
    if (model == "content") p.shunt_model = ShuntModel::kContent;
    else if (model == "tension") p.shunt_model = ShuntModel::kTension;
    else throw std::runtime_error("sim.shunt_model must be content or tension");
    p.shunt_base = c.get("sim.shunt_base", p.shunt_base);
    p.shunt_knee = c.get("sim.shunt_knee", p.shunt_knee);
    p.shunt_sev_gain = c.get("sim.shunt_sev_gain", p.shunt_sev_gain);
    p.shunt_sev_power = c.get("sim.shunt_sev_power", p.shunt_sev_power);
    p.recruit_frac = c.get("sim.recruit_frac", p.recruit_frac);
    p.recruit_peep_ref = c.get("sim.recruit_peep_ref", p.recruit_peep_ref);
    p.venous_sat = c.get("sim.venous_sat", p.venous_sat);
    p.shunt_max = c.get("sim.shunt_max", p.shunt_max);
    p.peep_ref = c.get("sim.peep_ref", p.peep_ref);
    p.overdist_gain = c.get("sim.overdist_gain", p.overdist_gain);
    p.c_per_kg = c.get("sim.c_per_kg", p.c_per_kg);
    p.c_sev_loss = c.get("sim.c_sev_loss", p.c_sev_loss);
    p.c_min = c.get("sim.c_min", p.c_min);
    p.raw_base = c.get("sim.raw_base", p.raw_base);
    p.raw_sev_gain = c.get("sim.raw_sev_gain", p.raw_sev_gain);
    p.vd_per_kg = c.get("sim.vd_per_kg", p.vd_per_kg);
    p.frc_per_kg = c.get("sim.frc_per_kg", p.frc_per_kg);
    p.hr_base_intercept = c.get("sim.hr_base_intercept", p.hr_base_intercept);
    p.hr_base_age_slope = c.get("sim.hr_base_age_slope", p.hr_base_age_slope);
    p.hr_spo2_gain = c.get("sim.hr_spo2_gain", p.hr_spo2_gain);
    p.hr_spo2_ref_pct = c.get("sim.hr_spo2_ref_pct", p.hr_spo2_ref_pct);
    p.hr_ph_gain = c.get("sim.hr_ph_gain", p.hr_ph_gain);
    p.hr_ph_ref = c.get("sim.hr_ph_ref", p.hr_ph_ref);
    p.sbp_base = c.get("sim.sbp_base", p.sbp_base);
    p.sbp_peep_gain = c.get("sim.sbp_peep_gain", p.sbp_peep_gain);
    p.sbp_peep_ref = c.get("sim.sbp_peep_ref", p.sbp_peep_ref);
    p.dbp_ratio = c.get("sim.dbp_ratio", p.dbp_ratio);
    p.tau_vitals = c.get("sim.tau_vitals_min", p.tau_vitals);
    p.heal_rate = c.get("sim.heal_rate", p.heal_rate);
    p.injure_rate = c.get("sim.injure_rate", p.injure_rate);
    p.sigma_recovery_floor = c.get("sim.sigma_recovery_floor", p.sigma_recovery_floor);
    p.vtkg_protect_lo = c.get("sim.vtkg_protect_lo", p.vtkg_protect_lo);
    p.vtkg_protect_hi = c.get("sim.vtkg_protect_hi", p.vtkg_protect_hi);
    p.pplat_protect = c.get("sim.pplat_protect", p.pplat_protect);
    p.spo2_protect = c.get("sim.spo2_protect", p.spo2_protect);
    p.dp_injure = c.get("sim.dp_injure", p.dp_injure);
    p.pao2_healthy = c.get("sim.pao2_healthy", p.pao2_healthy);
    p.pao2_sev_drop = c.get("sim.pao2_sev_drop", p.pao2_sev_drop);
    p.paco2_sev_rise = c.get("sim.paco2_sev_rise", p.paco2_sev_rise);
    p.hr_sev_rise = c.get("sim.hr_sev_rise", p.hr_sev_rise);
    p.temp0 = c.get("sim.temp0", p.temp0);
    p.etco2_ratio = c.get("sim.etco2_ratio", p.etco2_ratio);
    return p;
  }

  double hr_base(int age) const {
    return hr_base_intercept - hr_base_age_slope * (age - 40.0);
  }
};

// Oxygen-hemoglobin dissociation (Severinghaus 1979). Input mmHg, output
// saturation fraction in [0, 1).
inline double severinghaus(double pao2) {
  if (!(pao2 > 0.0)) throw std::invalid_argument("severinghaus: pao2 must be > 0");
  return 1.0 / (23400.0 / (pao2 * pao2 * pao2 + 150.0 * pao2) + 1.0);
}

// Exact closed-form inverse (Ellis 1989). The second cube root is written as
// 125000/(f2+fact) to avoid cancellation at high tensions.
inline double severinghaus_inverse(double sat) {
  const double fact = 11700.0 / (1.0 / sat - 1.0);
  const double f2 = std::sqrt(125000.0 + fact * fact);
  return std::cbrt(fact + f2) - std::cbrt(125000.0 / (f2 + fact));
}

inline double static_compliance(const SimParams& p, double severity, double pbw) {
  return std::max(p.c_min, p.c_per_kg * pbw * (1.0 - p.c_sev_loss * severity));
}

inline double airway_resistance(const SimParams& p, double severity) {
  return p.raw_base + p.raw_sev_gain * severity;
}

inline double henderson_hasselbalch(double hco3, double paco2) {
  const double ph = 6.1 + std::log10(hco3 / (0.03 * paco2));
  return std::clamp(ph, 6.5, 7.8);
}

// First-order pressure-controlled breath mechanics.
inline MechanicsOutputs lung_mechanics(const VentilatorAction& a, double c_stat,
                                       double r_aw, double pbw,
                                       const SimParams& p = SimParams{}) {
  MechanicsOutputs m;
  const double tau_s = r_aw * c_stat * 1e-3;  // RC time constant, s
  const double dp = a.pinsp - a.peep;
  m.c_stat = c_stat;
  m.vt = c_stat * dp * (1.0 - std::exp(-a.tinsp / tau_s));
  m.pplat = a.peep + m.vt / c_stat;
  m.paw_peak = a.pinsp;
  const double period = 60.0 / a.rr;
  const double texp = period - a.tinsp;
  m.ie = a.tinsp / texp;
  m.paw_mean = (a.pinsp * a.tinsp + a.peep * texp) / period;
  m.flow_insp = m.vt / a.tinsp * 0.06;  // mL/s -> L/min
  m.flow_exp = m.vt / texp * 0.06;
  m.minute_vent = m.vt * a.rr / 1000.0;
  m.c_dyn = dp > 0.0 ? m.vt / dp : c_stat;
  m.vd = p.vd_per_kg * pbw;
  m.lung_volume = (p.frc_per_kg * pbw + a.peep * c_stat + m.vt) / 1000.0;
  return m;
}

// Venous-admixture shunt fraction. The content model saturates severity
// quickly and recruits only a fraction with PEEP; the tension model is the
// simpler exponential-recruitment form.
inline double shunt_fraction(const SimParams& p, double severity, double peep,
                             double pplat) {
  const double overdist = p.overdist_gain * std::max(0.0, pplat - 30.0) / 10.0;
  if (p.shunt_model == ShuntModel::kTension)
    return severity * p.shunt_max * std::exp(-peep / p.peep_ref) + overdist;
  const double sev = p.shunt_base * (1.0 - std::exp(-severity / p.shunt_knee)) +
                     p.shunt_sev_gain * std::pow(severity, p.shunt_sev_power);
  const double recruit = (1.0 - p.recruit_frac) +
                         p.recruit_frac * std::exp(-peep / p.recruit_peep_ref);
  return std::min(0.9, sev * recruit + overdist);
}

struct GasResult {
  double pao2 = 0.0;
  double paco2 = 0.0;
  double ph = 7.4;
};

inline GasResult gas_exchange(const VentilatorAction& a, const MechanicsOutputs& m,
                              const PhysioState& s, double dt_min,
                              const SimParams& p) {
  const double pao2_alv = a.fio2 * (p.patm - p.ph2o) - s.paco2 / p.rq;
  const double fs = shunt_fraction(p, s.severity, a.peep, m.pplat);
  double pao2_target;
  if (p.shunt_model == ShuntModel::kTension) {
    pao2_target = std::max(p.pao2_floor, pao2_alv * (1.0 - fs));
  } else {
    const double sat_cap = severinghaus(std::max(pao2_alv, 1.0));
    const double sat_art = (1.0 - fs) * sat_cap + fs * p.venous_sat;
    const double from_sat = severinghaus_inverse(std::min(sat_art, 0.9999));
    pao2_target = std::max(p.pao2_floor,
                           std::min(std::max(pao2_alv, p.pao2_floor), from_sat));
  }
  const double va = (m.vt - m.vd) * a.rr / 1000.0;  // alveolar ventilation, L/min
  const double vco2 = p.vco2_per_kg * s.pbw;
  const double paco2_target =
      va > 0.0 ? std::min(p.paco2_cap, p.k_co2 * vco2 / va) : p.paco2_cap;
  const double alpha = 1.0 - std::exp(-dt_min / p.tau_gas);
  GasResult g;
  g.pao2 = s.pao2 + alpha * (pao2_target - s.pao2);
  g.paco2 = s.paco2 + alpha * (paco2_target - s.paco2);
  g.ph = henderson_hasselbalch(s.hco3, g.paco2);
  return g;
}

struct VitalsResult {
  double hr = 0.0;
  double sbp = 0.0;
  double dbp = 0.0;
};

inline VitalsResult vitals(const PhysioState& s, double spo2, double ph,
                           double peep, double dt_min, const SimParams& p) {
  const double hr_target = s.hr_base +
      p.hr_spo2_gain * std::max(0.0, p.hr_spo2_ref_pct - 100.0 * spo2) +
      p.hr_ph_gain * std::max(0.0, p.hr_ph_ref - ph);
  const double sbp_target =
      p.sbp_base - p.sbp_peep_gain * std::max(0.0, peep - p.sbp_peep_ref);
  const double dbp_target = p.dbp_ratio * sbp_target;
  const double alpha = 1.0 - std::exp(-dt_min / p.tau_vitals);
  VitalsResult v;
  v.hr = s.hr + alpha * (hr_target - s.hr);
  v.sbp = s.sbp + alpha * (sbp_target - s.sbp);
  v.dbp = s.dbp + alpha * (dbp_target - s.dbp);
  return v;
}

// Threshold-based heal/injure dynamics. Plateau pressure over the protective
// limit always injures; high driving pressure injures only when tidal volume
// is also outside the protective band. Healing saturates at a residual
// severity within an episode.
inline double progress_disease(const SimParams& p, double severity,
                               const MechanicsOutputs& m, double spo2,
                               double pbw, double driving_pressure,
                               double dt_min) {
  const double steps = dt_min / 30.0;
  const double vtkg = m.vt / pbw;
  const bool vt_ok = vtkg >= p.vtkg_protect_lo && vtkg <= p.vtkg_protect_hi;
  const bool injurious = m.pplat > p.pplat_protect ||
                         (driving_pressure > p.dp_injure && !vt_ok);
  const bool protective =
      vt_ok && m.pplat < p.pplat_protect && spo2 >= p.spo2_protect;
  double out = severity;
  if (injurious) {
    out += p.injure_rate * steps;
  } else if (protective) {
    const double healed = severity - p.heal_rate * steps;
    out = healed < p.sigma_recovery_floor
              ? std::min(severity, p.sigma_recovery_floor)
              : healed;
  }
  return std::clamp(out, 0.0, 1.0);
}

// Initial physiology for an untreated patient: oxygenation depressed and
// CO2/heart rate elevated linearly in severity.
inline PhysioState derive_physiology(const PatientProfile& prof,
                                     const SimParams& p = SimParams{}) {
  prof.validate();
  PhysioState s;
  s.severity = prof.severity0;
  s.pbw = predicted_body_weight(prof.sex, prof.height_cm);
  s.hr_base = p.hr_base(prof.age);
  s.pao2 = p.pao2_healthy - p.pao2_sev_drop * prof.severity0;
  s.paco2 = 40.0 + p.paco2_sev_rise * prof.severity0;
  s.hco3 = p.hco3;
  s.hr = s.hr_base + p.hr_sev_rise * prof.severity0;
  s.sbp = p.sbp_base;
  s.dbp = p.dbp_ratio * p.sbp_base;
  s.temp = p.temp0;
  VentilatorAction unventilated{0.21, 2.0, 1.0, 12.0, 1.0, 0.5};
  s.last_mech = lung_mechanics(unventilated, static_compliance(p, s.severity, s.pbw),
                               airway_resistance(p, s.severity), s.pbw, p);
  return s;
}

// One transition of the hidden state. Deterministic and total on valid input.
inline PhysioState step(const PhysioState& s, const VentilatorAction& a,
                        double dt_min, const SimParams& p) {
  const double c = static_compliance(p, s.severity, s.pbw);
  const double r = airway_resistance(p, s.severity);
  const MechanicsOutputs m = lung_mechanics(a, c, r, s.pbw, p);
  const GasResult g = gas_exchange(a, m, s, dt_min, p);
  const double spo2 = severinghaus(g.pao2);
  const VitalsResult vit = vitals(s, spo2, g.ph, a.peep, dt_min, p);
  PhysioState out = s;
  out.severity =
      progress_disease(p, s.severity, m, spo2, s.pbw, a.pinsp - a.peep, dt_min);
  out.paco2 = g.paco2;
  out.pao2 = g.pao2;
  out.hr = vit.hr;
  out.sbp = vit.sbp;
  out.dbp = vit.dbp;
  out.last_mech = m;
  return out;
}

// Fill the 27-slot observation from the physiology and the applied action.
inline ObservedState observe(const PhysioState& s, const VentilatorAction& a,
                             const SimParams& p = SimParams{}) {
  const MechanicsOutputs& m = s.last_mech;
  ObservedState o;
  o[slot::kEcgRrInterval] = 60000.0 / s.hr;
  o[slot::kPulsePressure] = s.sbp - s.dbp;
  o[slot::kPaco2] = s.paco2;
  o[slot::kHeartRate] = s.hr;
  o[slot::kDiastolicBp] = s.dbp;
  o[slot::kSystolicBp] = s.sbp;
  o[slot::kSpo2Pct] = 100.0 * severinghaus(s.pao2);
  o[slot::kEtco2Pct] = p.etco2_ratio * s.paco2 / (p.patm - p.ph2o) * 100.0;
  o[slot::kAwRr] = a.rr;  // no spontaneous breathing: measured rate == set rate
  o[slot::kTemperature] = s.temp;
  o[slot::kPao2] = s.pao2;
  o[slot::kFlowInsp] = m.flow_insp;
  o[slot::kFlowExp] = m.flow_exp;
  o[slot::kIeRatio] = m.ie;
  o[slot::kLungVolume] = m.lung_volume;
  o[slot::kPawPeak] = m.paw_peak;
  o[slot::kPplat] = m.pplat;
  o[slot::kTidalVolume] = m.vt;
  o[slot::kMinuteVent] = m.minute_vent;
  o[slot::kPawMean] = m.paw_mean;
  o[slot::kCdynL] = m.c_dyn / 1000.0;
  o[slot::kCstat] = m.c_stat;
  o[slot::kCdyn] = m.c_dyn;
  o[slot::kPh] = henderson_hasselbalch(s.hco3, s.paco2);
  o[slot::kSetRr] = a.rr;
  o[slot::kSetFio2] = a.fio2;
  o[slot::kSetPeep] = a.peep;
  return o;
}

}  // namespace ventbench
