#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ventbench {

enum class Sex { kMale, kFemale };

inline std::string to_string(Sex s) { return s == Sex::kMale ? "male" : "female"; }

inline Sex sex_from_string(const std::string& s) {
  if (s == "male") return Sex::kMale;
  if (s == "female") return Sex::kFemale;
  throw std::runtime_error("unknown sex: " + s);
}

struct PatientProfile {
  Sex sex = Sex::kFemale;
  int age = 30;            // years
  double height_cm = 162.0;
  double severity0 = 0.0;  // initial ARDS severity in [0, 1]

  void validate() const {
    if (age < 18 || age > 65) throw std::invalid_argument("age outside 18-65");
    if (height_cm < 120.0 || height_cm > 210.0)
      throw std::invalid_argument("height outside 120-210 cm");
    if (severity0 < 0.0 || severity0 > 1.0)
      throw std::invalid_argument("severity outside [0, 1]");
  }
};

// ARDSnet predicted body weight, kg.
inline double predicted_body_weight(Sex sex, double height_cm) {
  const double intercept = (sex == Sex::kMale) ? 50.0 : 45.5;
  return intercept + 0.91 * (height_cm - 152.4);
}

struct VentilatorAction {
  double fio2 = 0.21;  // fraction of inspired oxygen
  double pinsp = 1.0;  // inspiratory pressure, cmH2O
  double tinsp = 1.0;  // inspiratory time, s
  double rr = 12.0;    // respiratory rate, breaths/min
  double peep = 1.0;   // positive end-expiratory pressure, cmH2O
  double slope = 0.5;  // pressure-rise shape, dimensionless

  std::array<double, 6> to_array() const { return {fio2, pinsp, tinsp, rr, peep, slope}; }
  static VentilatorAction from_array(const std::array<double, 6>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5]};
  }
  bool finite() const {
    for (double v : to_array())
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// Per-breath mechanics of a pressure-controlled breath.
struct MechanicsOutputs {
  double vt = 0.0;           // tidal volume, mL
  double pplat = 0.0;        // plateau pressure, cmH2O
  double paw_peak = 0.0;     // peak airway pressure, cmH2O
  double paw_mean = 0.0;     // mean airway pressure, cmH2O
  double ie = 0.0;           // inspiratory:expiratory time ratio
  double flow_insp = 0.0;    // mean inspiratory flow, L/min
  double flow_exp = 0.0;     // mean expiratory flow, L/min
  double minute_vent = 0.0;  // minute ventilation, L/min
  double c_stat = 0.0;       // static compliance, mL/cmH2O
  double c_dyn = 0.0;        // dynamic compliance, mL/cmH2O
  double lung_volume = 0.0;  // end-inspiratory lung volume, L
  double vd = 0.0;           // anatomic dead space, mL
};

// Hidden simulator state. Everything the transition function needs is held
// by value so states can be copied and stepped independently.
struct PhysioState {
  double severity = 0.0;  // ARDS severity in [0, 1]
  double paco2 = 40.0;    // arterial CO2 tension, mmHg
  double pao2 = 95.0;     // arterial O2 tension, mmHg
  double hco3 = 24.0;     // bicarbonate, mEq/L
  double hr = 80.0;       // heart rate, /min
  double sbp = 120.0;     // systolic blood pressure, mmHg
  double dbp = 78.0;      // diastolic blood pressure, mmHg
  double temp = 37.0;     // core temperature, degC
  MechanicsOutputs last_mech;
  // Derived per-patient constants, fixed at initialization.
  double pbw = 60.0;      // predicted body weight, kg
  double hr_base = 80.0;  // resting heart rate, /min
};

// The 27-slot observation vector fed to policies and learned models.
struct ObservedState {
  std::array<double, 27> v{};

  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }

  bool finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

// Canonical slot layout of ObservedState.
namespace slot {
inline constexpr int kEcgRrInterval = 0;   // RR-interval proxy, ms
inline constexpr int kPulsePressure = 1;   // pleth proxy: SBP - DBP, mmHg
inline constexpr int kPaco2 = 2;           // mmHg
inline constexpr int kHeartRate = 3;       // /min
inline constexpr int kDiastolicBp = 4;     // mmHg
inline constexpr int kSystolicBp = 5;      // mmHg
inline constexpr int kSpo2Pct = 6;         // %
inline constexpr int kEtco2Pct = 7;        // %
inline constexpr int kAwRr = 8;            // measured airway rate, /min
inline constexpr int kTemperature = 9;     // degC
inline constexpr int kPao2 = 10;           // mmHg
inline constexpr int kFlowInsp = 11;       // L/min
inline constexpr int kFlowExp = 12;        // L/min
inline constexpr int kIeRatio = 13;
inline constexpr int kLungVolume = 14;     // L
inline constexpr int kPawPeak = 15;        // cmH2O
inline constexpr int kPplat = 16;          // cmH2O
inline constexpr int kTidalVolume = 17;    // mL
inline constexpr int kMinuteVent = 18;     // L/min
inline constexpr int kPawMean = 19;        // cmH2O
inline constexpr int kCdynL = 20;          // L/cmH2O
inline constexpr int kCstat = 21;          // mL/cmH2O
inline constexpr int kCdyn = 22;           // mL/cmH2O
inline constexpr int kPh = 23;
inline constexpr int kSetRr = 24;          // ventilator echo
inline constexpr int kSetFio2 = 25;        // ventilator echo
inline constexpr int kSetPeep = 26;        // ventilator echo
}  // namespace slot

}  // namespace ventbench
