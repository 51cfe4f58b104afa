#pragma once

#include <array>
#include <stdexcept>

#include "ventbench/config.hpp"
#include "ventbench/types.hpp"

namespace ventbench {

enum class Marker { kSpo2, kPao2, kRr, kIe, kPplat, kPh, kHr };
inline constexpr int kNumMarkers = 7;

struct MarkerBounds {
  Marker marker = Marker::kSpo2;
  int slot = 0;       // ObservedState slot the marker is read from
  double r_in = 0.0;  // reward while inside [lb, ub]
  double r_out = 0.0; // penalty slope per marker unit outside
  double lb = 0.0;
  double ub = 0.0;
};

using MarkerBoundsSet = std::array<MarkerBounds, kNumMarkers>;

// Piecewise-linear marker reward: flat inside the band, linear falloff outside.
inline double reward_marker(double x, double r_in, double r_out, double lb,
                            double ub) {
  if (lb >= ub) throw std::invalid_argument("reward_marker: lb must be < ub");
  if (x < lb) return r_in - r_out * (lb - x);
  if (x > ub) return r_in - r_out * (x - ub);
  return r_in;
}

// Sex/age-resolved marker table. The base values are the reference table for
// a 30-year-old female; the heart-rate band shifts with age at the same slope
// as the resting heart rate.
class BoundsTable {
 public:
  BoundsTable() = default;

  static BoundsTable from_config(const Config& c) {
    BoundsTable t;
    auto read = [&c](const char* name, MarkerBounds& b) {
      const std::string k = std::string("bounds.") + name + ".";
      b.r_in = c.get(k + "r_in", b.r_in);
      b.r_out = c.get(k + "r_out", b.r_out);
      b.lb = c.get(k + "lb", b.lb);
      b.ub = c.get(k + "ub", b.ub);
    };
    read("spo2", t.base_[0]);
    read("pao2", t.base_[1]);
    read("rr", t.base_[2]);
    read("ie", t.base_[3]);
    read("pplat", t.base_[4]);
    read("ph", t.base_[5]);
    read("hr", t.base_[6]);
    t.hr_age_slope_ = c.get("bounds.hr.age_slope", t.hr_age_slope_);
    return t;
  }

  MarkerBoundsSet resolve(Sex /*sex*/, int age) const {
    MarkerBoundsSet out = base_;
    const double shift = -hr_age_slope_ * (age - 30.0);
    out[6].lb += shift;
    out[6].ub += shift;
    return out;
  }

 private:
  MarkerBoundsSet base_{{
      {Marker::kSpo2, slot::kSpo2Pct, 0.5, 0.25, 88.0, 95.0},
      {Marker::kPao2, slot::kPao2, 0.5, 0.25, 75.0, 95.0},
      {Marker::kRr, slot::kAwRr, 0.5, 0.25, 12.0, 18.0},
      {Marker::kIe, slot::kIeRatio, 1.0, 4.0, 0.3, 0.5},
      {Marker::kPplat, slot::kPplat, 1.0, 4.0, 0.0, 30.0},
      {Marker::kPh, slot::kPh, 1.0, 1.0, 7.3, 7.45},
      {Marker::kHr, slot::kHeartRate, 1.0, 4.0, 74.0, 81.0},
  }};
  double hr_age_slope_ = 0.2;
};

struct ActionBounds {
  std::array<double, 6> lb{0.0, 1.0, 0.1, 1.0, 1.0, 0.0};
  std::array<double, 6> ub{1.0, 30.0, 3.0, 30.0, 25.0, 1.0};
  std::array<double, 6> w{0.25, 0.25, 0.0, 0.0, 0.25, 0.0};

  static ActionBounds from_config(const Config& c) {
    ActionBounds b;
    static const char* names[6] = {"fio2", "pinsp", "tinsp", "rr", "peep", "slope"};
    for (int i = 0; i < 6; ++i) {
      const std::string k = std::string("action.") + names[i] + ".";
      b.lb[i] = c.get(k + "lb", b.lb[i]);
      b.ub[i] = c.get(k + "ub", b.ub[i]);
      b.w[i] = c.get(k + "w", b.w[i]);
    }
    return b;
  }
};

inline double reward_state(const ObservedState& s, const MarkerBoundsSet& bounds) {
  double total = 0.0;
  for (const MarkerBounds& b : bounds)
    total += reward_marker(s[b.slot], b.r_in, b.r_out, b.lb, b.ub);
  return total;
}

// Weighted magnitude penalty over the normalized action components; always <= 0.
inline double reward_action(const VentilatorAction& a, const ActionBounds& b) {
  const auto arr = a.to_array();
  double total = 0.0;
  for (int i = 0; i < 6; ++i)
    total -= b.w[i] * (arr[i] - b.lb[i]) / (b.ub[i] - b.lb[i]);
  return total;
}

inline double reward_total(const ObservedState& s, const VentilatorAction& a,
                           const MarkerBoundsSet& bounds, const ActionBounds& ab) {
  return reward_state(s, bounds) + reward_action(a, ab);
}

}  // namespace ventbench
