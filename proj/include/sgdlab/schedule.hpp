#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sgdlab {

enum class ScheduleKind { power_law, constant, cooldown };

std::string to_string(ScheduleKind k);
ScheduleKind schedule_kind_from_string(const std::string& s);

// power_law:  gamma_n = gamma / (n + offset_m)^exponent_p
// constant:   gamma_n = gamma
// cooldown:   gamma_n = gamma for n < switch_iter, then a 1/n decay with the
//             counter restarted at the switch: gamma_post / (n - switch_iter + 1)
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::power_law;
  double gamma = 1.0;
  double offset_m = 0.0;
  double exponent_p = 1.0;
  long switch_iter = 0;
  double gamma_post = 1.0;
};

// Step used by iteration n -> n+1; iterations are numbered from n = 1.
inline double step_size(const StepSchedule& s, long n) {
  switch (s.kind) {
    case ScheduleKind::power_law:
      return s.gamma / std::pow(static_cast<double>(n) + s.offset_m, s.exponent_p);
    case ScheduleKind::constant:
      return s.gamma;
    case ScheduleKind::cooldown:
      return n < s.switch_iter ? s.gamma
                               : s.gamma_post / static_cast<double>(n - s.switch_iter + 1);
  }
  return s.gamma;
}

// A power-law schedule is admissible against noise of moment order q exactly
// when p lies in the open-below interval (2/(q+2), 1]. Infinite q relaxes the
// lower endpoint to 0. Other schedule kinds are never admissible.
inline bool admissible(const StepSchedule& s, double q) {
  if (s.kind != ScheduleKind::power_law) return false;
  double lower = std::isinf(q) ? 0.0 : 2.0 / (q + 2.0);
  return s.exponent_p > lower && s.exponent_p <= 1.0;
}

inline std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::power_law: return "power_law";
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::cooldown: return "cooldown";
  }
  return "unknown";
}

inline ScheduleKind schedule_kind_from_string(const std::string& s) {
  if (s == "power_law") return ScheduleKind::power_law;
  if (s == "constant") return ScheduleKind::constant;
  if (s == "cooldown") return ScheduleKind::cooldown;
  throw std::invalid_argument("unknown schedule kind: " + s);
}

}  // namespace sgdlab
