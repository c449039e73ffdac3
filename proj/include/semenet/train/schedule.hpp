#pragma once

#include <cstdint>

namespace semenet {

enum class ScheduleKind { constant, cosine };

struct SchedulerConfig {
  ScheduleKind kind = ScheduleKind::constant;
  double eta_max = 0.1;
  double eta_min = 1e-8;
  /// Length T_0 of the first cycle in steps; 0 means "the whole run".
  std::uint64_t cycle = 0;
  /// Each restart multiplies the cycle length by this factor (>= 1).
  double restart_mult = 1.0;

  void validate() const;
};

/// eta_min + (eta_max - eta_min)(1 + cos(pi T_cur / T_i)) / 2 with warm
/// restarts. A cycle spans T_cur = 0..T_i, so step T_i still gives eta_min
/// and the next cycle starts at eta_max one step later.
double cosine_lr(std::uint64_t t, const SchedulerConfig& cfg);

/// Rate at global step t of a run of `total_steps` (constant schedules
/// return eta_max).
double scheduled_lr(std::uint64_t t, std::uint64_t total_steps, const SchedulerConfig& cfg);

}  // namespace semenet
