#include "semenet/train/schedule.hpp"

#include <cmath>
#include <numbers>

#include "semenet/error.hpp"

namespace semenet {

void SchedulerConfig::validate() const {
  if (!(eta_min >= 0 && eta_min <= eta_max)) throw ConfigurationError("schedule needs 0 <= eta_min <= eta_max");
  if (!(restart_mult >= 1.0)) throw ConfigurationError("restart multiplier must be >= 1");
}

double cosine_lr(std::uint64_t t, const SchedulerConfig& cfg) {
  cfg.validate();
  if (cfg.cycle < 1) throw ConfigurationError("cosine cycle length must be >= 1");
  std::uint64_t period = cfg.cycle;
  std::uint64_t cur = t;
  while (cur > period) {
    cur -= period + 1;
    period = static_cast<std::uint64_t>(std::llround(static_cast<double>(period) * cfg.restart_mult));
  }
  const double phase = static_cast<double>(cur) / static_cast<double>(period);
  return cfg.eta_min + 0.5 * (cfg.eta_max - cfg.eta_min) * (1 + std::cos(std::numbers::pi * phase));
}

double scheduled_lr(std::uint64_t t, std::uint64_t total_steps, const SchedulerConfig& cfg) {
  if (cfg.kind == ScheduleKind::constant) return cfg.eta_max;
  SchedulerConfig c = cfg;
  if (c.cycle == 0) c.cycle = total_steps > 1 ? total_steps - 1 : 1;
  return cosine_lr(t, c);
}

}  // namespace semenet
