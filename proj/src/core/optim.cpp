#include "core/optim.hpp"

namespace usjepa {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double lr_at(const OptimizerConfig& cfg, double epoch_fraction) {
  cfg.validate();
  if (epoch_fraction < 0.0 || epoch_fraction > 1.0)
    throw std::invalid_argument("lr_at: epoch_fraction out of [0,1]");
  const double warm = cfg.total_epochs > 0
                          ? static_cast<double>(cfg.warmup_epochs) / cfg.total_epochs
                          : 0.0;
  if (warm > 0.0 && epoch_fraction < warm) {
    const double t = epoch_fraction / warm;
    return cfg.start_lr + (cfg.base_lr - cfg.start_lr) * t;
  }
  if (warm >= 1.0) return cfg.base_lr;
  const double t = (epoch_fraction - warm) / (1.0 - warm);
  return cfg.final_lr + 0.5 * (cfg.base_lr - cfg.final_lr) * (1.0 + std::cos(kPi * t));
}

double wd_at(const OptimizerConfig& cfg, double epoch_fraction) {
  if (epoch_fraction < 0.0 || epoch_fraction > 1.0)
    throw std::invalid_argument("wd_at: epoch_fraction out of [0,1]");
  return cfg.wd_final +
         0.5 * (cfg.wd_start - cfg.wd_final) * (1.0 + std::cos(kPi * epoch_fraction));
}

}  // namespace usjepa
