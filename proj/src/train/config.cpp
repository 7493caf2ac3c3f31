#include "cde/train/config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cde/error.hpp"

namespace cde::train {

void TrainConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("train.temperature must be positive");
  }
  if (!(lr_peak >= 0.0) || !std::isfinite(lr_peak)) {
    throw ConfigError("train.lr_peak must be non-negative");
  }
  if (warmup_steps < 1) throw ConfigError("train.warmup_steps must be >= 1");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (!(seq_dropout_p >= 0.0 && seq_dropout_p <= 1.0)) {
    throw ConfigError("train.seq_dropout_p must lie in [0, 1]");
  }
  if (context_k < 1) throw ConfigError("train.context_k must be >= 1");
  if (gradcache_chunk < 1) throw ConfigError("train.gradcache_chunk must be >= 1");
}

TrainConfig effective_schedule(const TrainConfig& cfg, std::size_t total_steps) {
  TrainConfig out = cfg;
  if (total_steps < 2 * cfg.warmup_steps) {
    out.warmup_steps = std::max<std::size_t>(1, total_steps / 10);
  }
  return out;
}

double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg) {
  if (total_steps <= cfg.warmup_steps) {
    throw ConfigError("lr schedule: total steps " + std::to_string(total_steps) +
                      " must exceed warmup steps " + std::to_string(cfg.warmup_steps));
  }
  if (step > total_steps) {
    throw ConfigError("lr schedule: step " + std::to_string(step) + " past total " +
                      std::to_string(total_steps));
  }
  const auto s = static_cast<double>(step);
  const auto w = static_cast<double>(cfg.warmup_steps);
  const auto n = static_cast<double>(total_steps);
  if (step <= cfg.warmup_steps) return cfg.lr_peak * s / w;
  return cfg.lr_peak * (n - s) / (n - w);
}

}  // namespace cde::train
