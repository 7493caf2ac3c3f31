#pragma once

#include <cstddef>
#include <cstdint>

namespace cde::train {

struct TrainConfig {
  double temperature = 0.02;
  double lr_peak = 2e-5;
  std::size_t warmup_steps = 1000;
  std::size_t epochs = 1;
  double seq_dropout_p = 0.2;
  /// Context documents sampled per batch; capped by the model's capacity.
  std::size_t context_k = 256;
  bool gradcache = false;
  /// Texts per second-stage chunk and documents per first-stage chunk when
  /// gradcache is on.
  std::size_t gradcache_chunk = 4;
  /// Adds the document->query direction to the loss.
  bool symmetric = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Copy with the warmup shortened to 10% of `total_steps` when the run is
/// shorter than twice the configured warmup.
TrainConfig effective_schedule(const TrainConfig& cfg, std::size_t total_steps);

/// Linear ramp 0 -> lr_peak over warmup_steps, then linear decay to 0 at
/// total_steps. Throws ConfigError when total_steps <= warmup_steps.
double lr_at(std::size_t step, std::size_t total_steps, const TrainConfig& cfg);

}  // namespace cde::train
