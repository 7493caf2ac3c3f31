#pragma once

#include <cstddef>
#include <set>
#include <string>

namespace cde::acceptance {

struct Options {
  /// Seeds for the seed-count criteria (the thresholds scale with it).
  std::size_t seeds = 100;
  bool verbose = false;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Passes when at least `need_of_100` of every 100 seeds succeed.
inline bool meets(std::size_t wins, std::size_t n, std::size_t need_of_100) {
  return wins * 100 >= need_of_100 * n;
}

Outcome clustering_oracle(const Options& o);       // 1
Outcome pair_metric_triangle(const Options& o);    // 2
Outcome gradient_checks(const Options& o);         // 6
Outcome gradcache_equivalence(const Options& o);   // 7
Outcome architecture_invariants(const Options& o); // 8
Outcome filtering_semantics(const Options& o);     // 9
Outcome ndcg_oracle(const Options& o);             // 10
Outcome schedule_defaults(const Options& o);       // 11
Outcome hardness_direction(const Options& o);      // 3

/// Criteria 4, 5 and 12 train the same models, so one pass per seed serves
/// all of them. Only the requested criteria's models are trained.
struct TrainingOutcomes {
  Outcome training_benefit;  // 4
  Outcome cde_benefit;       // 5
  Outcome context_trend;     // 12
  double seconds[3] = {0, 0, 0};
};
TrainingOutcomes training_criteria(const Options& o, const std::set<int>& wanted);

}  // namespace cde::acceptance
