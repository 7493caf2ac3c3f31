// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is 0 only when every selected criterion passes.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <set>

#include "criteria.hpp"

using namespace cde::acceptance;

namespace {

struct Criterion {
  const char* title;
  double budget_seconds;  // 0: no stated budget
  std::function<Outcome(const Options&)> run;
};

void report(int id, const Criterion& c, const Outcome& o, double seconds, bool& all) {
  const bool in_time = c.budget_seconds == 0 || seconds < c.budget_seconds;
  const bool pass = o.pass && in_time;
  all = all && pass;
  std::printf("criterion %2d %s: %s | %s | %.1fs", id, pass ? "PASS" : "FAIL", c.title,
              o.detail.c_str(), seconds);
  if (c.budget_seconds > 0) std::printf(" (budget %.0fs)", c.budget_seconds);
  std::printf("\n");
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  Options opts;
  app.add_option("--criteria", selected, "Criterion numbers to run (default: all)")
      ->delimiter(',')
      ->check(CLI::Range(1, 12));
  app.add_option("--seeds", opts.seeds, "Seeds for the seed-count criteria")->check(CLI::Range(1, 100000));
  app.add_flag("--verbose", opts.verbose, "Per-seed progress on stderr");
  CLI11_PARSE(app, argc, argv);

  const std::map<int, Criterion> criteria = {
      {1, {"clustering matches brute force", 30, clustering_oracle}},
      {2, {"pair metric triangle inequality", 0, pair_metric_triangle}},
      {3, {"clustered batches are harder", 120, hardness_direction}},
      {6, {"gradient checks", 300, gradient_checks}},
      {7, {"gradcache equivalence and memory", 0, gradcache_equivalence}},
      {8, {"architecture invariants", 0, architecture_invariants}},
      {9, {"false-negative filtering semantics", 0, filtering_semantics}},
      {10, {"NDCG@10 oracle", 0, ndcg_oracle}},
      {11, {"schedule and documented defaults", 0, schedule_defaults}},
  };
  const Criterion c4{"clustered training beats random batches", 1200, nullptr};
  const Criterion c5{"contextual model beats biencoder, in-domain beats cross-domain", 2400, nullptr};
  const Criterion c12{"full context beats zero context", 0, nullptr};

  std::set<int> wanted(selected.begin(), selected.end());
  if (wanted.empty()) {
    for (int i = 1; i <= 12; ++i) wanted.insert(i);
  }

  bool all = true;
  for (const auto& [id, c] : criteria) {
    if (!wanted.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(opts);
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    report(id, c, o, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), all);
  }
  if (wanted.count(4) || wanted.count(5) || wanted.count(12)) {
    TrainingOutcomes t;
    try {
      t = training_criteria(opts, wanted);
    } catch (const std::exception& e) {
      const Outcome fail{false, std::string("threw: ") + e.what()};
      t.training_benefit = t.cde_benefit = t.context_trend = fail;
    }
    if (wanted.count(4)) report(4, c4, t.training_benefit, t.seconds[0], all);
    if (wanted.count(5)) report(5, c5, t.cde_benefit, t.seconds[1], all);
    if (wanted.count(12)) report(12, c12, t.context_trend, t.seconds[2], all);
  }
  return all ? 0 : 1;
}
