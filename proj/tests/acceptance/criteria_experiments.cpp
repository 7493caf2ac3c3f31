// Criteria measured on the synthetic corpus: batch hardness (3) and the
// trained-model directions (4, 5, 12).

#include <chrono>
#include <cstdio>
#include <sstream>

#include "criteria.hpp"
#include "experiment.hpp"
#include "cde/eval/metrics.hpp"

namespace cde::acceptance {

namespace {

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << x;
  return s.str();
}

std::string count(std::size_t k, std::size_t n) {
  return std::to_string(k) + "/" + std::to_string(n);
}

}  // namespace

Outcome hardness_direction(const Options& o) {
  std::size_t both = 0, adv_wins = 0, hard_wins = 0;
  for (std::size_t seed = 0; seed < o.seeds; ++seed) {
    data::SyntheticConfig sc;
    sc.n_domains = 4;
    sc.pairs_per_domain = 256;
    sc.seed = mix64(seed ^ 0x68617264ULL);
    const auto ds = data::generate_synthetic_corpus(sc);
    const auto index = pipeline::build_surrogate_index(ds, {});
    cluster::ClusterConfig cc;
    cc.seed = mix64(seed ^ 0x636c75ULL);
    pack::PackingConfig pc;
    pc.seed = mix64(seed ^ 0x70616bULL);
    const auto clustered = pipeline::clustered_plan(ds, index, cc, pc);
    const auto random = pack::random_batches(pipeline::pair_domains(ds), pc);
    const bool adv = eval::mean(pipeline::plan_adversarial(clustered, index)) >
                     eval::mean(pipeline::plan_adversarial(random, index));
    const bool hard = eval::mean(pipeline::plan_hardness(clustered, index)) >
                      eval::mean(pipeline::plan_hardness(random, index));
    adv_wins += adv;
    hard_wins += hard;
    both += adv && hard;
  }
  return {meets(both, o.seeds, 95),
          "clustered harder on both measures for " + count(both, o.seeds) + " seeds (adversarial " +
              count(adv_wins, o.seeds) + ", hardness " + count(hard_wins, o.seeds) + ")"};
}

TrainingOutcomes training_criteria(const Options& o, const std::set<int>& wanted) {
  using clock = std::chrono::steady_clock;
  const bool want4 = wanted.count(4) != 0, want5 = wanted.count(5) != 0,
             want12 = wanted.count(12) != 0;
  const bool need_cde = want5 || want12;
  const auto cfg = experiment::DeskConfig::standard();

  TrainingOutcomes out;
  std::size_t c4_wins = 0, c5_bi = 0, c5_x = 0, c12_wins = 0;
  std::vector<double> d4, d5_bi, d5_x, d12;
  std::size_t step_mismatch = 0;
  double& t4 = out.seconds[0];
  double& t5 = out.seconds[1];
  double& t12 = out.seconds[2];

  for (std::size_t seed = 0; seed < o.seeds; ++seed) {
    auto t0 = clock::now();
    const auto d = experiment::prepare_seed(cfg, seed);
    const auto scfg = experiment::seeded(cfg, seed);
    const double prep = experiment::seconds_since(t0);

    t0 = clock::now();
    const auto bi = experiment::train_biencoder(scfg, experiment::clustered_inputs(d));
    const double bi_clu = experiment::eval_biencoder(bi, d);
    const double t_bi = experiment::seconds_since(t0);

    if (want4) {
      t0 = clock::now();
      step_mismatch += d.random.batches.size() != d.clustered.batches.size();
      const auto rnd = experiment::train_biencoder(scfg, experiment::random_inputs(d));
      const double bi_rand = experiment::eval_biencoder(rnd, d);
      c4_wins += bi_clu >= bi_rand;
      d4.push_back(bi_clu - bi_rand);
      t4 += prep + t_bi + experiment::seconds_since(t0);
    }

    if (need_cde) {
      t0 = clock::now();
      const auto cde = experiment::train_cde(scfg, experiment::clustered_inputs(d));
      const double t_train = experiment::seconds_since(t0);
      // Full in-domain context: documents sample the corpus they index,
      // queries sample the same domain's documents.
      t0 = clock::now();
      const double in_domain = experiment::eval_cde_in_domain(cde, d, seed);
      const double t_in = experiment::seconds_since(t0);
      if (want5) {
        t0 = clock::now();
        const double cross = experiment::eval_cde_cross_domain(cde, d, seed);
        c5_bi += in_domain >= bi_clu;
        c5_x += in_domain >= cross;
        d5_bi.push_back(in_domain - bi_clu);
        d5_x.push_back(in_domain - cross);
        t5 += prep + t_bi + t_train + t_in + experiment::seconds_since(t0);
      }
      if (want12) {
        t0 = clock::now();
        const std::size_t sizes[] = {0, scfg.model.context_capacity};
        const auto curve = experiment::eval_cde_sweep(cde, d, seed, sizes);
        c12_wins += curve[1].mean_ndcg10 >= curve[0].mean_ndcg10;
        d12.push_back(curve[1].mean_ndcg10 - curve[0].mean_ndcg10);
        t12 += prep + t_train + experiment::seconds_since(t0);
      }
    }
    if (o.verbose) {
      std::fprintf(stderr, "seed %zu done (c4 %zu, c5 %zu/%zu, c12 %zu)\n", seed, c4_wins, c5_bi,
                   c5_x, c12_wins);
    }
  }

  const std::size_t n = o.seeds;
  out.training_benefit = {
      meets(c4_wins, n, 80) && step_mismatch == 0,
      "clustered+filtered >= random for " + count(c4_wins, n) + " seeds, paired mean diff " +
          fmt(eval::mean(d4)) + (step_mismatch ? ", step counts differed" : "")};
  out.cde_benefit = {meets(c5_bi, n, 80) && meets(c5_x, n, 90),
                     "CDE >= biencoder for " + count(c5_bi, n) + " seeds (mean diff " +
                         fmt(eval::mean(d5_bi)) + "); in-domain >= cross-domain context for " +
                         count(c5_x, n) + " (mean diff " + fmt(eval::mean(d5_x)) + ")"};
  out.context_trend = {meets(c12_wins, n, 90),
                       "full context >= zero context for " + count(c12_wins, n) +
                           " seeds, mean diff " + fmt(eval::mean(d12))};
  return out;
}

}  // namespace cde::acceptance
