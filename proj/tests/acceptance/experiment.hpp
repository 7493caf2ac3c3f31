#pragma once

// Desk-scale experiment drivers shared by the acceptance criteria that
// train models: one synthetic corpus per seed, held-out queries per domain.

#include <chrono>
#include <cstdint>
#include <vector>

#include "cde/core/dataset.hpp"
#include "cde/eval/retrieval.hpp"
#include "cde/model/biencoder.hpp"
#include "cde/model/cde.hpp"
#include "cde/pipeline.hpp"
#include "cde/train/trainer.hpp"

namespace cde::experiment {

struct DeskConfig {
  data::SyntheticConfig synth;
  double holdout = 0.25;
  /// The last `unseen_domains` generated domains are never trained on;
  /// their held-out queries are the evaluation set and their remaining
  /// documents are the context pool.
  std::size_t unseen_domains = 2;
  /// Cap on training pairs taken from each training domain (0 = all).
  std::size_t train_pairs_per_domain = 0;
  model::ModelConfig model;
  train::TrainConfig train;
  cluster::ClusterConfig cluster;
  pack::PackingConfig pack;
  filter::FilterConfig filter;
  surrogate::SurrogateConfig surrogate;

  /// The configuration the directional criteria run with.
  static DeskConfig standard();
};

/// Everything derived from one seed before any model is trained.
struct SeedData {
  data::PairDataset train_set;
  data::PairDataset test_set;
  pipeline::SurrogateIndex index;
  model::TokenEncoder encoder;
  train::TokenizedPairs tokens;
  pack::BatchPlan clustered;
  std::vector<filter::LossMask> masks;
  pack::BatchPlan random;
  /// Unseen domains: held-out queries and their context pools.
  std::vector<eval::EvalCorpus> corpora;
  std::vector<eval::ContextPool> pools;
  /// Training domains: held-out queries and training-document pools.
  std::vector<eval::EvalCorpus> seen_corpora;
  std::vector<eval::ContextPool> seen_pools;
};

SeedData prepare_seed(const DeskConfig& cfg, std::uint64_t seed);

/// cfg with every seed field replaced by values derived from `seed`.
DeskConfig seeded(DeskConfig cfg, std::uint64_t seed);

train::TrainInputs clustered_inputs(const SeedData& d, bool with_masks = true);
train::TrainInputs random_inputs(const SeedData& d);

model::BiencoderParams<float> train_biencoder(const DeskConfig& cfg, const train::TrainInputs& in);
model::CdeParams<float> train_cde(const DeskConfig& cfg, const train::TrainInputs& in);

/// Mean NDCG@10 over all held-out queries.
double eval_biencoder(const model::BiencoderParams<float>& p, const SeedData& d);
/// Random context from each domain's own training documents.
double eval_cde_in_domain(const model::CdeParams<float>& p, const SeedData& d, std::uint64_t seed,
                          std::size_t k = 0);
/// Random context from another domain's training documents (domain i uses
/// pool i + 1 mod n).
double eval_cde_cross_domain(const model::CdeParams<float>& p, const SeedData& d,
                             std::uint64_t seed);
double eval_cde_null(const model::CdeParams<float>& p, const SeedData& d);
/// context_size_sweep with the in-domain sampling of eval_cde_in_domain.
std::vector<eval::SweepPoint> eval_cde_sweep(const model::CdeParams<float>& p, const SeedData& d,
                                             std::uint64_t seed, std::span<const std::size_t> sizes);

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace cde::experiment
