#pragma once

// Glue shared by the command-line tool and the experiment drivers: the
// surrogate -> cluster -> pack -> mask chain over one training set.

#include <string>
#include <vector>

#include "cde/cluster/kmeans.hpp"
#include "cde/core/dataset.hpp"
#include "cde/filter/negative_filter.hpp"
#include "cde/pack/packer.hpp"
#include "cde/surrogate/embedder.hpp"

namespace cde::pipeline {

struct SurrogateIndex {
  data::Vocab vocab;
  surrogate::PairEmbeddings embeddings;
};

/// Vocabulary over queries and documents, then both surrogate matrices.
SurrogateIndex build_surrogate_index(const data::PairDataset& dataset,
                                     const surrogate::SurrogateConfig& cfg);

std::vector<std::string> pair_domains(const data::PairDataset& dataset);

/// Clusters with the surrogate, then packs.
pack::BatchPlan clustered_plan(const data::PairDataset& dataset, const SurrogateIndex& index,
                               const cluster::ClusterConfig& ccfg,
                               const pack::PackingConfig& pcfg);

std::vector<filter::LossMask> build_masks(const pack::BatchPlan& plan,
                                          const data::PairDataset& dataset,
                                          const SurrogateIndex& index,
                                          const filter::FilterConfig& cfg,
                                          std::size_t* collision_cells = nullptr);

filter::MaskStats mask_stats(const std::vector<filter::LossMask>& masks,
                             std::size_t collision_cells = 0);

/// batch_hardness per batch of the plan.
std::vector<double> plan_hardness(const pack::BatchPlan& plan, const SurrogateIndex& index);
/// batch_adversarial_score per batch of the plan.
std::vector<double> plan_adversarial(const pack::BatchPlan& plan, const SurrogateIndex& index);

}  // namespace cde::pipeline
