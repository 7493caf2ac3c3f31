#include "cde/pipeline.hpp"

#include "cde/eval/analysis.hpp"

namespace cde::pipeline {

SurrogateIndex build_surrogate_index(const data::PairDataset& dataset,
                                     const surrogate::SurrogateConfig& cfg) {
  SurrogateIndex index;
  index.vocab = data::build_vocab(data::all_texts(dataset));
  index.embeddings = surrogate::embed_pairs(dataset, index.vocab, cfg);
  return index;
}

std::vector<std::string> pair_domains(const data::PairDataset& dataset) {
  std::vector<std::string> out;
  out.reserve(dataset.size());
  for (const auto& p : dataset.pairs()) out.push_back(p.query.domain);
  return out;
}

pack::BatchPlan clustered_plan(const data::PairDataset& dataset, const SurrogateIndex& index,
                               const cluster::ClusterConfig& ccfg,
                               const pack::PackingConfig& pcfg) {
  const auto domains = pair_domains(dataset);
  const auto assignment = cluster::cluster_pairs(index.embeddings.documents,
                                                 index.embeddings.queries, ccfg, domains);
  return pack::pack_batches(assignment, domains, pcfg);
}

std::vector<filter::LossMask> build_masks(const pack::BatchPlan& plan,
                                          const data::PairDataset& dataset,
                                          const SurrogateIndex& index,
                                          const filter::FilterConfig& cfg,
                                          std::size_t* collision_cells) {
  std::vector<filter::LossMask> out;
  out.reserve(plan.batches.size());
  std::size_t collisions = 0;
  for (const auto& b : plan.batches) {
    const auto& batch = b.pair_indices;
    const auto cells = filter::detect_collisions(batch, dataset, cfg.collision_mode);
    collisions += cells.size();
    const auto scores = filter::surrogate_scores(batch, index.embeddings.documents,
                                                 index.embeddings.queries);
    out.push_back(filter::mask_from_scores(scores, batch.size(), cells, cfg));
  }
  if (collision_cells != nullptr) *collision_cells = collisions;
  return out;
}

filter::MaskStats mask_stats(const std::vector<filter::LossMask>& masks,
                             std::size_t collision_cells) {
  filter::MaskStats s;
  s.batches = masks.size();
  s.collision_cells = collision_cells;
  std::size_t rows = 0, masked = 0;
  for (const auto& m : masks) {
    rows += m.size();
    masked += m.masked_count();
  }
  s.mean_masked_per_row = rows == 0 ? 0.0 : static_cast<double>(masked) / static_cast<double>(rows);
  return s;
}

std::vector<double> plan_hardness(const pack::BatchPlan& plan, const SurrogateIndex& index) {
  std::vector<double> out;
  for (const auto& b : plan.batches) {
    out.push_back(b.pair_indices.size() < 2
                      ? 0.0
                      : eval::batch_hardness(b.pair_indices, index.embeddings.documents,
                                             index.embeddings.queries));
  }
  return out;
}

std::vector<double> plan_adversarial(const pack::BatchPlan& plan, const SurrogateIndex& index) {
  std::vector<double> out;
  for (const auto& b : plan.batches) {
    out.push_back(cluster::batch_adversarial_score(b.pair_indices, index.embeddings.documents,
                                                   index.embeddings.queries));
  }
  return out;
}

}  // namespace cde::pipeline
