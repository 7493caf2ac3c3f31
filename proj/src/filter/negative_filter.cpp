#include "cde/filter/negative_filter.hpp"

#include <json.hpp>

#include "cde/error.hpp"
#include "cde/surrogate/embedder.hpp"

namespace cde::filter {

CollisionMode parse_collision_mode(std::string_view name) {
  if (name == "exact_text") return CollisionMode::exact_text;
  if (name == "exact_id") return CollisionMode::exact_id;
  if (name == "off") return CollisionMode::off;
  throw ConfigError("unknown collision mode '" + std::string(name) + "'");
}

std::string_view collision_mode_name(CollisionMode m) {
  switch (m) {
    case CollisionMode::exact_text: return "exact_text";
    case CollisionMode::exact_id: return "exact_id";
    case CollisionMode::off: return "off";
  }
  return "off";
}

void LossMask::set(std::size_t i, std::size_t j) {
  if (i == j) return;
  auto& cell = cells_[i * n_ + j];
  if (cell == 0) {
    cell = 1;
    ++masked_;
  }
}

std::size_t LossMask::masked_in_row(std::size_t i) const {
  std::size_t n = 0;
  for (std::size_t j = 0; j < n_; ++j) n += cells_[i * n_ + j];
  return n;
}

std::vector<std::size_t> equivalence_class(std::span<const double> scores,
                                           std::size_t gold, double epsilon) {
  std::vector<std::size_t> out;
  const double bar = scores[gold] + epsilon;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (j != gold && scores[j] >= bar) out.push_back(j);
  }
  return out;
}

std::set<std::pair<std::size_t, std::size_t>> detect_collisions(
    std::span<const std::size_t> batch, const data::PairDataset& dataset,
    CollisionMode mode) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  if (mode == CollisionMode::off) return out;
  auto doc_key = [&](std::size_t p) -> const std::string& {
    const auto& r = dataset[batch[p]].document;
    return mode == CollisionMode::exact_text ? r.body : r.id;
  };
  auto query_key = [&](std::size_t p) -> const std::string& {
    const auto& r = dataset[batch[p]].query;
    return mode == CollisionMode::exact_text ? r.body : r.id;
  };
  for (std::size_t i = 0; i < batch.size(); ++i) {
    for (std::size_t j = 0; j < batch.size(); ++j) {
      if (i == j) continue;
      if (doc_key(i) == doc_key(j) || query_key(i) == query_key(j)) {
        out.emplace(i, j);
      }
    }
  }
  return out;
}

std::vector<double> surrogate_scores(std::span<const std::size_t> batch,
                                     const EmbeddingMatrix& docs,
                                     const EmbeddingMatrix& queries) {
  const std::size_t n = batch.size();
  std::vector<double> s(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      s[i * n + j] = surrogate::surrogate_score(queries.row(batch[i]),
                                                docs.row(batch[j]));
    }
  }
  return s;
}

LossMask mask_from_scores(std::span<const double> scores, std::size_t n,
                          const std::set<std::pair<std::size_t, std::size_t>>& collisions,
                          const FilterConfig& cfg) {
  if (scores.size() != n * n && cfg.enabled) {
    throw ShapeError("mask_from_scores: score matrix is not " +
                     std::to_string(n) + "x" + std::to_string(n));
  }
  LossMask mask(n);
  if (cfg.enabled) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j : equivalence_class(scores.subspan(i * n, n), i, cfg.epsilon)) {
        mask.set(i, j);
      }
    }
  }
  for (const auto& [i, j] : collisions) mask.set(i, j);
  return mask;
}

LossMask build_loss_mask(std::span<const std::size_t> batch,
                         const data::PairDataset& dataset,
                         const EmbeddingMatrix& docs,
                         const EmbeddingMatrix& queries,
                         const FilterConfig& cfg) {
  const auto collisions = detect_collisions(batch, dataset, cfg.collision_mode);
  std::vector<double> scores;
  if (cfg.enabled) scores = surrogate_scores(batch, docs, queries);
  return mask_from_scores(scores, batch.size(), collisions, cfg);
}

std::string MaskStats::to_json() const {
  nlohmann::json j = {{"batches", batches},
                      {"mean_masked_per_row", mean_masked_per_row},
                      {"collision_cells", collision_cells}};
  return j.dump();
}

}  // namespace cde::filter
