#include "cde/train/steps.hpp"

#include <numeric>
#include <random>

#include "cde/core/hash.hpp"

namespace cde::train {

TokenizedPairs tokenize_pairs(const data::PairDataset& dataset, const model::TokenEncoder& enc,
                              const model::ModelConfig& cfg) {
  TokenizedPairs out;
  out.queries.reserve(dataset.size());
  out.documents.reserve(dataset.size());
  out.context_documents.reserve(dataset.size());
  for (const auto& pair : dataset.pairs()) {
    out.queries.push_back(enc.encode(pair.query.text, model::Role::query, cfg.max_len));
    out.documents.push_back(enc.encode(pair.document.text, model::Role::document, cfg.max_len));
    out.context_documents.push_back(
        enc.encode(pair.document.text, model::Role::document, cfg.context_doc_tokens));
  }
  return out;
}

BatchTexts gather_batch(const TokenizedPairs& tokens, std::span<const std::size_t> batch) {
  BatchTexts out;
  for (std::size_t i : batch) {
    if (i >= tokens.queries.size()) throw InputError("batch index out of range");
    out.queries.push_back(tokens.queries[i]);
    out.documents.push_back(tokens.documents[i]);
  }
  return out;
}

std::vector<std::size_t> subsample_context(std::size_t n, std::size_t k, std::uint64_t seed,
                                           std::uint64_t step) {
  if (k < 1) throw ConfigError("context_k must be >= 1");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n <= k) return idx;
  std::mt19937_64 rng(mix64(seed ^ mix64(step + 0x5bd1e995ULL)));
  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

ContextPlan plan_context(const TokenizedPairs& tokens, std::span<const std::size_t> batch,
                         std::size_t capacity, const TrainConfig& cfg, std::uint64_t step,
                         bool training) {
  const auto chosen = subsample_context(batch.size(), std::min(cfg.context_k, capacity),
                                        cfg.seed, step);
  std::vector<std::uint8_t> dropped(chosen.size(), 0);
  if (training) {
    dropped = model::sample_dropout_mask(chosen.size(), cfg.seq_dropout_p,
                                         mix64(cfg.seed ^ mix64(step + 0x9e3779b9ULL)));
  }
  ContextPlan plan;
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    if (dropped[s] == 0) plan.docs.push_back(tokens.context_documents.at(batch[chosen[s]]));
  }
  plan.null_mask.assign(capacity, 1);
  std::fill(plan.null_mask.begin(),
            plan.null_mask.begin() + static_cast<std::ptrdiff_t>(plan.docs.size()), 0);
  return plan;
}

}  // namespace cde::train
