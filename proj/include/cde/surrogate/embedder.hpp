#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cde/core/dataset.hpp"
#include "cde/core/embedding_matrix.hpp"

namespace cde::surrogate {

struct SurrogateConfig {
  /// Power of two, >= 2.
  std::size_t hash_dim = 256;
  /// When false every term gets weight 1 (plain hashed term frequency).
  bool idf_smoothing = true;
  bool normalize = true;

  void validate() const;
};

/// ln((1 + N) / (1 + df)) + 1. Unseen terms use df = 0.
double idf(const data::Vocab& vocab, std::string_view term);
double idf_from_counts(std::size_t num_docs, std::size_t df);

/// Bucket and sign for a token. The bucket is fnv1a64(token) mod hash_dim;
/// the sign comes from the top bit of mix64(fnv1a64(token)).
struct HashSlot {
  std::size_t bucket;
  float sign;
};
HashSlot hash_slot(std::string_view token, std::size_t hash_dim);

/// Signed hashed tf-idf vector of length cfg.hash_dim.
std::vector<float> embed_text(std::string_view text, const data::Vocab& vocab,
                              const SurrogateConfig& cfg);

/// Embeds each text into one row; ids are copied from `ids`.
EmbeddingMatrix embed_texts(const std::vector<std::string>& texts,
                            const std::vector<std::string>& ids,
                            const data::Vocab& vocab,
                            const SurrogateConfig& cfg);

/// Document (phi) and query (psi) surrogate matrices, row-aligned with the
/// dataset's pairs.
struct PairEmbeddings {
  EmbeddingMatrix documents;
  EmbeddingMatrix queries;
};
PairEmbeddings embed_pairs(const data::PairDataset& dataset,
                           const data::Vocab& vocab,
                           const SurrogateConfig& cfg);

/// Dot product; throws ShapeError on dimension mismatch.
double surrogate_score(std::span<const float> q, std::span<const float> d);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace cde::surrogate
