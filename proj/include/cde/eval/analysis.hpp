#pragma once

#include <span>

#include "cde/core/dataset.hpp"
#include "cde/core/embedding_matrix.hpp"

namespace cde::eval {

/// Mean over rows of the mean off-diagonal surrogate score q_i . d_j.
/// Rows of `docs` / `queries` are indexed by pair.
double batch_hardness(std::span<const std::size_t> batch, const EmbeddingMatrix& docs,
                      const EmbeddingMatrix& queries);

enum class DivergenceKind { cosine, l1 };

/// Distance between the IDF vectors of two corpora over the union of their
/// terms; a term missing from one side gets that side's unseen IDF.
/// cosine: 1 - cos. l1: sum |a - b| / (sum a + sum b). Both lie in [0, 1].
double idf_divergence(const data::Vocab& a, const data::Vocab& b,
                      DivergenceKind kind = DivergenceKind::cosine);

}  // namespace cde::eval
