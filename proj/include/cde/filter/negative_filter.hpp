#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cde/core/dataset.hpp"
#include "cde/core/embedding_matrix.hpp"

namespace cde::filter {

enum class CollisionMode { exact_text, exact_id, off };

CollisionMode parse_collision_mode(std::string_view name);
std::string_view collision_mode_name(CollisionMode m);

struct FilterConfig {
  /// Absolute margin in surrogate-score units.
  double epsilon = 0.0;
  bool enabled = true;
  CollisionMode collision_mode = CollisionMode::exact_text;
};

/// Row = query position in the batch, column = document position.
/// mask(i, j) == true removes score (i, j) from row i's normalizer. The
/// diagonal is never masked.
class LossMask {
 public:
  LossMask() = default;
  explicit LossMask(std::size_t n) : n_(n), cells_(n * n, 0) {}

  std::size_t size() const noexcept { return n_; }
  bool operator()(std::size_t i, std::size_t j) const {
    return cells_[i * n_ + j] != 0;
  }
  /// Ignores diagonal cells.
  void set(std::size_t i, std::size_t j);
  std::size_t masked_count() const noexcept { return masked_; }
  std::size_t masked_in_row(std::size_t i) const;

  bool operator==(const LossMask&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> cells_;
  std::size_t masked_ = 0;
};

/// S = { j != gold : scores[j] >= scores[gold] + epsilon }.
std::vector<std::size_t> equivalence_class(std::span<const double> scores,
                                           std::size_t gold, double epsilon);

/// Cells (i, j), i != j, whose document texts or query texts coincide
/// under `mode`. Positions are batch-local.
std::set<std::pair<std::size_t, std::size_t>> detect_collisions(
    std::span<const std::size_t> batch, const data::PairDataset& dataset,
    CollisionMode mode);

/// Surrogate score matrix S[i][j] = psi(q_i) . phi(d_j) over a batch.
std::vector<double> surrogate_scores(std::span<const std::size_t> batch,
                                     const EmbeddingMatrix& docs,
                                     const EmbeddingMatrix& queries);

/// Mask from a precomputed row-major score matrix plus collision cells.
LossMask mask_from_scores(std::span<const double> scores, std::size_t n,
                          const std::set<std::pair<std::size_t, std::size_t>>& collisions,
                          const FilterConfig& cfg);

LossMask build_loss_mask(std::span<const std::size_t> batch,
                         const data::PairDataset& dataset,
                         const EmbeddingMatrix& docs,
                         const EmbeddingMatrix& queries,
                         const FilterConfig& cfg);

struct MaskStats {
  std::size_t batches = 0;
  double mean_masked_per_row = 0.0;
  std::size_t collision_cells = 0;

  std::string to_json() const;
};

}  // namespace cde::filter
