#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cde/core/embedding_matrix.hpp"

namespace cde::cluster {

/// The two embeddings of one (document, query) pair.
struct PairVectors {
  std::span<const float> doc;    // phi(d)
  std::span<const float> query;  // psi(q)
};

/// m(a, b) = ||phi(d_a) - psi(q_b)|| + ||phi(d_b) - psi(q_a)||, unsquared.
double pair_metric(PairVectors a, PairVectors b);

/// A pair seen as the two concatenations u = phi(d) ++ psi(q) and
/// v = psi(q) ++ phi(d).
struct PairPoint {
  std::vector<double> u;
  std::vector<double> v;
  std::size_t pair_index = 0;
};

PairPoint make_pair_point(PairVectors pv, std::size_t pair_index);
std::vector<PairPoint> make_pair_points(const EmbeddingMatrix& docs,
                                        const EmbeddingMatrix& queries,
                                        std::span<const std::size_t> indices);

struct Centroid {
  std::vector<double> c;
  std::size_t member_count = 0;
};

/// ||u - c||^2 + ||v - c||^2. Squared so that the member mean is the exact
/// minimizer used by the Lloyd update.
double point_to_centroid_cost(const PairPoint& p, const Centroid& c);

struct InitResult {
  std::vector<Centroid> centroids;
  /// Set when fewer than k distinct vectors existed and seeds repeat.
  bool duplicates = false;
};

/// k-means++ seeding over the 2N vectors {u_i} and {v_i}.
InitResult kmeans_init(std::span<const PairPoint> points, std::size_t k,
                       std::uint64_t seed);

struct ClusterConfig {
  std::size_t k = 8;
  std::size_t max_iters = 100;
  std::size_t restarts = 3;
  std::uint64_t seed = 0;
  bool per_domain = true;
  /// Stop when (prev - cur) / prev drops below this.
  double tol = 1e-4;
  /// When > 0, each clustering unit uses k = max(1, n / target_size)
  /// instead of `k`.
  std::size_t target_size = 0;

  void validate() const;
};

/// Result of one Lloyd run from a fixed seeding.
struct LloydResult {
  std::vector<std::size_t> assignment;  // local cluster per point
  std::vector<Centroid> centroids;
  double objective = 0.0;
  /// Objective after every update step, in order.
  std::vector<double> trace;
};

LloydResult lloyd(std::span<const PairPoint> points,
                  std::vector<Centroid> initial, std::size_t max_iters,
                  double tol);

struct ClusterAssignment {
  /// Global cluster id per dataset pair.
  std::vector<std::size_t> assignment;
  std::size_t k = 0;
  double objective = 0.0;
  std::vector<Centroid> centroids;
  std::vector<std::string> cluster_domain;
  /// Per-cluster share of the objective (sums to 1 when objective > 0).
  std::vector<double> objective_share;
  /// One trace per (domain, restart) Lloyd run.
  std::vector<std::vector<double>> traces;
  bool init_duplicates = false;

  std::vector<std::vector<std::size_t>> members() const;
};

/// Joint-assignment Lloyd iterations on the paired points, best of
/// cfg.restarts seedings, run per domain label when cfg.per_domain.
/// `domains` is row-aligned with the matrices; pass empty to treat the
/// dataset as one domain.
ClusterAssignment cluster_pairs(const EmbeddingMatrix& docs,
                                const EmbeddingMatrix& queries,
                                const ClusterConfig& cfg,
                                std::span<const std::string> domains = {});

/// Independent recomputation: sum over points of point_to_centroid_cost
/// against the assigned centroid.
double clustering_objective(std::span<const PairPoint> points,
                            std::span<const std::size_t> assignment,
                            std::span<const Centroid> centroids);

/// Sum over ordered pairs (i, j), i != j, of
/// phi(d_i).psi(q_j) + phi(d_j).psi(q_i). Each unordered pair therefore
/// contributes its two cross scores twice.
double batch_adversarial_score(std::span<const std::size_t> batch,
                               const EmbeddingMatrix& docs,
                               const EmbeddingMatrix& queries);

/// Rebuilds an assignment from pair -> cluster ids: centroids are member
/// means (the fixed point Lloyd stops at), the domain of a cluster is that
/// of its members ("" when mixed), and the objective is recomputed.
ClusterAssignment assignment_from_ids(std::vector<std::size_t> ids, std::size_t k,
                                      const EmbeddingMatrix& docs,
                                      const EmbeddingMatrix& queries,
                                      std::span<const std::string> domains = {});

/// JSONL lines {"cluster": id, "pairs": [...], "objective_share": x}.
std::string cluster_file_jsonl(const ClusterAssignment& a);

/// Parses a cluster file back into pair -> cluster ids. `num_pairs` sizes
/// the result; unlisted pairs raise FormatError.
std::vector<std::size_t> parse_cluster_file(std::string_view contents,
                                            std::size_t num_pairs,
                                            std::size_t* num_clusters = nullptr);

}  // namespace cde::cluster
