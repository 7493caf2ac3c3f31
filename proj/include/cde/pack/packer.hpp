#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cde/cluster/kmeans.hpp"

namespace cde::pack {

enum class Strategy { random, tsp };

Strategy parse_strategy(std::string_view name);
std::string_view strategy_name(Strategy s);

struct PackingConfig {
  std::size_t batch_size = 32;
  Strategy strategy = Strategy::tsp;
  std::uint64_t seed = 0;
  bool allow_cross_domain = false;
  /// Keep a per-domain final batch of at least batch_size / 2 pairs.
  /// When false every leftover is dropped and all batches are full.
  bool keep_short_tail = true;

  void validate() const;
};

struct Batch {
  std::vector<std::size_t> pair_indices;
  std::set<std::size_t> source_clusters;
  /// Domain label, or "*" for a cross-domain batch.
  std::string domain;
};

/// A piece of one cluster waiting to be packed.
struct Fragment {
  std::vector<std::size_t> pairs;
  std::size_t cluster = 0;
  std::string domain;
};

/// Shuffles `pairs` and chunks them; every chunk has batch_size entries
/// except possibly the last.
std::vector<std::vector<std::size_t>> split_oversized(
    std::span<const std::size_t> pairs, std::size_t batch_size,
    std::uint64_t seed);

struct MergeResult {
  std::vector<Batch> batches;
  std::vector<std::size_t> dropped;
};

/// Full fragments become batches as-is. Undersized fragments are merged in
/// pool order with the nearest-centroid undersized fragment of the same
/// domain until a batch fills; the overflow returns to the pool. A last
/// fragment below batch_size / 2 is dropped.
MergeResult merge_undersized(std::vector<Fragment> fragments,
                             std::span<const cluster::Centroid> centroids,
                             const PackingConfig& cfg);

/// Greedy nearest-neighbour walk over centroids from `start`; ties go to
/// the lower cluster id.
std::vector<std::size_t> order_clusters_greedy_tsp_from(
    std::span<const cluster::Centroid> centroids, std::size_t start);
/// Same walk starting from a seed-chosen cluster.
std::vector<std::size_t> order_clusters_greedy_tsp(
    std::span<const cluster::Centroid> centroids, std::uint64_t seed);

/// Sum of Euclidean steps between consecutive centroids of `order`.
double tour_length(std::span<const cluster::Centroid> centroids,
                   std::span<const std::size_t> order);

struct BatchPlan {
  std::size_t batch_size = 0;
  std::vector<Batch> batches;
  std::vector<std::size_t> dropped;

  std::size_t covered_pairs() const;
  std::uint64_t fingerprint() const;
};

/// Orders clusters per the strategy, splits oversized clusters, merges
/// undersized fragments and reports drops. `pair_domains` is row-aligned
/// with the assignment.
BatchPlan pack_batches(const cluster::ClusterAssignment& assignment,
                       std::span<const std::string> pair_domains,
                       const PackingConfig& cfg);

/// Baseline plan without clustering: pairs shuffled and chunked per
/// domain (or globally with allow_cross_domain), same tail rule as
/// pack_batches, batch order shuffled.
BatchPlan random_batches(std::span<const std::string> pair_domains, const PackingConfig& cfg);

/// JSONL {"batch_id": n, "pair_indices": [...], "domain": "..."}.
std::string plan_jsonl(const BatchPlan& plan);
/// {"dropped": count, "indices": [...]}.
std::string drop_report_json(const BatchPlan& plan);
BatchPlan parse_plan(std::string_view plan_jsonl, std::string_view drop_json);

}  // namespace cde::pack
