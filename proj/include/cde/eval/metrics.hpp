#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cde::eval {

/// One query's ranking: documents by descending score, ties by lower id.
struct RankedList {
  std::string query_id;
  std::vector<std::pair<std::string, double>> ranking;
  /// doc id -> grade; binary at desk scale.
  std::map<std::string, int> relevance;

  /// Sorts (id, score) entries into ranking order.
  static RankedList make(std::string query_id,
                         std::vector<std::pair<std::string, double>> scored,
                         std::map<std::string, int> relevance);
};

/// NDCG@k with gain rel / log2(rank + 1). nullopt when the query has no
/// relevant document.
std::optional<double> ndcg_at_k(const RankedList& ranked, std::size_t k = 10);

/// Same formula over grades already in ranked order and the full list of
/// grades available for the ideal ordering.
std::optional<double> ndcg_from_grades(std::span<const int> ranked_grades,
                                       std::vector<int> all_grades, std::size_t k = 10);

struct QueryScore {
  std::string query_id;
  double ndcg10 = 0.0;
  bool operator==(const QueryScore&) const = default;
};

struct EvalReport {
  std::string strategy;
  double mean_ndcg10 = 0.0;
  std::vector<QueryScore> per_query;
  std::size_t skipped = 0;

  std::string to_json() const;
  static EvalReport from_json(std::string_view text);
  /// Concatenates per-query scores and recomputes the mean.
  static EvalReport merge(std::string strategy, std::span<const EvalReport> parts);
  bool operator==(const EvalReport&) const = default;
};

double mean(std::span<const double> xs);
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace cde::eval
