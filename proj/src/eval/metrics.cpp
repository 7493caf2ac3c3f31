#include "cde/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "cde/error.hpp"

namespace cde::eval {

RankedList RankedList::make(std::string query_id,
                            std::vector<std::pair<std::string, double>> scored,
                            std::map<std::string, int> relevance) {
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return {std::move(query_id), std::move(scored), std::move(relevance)};
}

std::optional<double> ndcg_from_grades(std::span<const int> ranked_grades,
                                       std::vector<int> all_grades, std::size_t k) {
  std::sort(all_grades.begin(), all_grades.end(), std::greater<>());
  if (all_grades.empty() || all_grades.front() <= 0) return std::nullopt;
  auto dcg = [k](auto first, auto last) {
    double s = 0.0;
    std::size_t r = 1;
    for (auto it = first; it != last && r <= k; ++it, ++r) {
      s += static_cast<double>(*it) / std::log2(static_cast<double>(r) + 1.0);
    }
    return s;
  };
  const double ideal = dcg(all_grades.begin(), all_grades.end());
  return dcg(ranked_grades.begin(), ranked_grades.end()) / ideal;
}

std::optional<double> ndcg_at_k(const RankedList& ranked, std::size_t k) {
  std::vector<int> grades;
  grades.reserve(std::min(k, ranked.ranking.size()));
  for (std::size_t r = 0; r < ranked.ranking.size() && r < k; ++r) {
    auto it = ranked.relevance.find(ranked.ranking[r].first);
    grades.push_back(it == ranked.relevance.end() ? 0 : it->second);
  }
  std::vector<int> all;
  for (const auto& [id, g] : ranked.relevance) all.push_back(g);
  return ndcg_from_grades(grades, std::move(all), k);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["strategy"] = strategy;
  j["mean_ndcg10"] = mean_ndcg10;
  auto& pq = j["per_query"] = nlohmann::ordered_json::array();
  for (const auto& q : per_query) pq.push_back({{"query_id", q.query_id}, {"ndcg10", q.ndcg10}});
  j["skipped"] = skipped;
  return j.dump(2);
}

EvalReport EvalReport::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.strategy = j.at("strategy").get<std::string>();
    r.mean_ndcg10 = j.at("mean_ndcg10").get<double>();
    r.skipped = j.at("skipped").get<std::size_t>();
    for (const auto& q : j.at("per_query")) {
      r.per_query.push_back({q.at("query_id").get<std::string>(), q.at("ndcg10").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("eval report: ") + e.what());
  }
}

EvalReport EvalReport::merge(std::string strategy, std::span<const EvalReport> parts) {
  EvalReport out;
  out.strategy = std::move(strategy);
  double total = 0.0;
  for (const auto& p : parts) {
    out.skipped += p.skipped;
    for (const auto& q : p.per_query) {
      out.per_query.push_back(q);
      total += q.ndcg10;
    }
  }
  out.mean_ndcg10 = out.per_query.empty() ? 0.0 : total / static_cast<double>(out.per_query.size());
  return out;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pearson: length mismatch");
  if (x.size() < 2) throw InputError("pearson: need at least two points");
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw NumericError("pearson: constant series");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace cde::eval
