#include "cde/pack/packer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <json.hpp>

#include "cde/core/hash.hpp"
#include "cde/error.hpp"

namespace cde::pack {

Strategy parse_strategy(std::string_view name) {
  if (name == "random") return Strategy::random;
  if (name == "tsp") return Strategy::tsp;
  throw ConfigError("unknown packing strategy '" + std::string(name) + "'");
}

std::string_view strategy_name(Strategy s) {
  return s == Strategy::random ? "random" : "tsp";
}

void PackingConfig::validate() const {
  if (batch_size < 2) throw ConfigError("pack.batch_size must be >= 2");
}

std::vector<std::vector<std::size_t>> split_oversized(
    std::span<const std::size_t> pairs, std::size_t batch_size,
    std::uint64_t seed) {
  if (batch_size < 2) throw ConfigError("split_oversized: batch_size < 2");
  std::vector<std::size_t> shuffled(pairs.begin(), pairs.end());
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < shuffled.size(); i += batch_size) {
    const std::size_t end = std::min(shuffled.size(), i + batch_size);
    out.emplace_back(shuffled.begin() + static_cast<std::ptrdiff_t>(i),
                     shuffled.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

namespace {

double centroid_dist(const cluster::Centroid& a, const cluster::Centroid& b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.c.size(); ++t) {
    const double d = a.c[t] - b.c[t];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

MergeResult merge_undersized(std::vector<Fragment> fragments,
                             std::span<const cluster::Centroid> centroids,
                             const PackingConfig& cfg) {
  cfg.validate();
  const std::size_t bs = cfg.batch_size;
  MergeResult out;

  std::vector<Fragment> pool;
  for (Fragment& f : fragments) {
    if (f.pairs.empty()) continue;
    if (f.pairs.size() >= bs) {
      // Callers normally split first; chunk defensively anyway.
      while (f.pairs.size() >= bs) {
        Batch b;
        b.pair_indices.assign(f.pairs.begin(), f.pairs.begin() + static_cast<std::ptrdiff_t>(bs));
        b.source_clusters = {f.cluster};
        b.domain = f.domain;
        out.batches.push_back(std::move(b));
        f.pairs.erase(f.pairs.begin(), f.pairs.begin() + static_cast<std::ptrdiff_t>(bs));
      }
      if (f.pairs.empty()) continue;
    }
    pool.push_back(std::move(f));
  }

  auto same_pool = [&](const Fragment& a, const Fragment& b) {
    return cfg.allow_cross_domain || a.domain == b.domain;
  };
  auto cent = [&](std::size_t cluster_id) -> const cluster::Centroid& {
    if (cluster_id >= centroids.size()) {
      throw ShapeError("merge_undersized: fragment references missing cluster " +
                       std::to_string(cluster_id));
    }
    return centroids[cluster_id];
  };

  // The current fragment accumulates pairs; `anchor` is the cluster whose
  // centroid the next nearest-neighbour lookup starts from.
  while (!pool.empty()) {
    Fragment cur = std::move(pool.front());
    pool.erase(pool.begin());
    std::set<std::size_t> sources = {cur.cluster};
    std::size_t anchor = cur.cluster;
    bool mixed = false;

    for (;;) {
      std::size_t best = pool.size();
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < pool.size(); ++i) {
        if (!same_pool(cur, pool[i])) continue;
        const double d = centroid_dist(cent(anchor), cent(pool[i].cluster));
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      if (best == pool.size()) break;

      Fragment next = std::move(pool[best]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
      mixed |= next.domain != cur.domain;
      sources.insert(next.cluster);
      anchor = next.cluster;
      cur.pairs.insert(cur.pairs.end(), next.pairs.begin(), next.pairs.end());
      if (cur.pairs.size() >= bs) {
        Batch b;
        b.pair_indices.assign(cur.pairs.begin(), cur.pairs.begin() + static_cast<std::ptrdiff_t>(bs));
        b.source_clusters = sources;
        b.domain = mixed ? "*" : cur.domain;
        out.batches.push_back(std::move(b));
        if (cur.pairs.size() > bs) {
          Fragment overflow;
          overflow.pairs.assign(cur.pairs.begin() + static_cast<std::ptrdiff_t>(bs), cur.pairs.end());
          overflow.cluster = next.cluster;
          overflow.domain = next.domain;
          pool.insert(pool.begin(), std::move(overflow));
        }
        cur.pairs.clear();
        break;
      }
    }
    if (cur.pairs.empty()) continue;

    // Nothing left to merge with in this pool.
    if (cfg.keep_short_tail && 2 * cur.pairs.size() >= bs) {
      Batch b;
      b.pair_indices = std::move(cur.pairs);
      b.source_clusters = sources;
      b.domain = mixed ? "*" : cur.domain;
      out.batches.push_back(std::move(b));
    } else {
      out.dropped.insert(out.dropped.end(), cur.pairs.begin(), cur.pairs.end());
    }
  }
  std::sort(out.dropped.begin(), out.dropped.end());
  return out;
}

std::vector<std::size_t> order_clusters_greedy_tsp_from(
    std::span<const cluster::Centroid> centroids, std::size_t start) {
  const std::size_t n = centroids.size();
  if (n == 0) throw ConfigError("order_clusters_greedy_tsp: no centroids");
  if (start >= n) throw ConfigError("order_clusters_greedy_tsp: bad start");
  std::vector<bool> visited(n, false);
  std::vector<std::size_t> order = {start};
  visited[start] = true;
  while (order.size() < n) {
    const auto& here = centroids[order.back()];
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (visited[c]) continue;
      const double d = centroid_dist(here, centroids[c]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    visited[best] = true;
    order.push_back(best);
  }
  return order;
}

std::vector<std::size_t> order_clusters_greedy_tsp(
    std::span<const cluster::Centroid> centroids, std::uint64_t seed) {
  if (centroids.empty()) throw ConfigError("order_clusters_greedy_tsp: no centroids");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, centroids.size() - 1);
  return order_clusters_greedy_tsp_from(centroids, pick(rng));
}

double tour_length(std::span<const cluster::Centroid> centroids,
                   std::span<const std::size_t> order) {
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    total += centroid_dist(centroids[order[i - 1]], centroids[order[i]]);
  }
  return total;
}

std::size_t BatchPlan::covered_pairs() const {
  std::size_t n = 0;
  for (const Batch& b : batches) n += b.pair_indices.size();
  return n;
}

std::uint64_t BatchPlan::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (const Batch& b : batches) {
    for (std::size_t i : b.pair_indices) h = mix64(h ^ (i + 1));
    h = mix64(h ^ 0xb47c);
  }
  return h;
}

BatchPlan pack_batches(const cluster::ClusterAssignment& assignment,
                       std::span<const std::string> pair_domains,
                       const PackingConfig& cfg) {
  cfg.validate();
  if (pair_domains.size() != assignment.assignment.size()) {
    throw ShapeError("pack_batches: domain labels not aligned with assignment");
  }

  std::map<std::string, std::size_t> population;
  for (const auto& d : pair_domains) ++population[d];
  if (!cfg.allow_cross_domain) {
    auto largest = std::max_element(
        population.begin(), population.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    if (largest != population.end() && cfg.batch_size > largest->second) {
      throw ConfigError("pack_batches: batch_size " +
                        std::to_string(cfg.batch_size) +
                        " exceeds the largest domain '" + largest->first +
                        "' with " + std::to_string(largest->second) + " pairs");
    }
  } else if (cfg.batch_size > pair_domains.size()) {
    throw ConfigError("pack_batches: batch_size exceeds dataset size");
  }

  // A unit is the members of one cluster inside one domain.
  std::map<std::string, std::map<std::size_t, std::vector<std::size_t>>> units;
  for (std::size_t i = 0; i < assignment.assignment.size(); ++i) {
    units[pair_domains[i]][assignment.assignment[i]].push_back(i);
  }

  std::mt19937_64 rng(mix64(cfg.seed ^ 0x7061636bULL));
  std::vector<Fragment> pool;
  std::vector<Batch> full;
  for (auto& [domain, clusters] : units) {
    std::vector<std::size_t> ids;
    for (const auto& [cid, members] : clusters) ids.push_back(cid);

    std::vector<std::size_t> order;
    if (cfg.strategy == Strategy::tsp) {
      std::vector<cluster::Centroid> sub;
      for (std::size_t cid : ids) sub.push_back(assignment.centroids.at(cid));
      for (std::size_t local : order_clusters_greedy_tsp(sub, rng())) {
        order.push_back(ids[local]);
      }
    } else {
      order = ids;
      std::shuffle(order.begin(), order.end(), rng);
    }

    for (std::size_t cid : order) {
      auto pieces = split_oversized(clusters[cid], cfg.batch_size, rng());
      for (auto& piece : pieces) {
        if (piece.size() == cfg.batch_size) {
          Batch b;
          b.pair_indices = std::move(piece);
          b.source_clusters = {cid};
          b.domain = domain;
          full.push_back(std::move(b));
        } else {
          pool.push_back({std::move(piece), cid, domain});
        }
      }
    }
  }

  MergeResult merged = merge_undersized(std::move(pool), assignment.centroids, cfg);
  BatchPlan plan;
  plan.batch_size = cfg.batch_size;
  plan.batches = std::move(full);
  for (Batch& b : merged.batches) plan.batches.push_back(std::move(b));
  plan.dropped = std::move(merged.dropped);
  if (cfg.strategy == Strategy::random) {
    std::shuffle(plan.batches.begin(), plan.batches.end(), rng);
  }
  return plan;
}

BatchPlan random_batches(std::span<const std::string> pair_domains, const PackingConfig& cfg) {
  cfg.validate();
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < pair_domains.size(); ++i) {
    groups[cfg.allow_cross_domain ? std::string("*") : pair_domains[i]].push_back(i);
  }
  std::size_t largest = 0;
  for (const auto& [d, g] : groups) largest = std::max(largest, g.size());
  if (cfg.batch_size > largest) {
    throw ConfigError("random_batches: batch_size " + std::to_string(cfg.batch_size) +
                      " exceeds the largest group of " + std::to_string(largest) + " pairs");
  }
  std::mt19937_64 rng(mix64(cfg.seed ^ 0x72616e64ULL));
  BatchPlan plan;
  plan.batch_size = cfg.batch_size;
  for (auto& [domain, members] : groups) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t begin = 0; begin < members.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(members.size(), begin + cfg.batch_size);
      std::vector<std::size_t> chunk(members.begin() + static_cast<std::ptrdiff_t>(begin),
                                     members.begin() + static_cast<std::ptrdiff_t>(end));
      const bool short_tail = chunk.size() < cfg.batch_size;
      if (short_tail && (!cfg.keep_short_tail || 2 * chunk.size() < cfg.batch_size)) {
        plan.dropped.insert(plan.dropped.end(), chunk.begin(), chunk.end());
        continue;
      }
      Batch b;
      b.pair_indices = std::move(chunk);
      b.domain = domain;
      plan.batches.push_back(std::move(b));
    }
  }
  std::sort(plan.dropped.begin(), plan.dropped.end());
  std::shuffle(plan.batches.begin(), plan.batches.end(), rng);
  return plan;
}

std::string plan_jsonl(const BatchPlan& plan) {
  std::string out;
  for (std::size_t i = 0; i < plan.batches.size(); ++i) {
    nlohmann::json line = {{"batch_id", i},
                           {"pair_indices", plan.batches[i].pair_indices},
                           {"domain", plan.batches[i].domain}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::string drop_report_json(const BatchPlan& plan) {
  nlohmann::json j = {{"dropped", plan.dropped.size()}, {"indices", plan.dropped}};
  return j.dump();
}

BatchPlan parse_plan(std::string_view plan_text, std::string_view drop_json) {
  BatchPlan plan;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  try {
    while (pos < plan_text.size()) {
      std::size_t end = plan_text.find('\n', pos);
      if (end == std::string_view::npos) end = plan_text.size();
      std::string_view line = plan_text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
      auto obj = nlohmann::json::parse(line);
      Batch b;
      b.pair_indices = obj.at("pair_indices").get<std::vector<std::size_t>>();
      b.domain = obj.at("domain").get<std::string>();
      plan.batch_size = std::max(plan.batch_size, b.pair_indices.size());
      plan.batches.push_back(std::move(b));
    }
    if (!drop_json.empty()) {
      auto obj = nlohmann::json::parse(drop_json);
      plan.dropped = obj.at("indices").get<std::vector<std::size_t>>();
      if (obj.at("dropped").get<std::size_t>() != plan.dropped.size()) {
        throw FormatError("drop report: count does not match indices");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("batch plan line " + std::to_string(line_no) + ": " + e.what());
  }
  return plan;
}

}  // namespace cde::pack
