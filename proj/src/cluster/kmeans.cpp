#include "cde/cluster/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include <json.hpp>

#include "cde/core/hash.hpp"
#include "cde/error.hpp"

namespace cde::cluster {

namespace {

double l2(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void check_dims(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw ShapeError(std::string(what) + ": dimension " + std::to_string(got) +
                     " does not match " + std::to_string(expected));
  }
}

}  // namespace

double pair_metric(PairVectors a, PairVectors b) {
  const std::size_t dim = a.doc.size();
  check_dims(dim, a.query.size(), "pair_metric");
  check_dims(dim, b.doc.size(), "pair_metric");
  check_dims(dim, b.query.size(), "pair_metric");
  return l2(a.doc, b.query) + l2(b.doc, a.query);
}

PairPoint make_pair_point(PairVectors pv, std::size_t pair_index) {
  check_dims(pv.doc.size(), pv.query.size(), "make_pair_point");
  PairPoint p;
  p.pair_index = pair_index;
  p.u.reserve(2 * pv.doc.size());
  p.v.reserve(2 * pv.doc.size());
  p.u.insert(p.u.end(), pv.doc.begin(), pv.doc.end());
  p.u.insert(p.u.end(), pv.query.begin(), pv.query.end());
  p.v.insert(p.v.end(), pv.query.begin(), pv.query.end());
  p.v.insert(p.v.end(), pv.doc.begin(), pv.doc.end());
  return p;
}

std::vector<PairPoint> make_pair_points(const EmbeddingMatrix& docs,
                                        const EmbeddingMatrix& queries,
                                        std::span<const std::size_t> indices) {
  check_dims(docs.dim(), queries.dim(), "make_pair_points");
  if (docs.rows() != queries.rows()) {
    throw ShapeError("make_pair_points: document and query matrices have " +
                     std::to_string(docs.rows()) + " and " +
                     std::to_string(queries.rows()) + " rows");
  }
  std::vector<PairPoint> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    out.push_back(make_pair_point({docs.row(i), queries.row(i)}, i));
  }
  return out;
}

double point_to_centroid_cost(const PairPoint& p, const Centroid& c) {
  check_dims(c.c.size(), p.u.size(), "point_to_centroid_cost");
  check_dims(c.c.size(), p.v.size(), "point_to_centroid_cost");
  return sq_dist(p.u, c.c) + sq_dist(p.v, c.c);
}

InitResult kmeans_init(std::span<const PairPoint> points, std::size_t k,
                       std::uint64_t seed) {
  if (points.empty()) throw ConfigError("kmeans_init: no points");
  if (k < 1 || k > 2 * points.size()) {
    throw ConfigError("kmeans_init: k=" + std::to_string(k) + " exceeds " +
                      std::to_string(2 * points.size()) + " vectors");
  }
  // The 2N-vector multiset: index 2i is u_i, 2i+1 is v_i.
  const std::size_t n = 2 * points.size();
  auto vec = [&](std::size_t j) -> const std::vector<double>& {
    return (j % 2 == 0) ? points[j / 2].u : points[j / 2].v;
  };

  std::mt19937_64 rng(seed);
  InitResult out;
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  out.centroids.push_back({vec(pick(rng)), 0});

  std::vector<double> d2(n);
  for (std::size_t j = 0; j < n; ++j) d2[j] = sq_dist(vec(j), out.centroids[0].c);
  while (out.centroids.size() < k) {
    double total = 0.0;
    for (double x : d2) total += x;
    std::size_t chosen = 0;
    if (total <= 0.0) {
      out.duplicates = true;
      chosen = pick(rng);
    } else {
      std::uniform_real_distribution<double> u01(0.0, total);
      double r = u01(rng);
      chosen = n - 1;
      for (std::size_t j = 0; j < n; ++j) {
        r -= d2[j];
        if (r < 0.0) {
          chosen = j;
          break;
        }
      }
      // Skip zero-weight tail entries a rounding remainder may land on.
      while (d2[chosen] <= 0.0 && chosen > 0) --chosen;
    }
    out.centroids.push_back({vec(chosen), 0});
    for (std::size_t j = 0; j < n; ++j) {
      d2[j] = std::min(d2[j], sq_dist(vec(j), out.centroids.back().c));
    }
  }
  return out;
}

void ClusterConfig::validate() const {
  if (k < 1 && target_size == 0) throw ConfigError("cluster.k must be >= 1");
  if (max_iters < 1) throw ConfigError("cluster.max_iters must be >= 1");
  if (restarts < 1) throw ConfigError("cluster.restarts must be >= 1");
  if (!(tol >= 0.0)) throw ConfigError("cluster.tol must be >= 0");
}

namespace {

// Every centroid the update step can produce is a mean of (u + v) / 2 and so
// has equal halves. A raw u or v seed also carries (d - q) / 2 in its halves,
// which adds a per-centroid constant to every assignment cost; projecting it
// away keeps the first assignment unbiased.
void symmetrize(std::vector<double>& c) {
  const std::size_t h = c.size() / 2;
  for (std::size_t t = 0; t < h; ++t) c[t] = c[t + h] = 0.5 * (c[t] + c[t + h]);
}

}  // namespace

LloydResult lloyd(std::span<const PairPoint> points,
                  std::vector<Centroid> initial, std::size_t max_iters,
                  double tol) {
  const std::size_t n = points.size();
  const std::size_t k = initial.size();
  const std::size_t width = points.front().u.size();

  // Assignment uses the expansion cost = |u|^2 + |v|^2 - 2 (u+v).c + 2|c|^2;
  // only the last two terms depend on the centroid.
  std::vector<std::vector<double>> sums(n, std::vector<double>(width));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < width; ++t) {
      sums[i][t] = points[i].u[t] + points[i].v[t];
    }
  }

  LloydResult res;
  res.centroids = std::move(initial);
  res.assignment.assign(n, 0);
  std::vector<double> cnorm(k);
  std::vector<double> cost(n);

  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (double x : res.centroids[c].c) s += x * x;
      cnorm[c] = s;
    }
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_val = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        double dotp = 0.0;
        const double* cc = res.centroids[c].c.data();
        const double* ss = sums[i].data();
        for (std::size_t t = 0; t < width; ++t) dotp += ss[t] * cc[t];
        const double val = 2.0 * cnorm[c] - 2.0 * dotp;
        if (val < best_val) {
          best_val = val;
          best = c;
        }
      }
      res.assignment[i] = best;
    }

    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a : res.assignment) ++counts[a];
    if (std::find(counts.begin(), counts.end(), 0) != counts.end()) {
      // Empty-cluster repair: move the costliest point (from a cluster with
      // more than one member) into each empty cluster.
      for (std::size_t i = 0; i < n; ++i) {
        cost[i] = point_to_centroid_cost(points[i],
                                         res.centroids[res.assignment[i]]);
      }
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return cost[a] > cost[b]; });
      std::size_t cursor = 0;
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        while (cursor < n && counts[res.assignment[order[cursor]]] <= 1) ++cursor;
        if (cursor == n) break;
        const std::size_t i = order[cursor++];
        --counts[res.assignment[i]];
        res.assignment[i] = c;
        counts[c] = 1;
      }
    }

    for (auto& c : res.centroids) {
      std::fill(c.c.begin(), c.c.end(), 0.0);
      c.member_count = 0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      Centroid& c = res.centroids[res.assignment[i]];
      ++c.member_count;
      for (std::size_t t = 0; t < width; ++t) c.c[t] += sums[i][t];
    }
    for (auto& c : res.centroids) {
      if (c.member_count == 0) continue;
      const double inv = 1.0 / (2.0 * static_cast<double>(c.member_count));
      for (double& x : c.c) x *= inv;
    }

    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      obj += point_to_centroid_cost(points[i], res.centroids[res.assignment[i]]);
    }
    res.trace.push_back(obj);
    res.objective = obj;
    if (obj == 0.0) break;
    if (std::isfinite(prev) && (prev - obj) <= tol * prev) break;
    prev = obj;
  }
  return res;
}

std::vector<std::vector<std::size_t>> ClusterAssignment::members() const {
  std::vector<std::vector<std::size_t>> out(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    out[assignment[i]].push_back(i);
  }
  return out;
}

ClusterAssignment cluster_pairs(const EmbeddingMatrix& docs,
                                const EmbeddingMatrix& queries,
                                const ClusterConfig& cfg,
                                std::span<const std::string> domains) {
  cfg.validate();
  if (docs.rows() == 0) throw ConfigError("cluster_pairs: empty dataset");
  if (!domains.empty() && domains.size() != docs.rows()) {
    throw ShapeError("cluster_pairs: domain labels not row-aligned");
  }

  std::map<std::string, std::vector<std::size_t>> units;
  for (std::size_t i = 0; i < docs.rows(); ++i) {
    const std::string label =
        (cfg.per_domain && !domains.empty()) ? domains[i] : std::string();
    units[label].push_back(i);
  }

  ClusterAssignment out;
  out.assignment.assign(docs.rows(), 0);
  std::vector<double> cluster_cost;
  for (const auto& [label, indices] : units) {
    const std::size_t k =
        cfg.target_size > 0
            ? std::max<std::size_t>(1, indices.size() / cfg.target_size)
            : cfg.k;
    if (k > indices.size()) {
      throw ConfigError("cluster_pairs: k=" + std::to_string(k) +
                        " exceeds the " + std::to_string(indices.size()) +
                        " pairs of domain '" + label + "'");
    }
    const auto points = make_pair_points(docs, queries, indices);

    LloydResult best;
    bool have_best = false;
    const std::uint64_t unit_seed = mix64(cfg.seed ^ fnv1a64(label));
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
      InitResult init = kmeans_init(points, k, mix64(unit_seed + r));
      out.init_duplicates |= init.duplicates;
      for (auto& c : init.centroids) symmetrize(c.c);
      LloydResult run = lloyd(points, std::move(init.centroids),
                              cfg.max_iters, cfg.tol);
      out.traces.push_back(run.trace);
      if (!have_best || run.objective < best.objective) {
        best = std::move(run);
        have_best = true;
      }
    }

    const std::size_t offset = out.k;
    for (std::size_t p = 0; p < indices.size(); ++p) {
      out.assignment[indices[p]] = offset + best.assignment[p];
    }
    cluster_cost.resize(offset + k, 0.0);
    for (std::size_t p = 0; p < indices.size(); ++p) {
      cluster_cost[offset + best.assignment[p]] +=
          point_to_centroid_cost(points[p], best.centroids[best.assignment[p]]);
    }
    for (auto& c : best.centroids) {
      out.centroids.push_back(std::move(c));
      out.cluster_domain.push_back(label);
    }
    out.k += k;
    out.objective += best.objective;
  }

  out.objective_share.resize(out.k, 0.0);
  for (std::size_t c = 0; c < out.k; ++c) {
    out.objective_share[c] =
        out.objective > 0.0 ? cluster_cost[c] / out.objective : 0.0;
  }
  return out;
}

ClusterAssignment assignment_from_ids(std::vector<std::size_t> ids, std::size_t k,
                                      const EmbeddingMatrix& docs,
                                      const EmbeddingMatrix& queries,
                                      std::span<const std::string> domains) {
  if (ids.size() != docs.rows()) {
    throw ShapeError("assignment_from_ids: " + std::to_string(ids.size()) + " ids for " +
                     std::to_string(docs.rows()) + " pairs");
  }
  if (!domains.empty() && domains.size() != ids.size()) {
    throw ShapeError("assignment_from_ids: domain labels not row-aligned");
  }
  std::vector<std::size_t> all(ids.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto points = make_pair_points(docs, queries, all);

  ClusterAssignment out;
  out.k = k;
  out.assignment = std::move(ids);
  const std::size_t width = points.empty() ? 0 : points[0].u.size();
  out.centroids.assign(k, Centroid{std::vector<double>(width, 0.0), 0});
  out.cluster_domain.assign(k, std::string());
  std::vector<bool> seen(k, false);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t c = out.assignment[i];
    if (c >= k) throw FormatError("assignment_from_ids: cluster id out of range");
    Centroid& cen = out.centroids[c];
    ++cen.member_count;
    for (std::size_t t = 0; t < width; ++t) cen.c[t] += points[i].u[t] + points[i].v[t];
    if (!domains.empty()) {
      if (!seen[c]) {
        out.cluster_domain[c] = domains[i];
        seen[c] = true;
      } else if (out.cluster_domain[c] != domains[i]) {
        out.cluster_domain[c].clear();
      }
    }
  }
  for (auto& cen : out.centroids) {
    if (cen.member_count == 0) continue;
    const double inv = 1.0 / (2.0 * static_cast<double>(cen.member_count));
    for (double& x : cen.c) x *= inv;
  }
  std::vector<double> cost(k, 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t c = out.assignment[i];
    const double v = point_to_centroid_cost(points[i], out.centroids[c]);
    cost[c] += v;
    out.objective += v;
  }
  out.objective_share.resize(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    out.objective_share[c] = out.objective > 0.0 ? cost[c] / out.objective : 0.0;
  }
  return out;
}

double clustering_objective(std::span<const PairPoint> points,
                            std::span<const std::size_t> assignment,
                            std::span<const Centroid> centroids) {
  if (assignment.size() != points.size()) {
    throw ShapeError("clustering_objective: " +
                     std::to_string(points.size() - std::min(points.size(), assignment.size())) +
                     " points are unassigned");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (assignment[i] >= centroids.size()) {
      throw ShapeError("clustering_objective: point " + std::to_string(i) +
                       " assigned to missing cluster " +
                       std::to_string(assignment[i]));
    }
    total += point_to_centroid_cost(points[i], centroids[assignment[i]]);
  }
  return total;
}

double batch_adversarial_score(std::span<const std::size_t> batch,
                               const EmbeddingMatrix& docs,
                               const EmbeddingMatrix& queries) {
  check_dims(docs.dim(), queries.dim(), "batch_adversarial_score");
  auto dotp = [](std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) s += static_cast<double>(a[t]) * b[t];
    return s;
  };
  double total = 0.0;
  for (std::size_t a = 0; a < batch.size(); ++a) {
    for (std::size_t b = 0; b < batch.size(); ++b) {
      if (a == b) continue;
      const std::size_t i = batch[a];
      const std::size_t j = batch[b];
      total += dotp(docs.row(i), queries.row(j)) + dotp(docs.row(j), queries.row(i));
    }
  }
  return total;
}

std::string cluster_file_jsonl(const ClusterAssignment& a) {
  std::string out;
  const auto members = a.members();
  for (std::size_t c = 0; c < a.k; ++c) {
    nlohmann::json line = {{"cluster", c},
                           {"pairs", members[c]},
                           {"objective_share", a.objective_share[c]}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<std::size_t> parse_cluster_file(std::string_view contents,
                                            std::size_t num_pairs,
                                            std::size_t* num_clusters) {
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> assignment(num_pairs, kUnset);
  std::size_t clusters = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
      const auto id = obj.at("cluster").get<std::size_t>();
      clusters = std::max(clusters, id + 1);
      for (const auto& p : obj.at("pairs")) {
        const auto idx = p.get<std::size_t>();
        if (idx >= num_pairs) {
          throw FormatError("cluster file line " + std::to_string(line_no) +
                            ": pair index " + std::to_string(idx) +
                            " out of range");
        }
        if (assignment[idx] != kUnset) {
          throw FormatError("cluster file: pair " + std::to_string(idx) +
                            " listed twice");
        }
        assignment[idx] = id;
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("cluster file line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  for (std::size_t i = 0; i < num_pairs; ++i) {
    if (assignment[i] == kUnset) {
      throw FormatError("cluster file: pair " + std::to_string(i) +
                        " is unassigned");
    }
  }
  if (num_clusters != nullptr) *num_clusters = clusters;
  return assignment;
}

}  // namespace cde::cluster
