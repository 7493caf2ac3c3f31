#include <cmath>
#include <random>

#include "doctest.h"
#include "cde/cluster/kmeans.hpp"
#include "cde/core/embedding_matrix.hpp"
#include "cde/error.hpp"

using namespace cde;
using namespace cde::cluster;

namespace {

PairPoint point(std::vector<double> u, std::vector<double> v) { return {std::move(u), std::move(v), 0}; }

// Two blobs of pairs far apart, `n` per blob.
std::pair<EmbeddingMatrix, EmbeddingMatrix> blobs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.f, 0.05f);
  EmbeddingMatrix docs(2), queries(2);
  for (std::size_t b = 0; b < 2; ++b) {
    const float cx = b == 0 ? -5.f : 5.f;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = std::to_string(b * n + i);
      docs.append(std::vector<float>{cx + noise(rng), noise(rng)}, id);
      queries.append(std::vector<float>{cx + noise(rng), 1.f + noise(rng)}, id);
    }
  }
  return {docs, queries};
}

}  // namespace

TEST_CASE("pair_metric examples") {
  const std::vector<float> e1{1, 0}, e2{0, 1};
  CHECK(pair_metric({e1, e2}, {e2, e1}) == doctest::Approx(0.0));
  CHECK(pair_metric({e1, e1}, {e2, e2}) == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(pair_metric({e1, e1}, {e1, e1}) == 0.0);
  const std::vector<float> three{1, 2, 3};
  CHECK_THROWS_AS(pair_metric({e1, three}, {e1, e1}), ShapeError);
}

TEST_CASE("pair_metric is symmetric but not a metric") {
  const std::vector<float> e1{1, 0}, e2{0, 1}, x{0.3f, -0.2f};
  CHECK(pair_metric({e1, x}, {e2, e1}) == pair_metric({e2, e1}, {e1, x}));
  // a = (e1, e2), b = (e2, e1): m(a, b) = m(b, a) = 0 yet m(a, a) > 0.
  const PairVectors a{e1, e2}, b{e2, e1};
  CHECK(pair_metric(a, b) + pair_metric(b, a) < pair_metric(a, a));
}

TEST_CASE("point_to_centroid_cost examples") {
  const auto p = point({1, 0, 0, 0}, {0, 0, 1, 0});
  CHECK(point_to_centroid_cost(p, {{0.5, 0, 0.5, 0}, 0}) == doctest::Approx(1.0));
  const auto q = point({1, 2}, {1, 2});
  CHECK(point_to_centroid_cost(q, {{1, 2}, 0}) == 0.0);
  // The pair midpoint beats nearby perturbations.
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  const auto r = point({0.3, -1, 2, 0.5}, {2, 0.5, 0.3, -1});
  std::vector<double> mid(4);
  for (int t = 0; t < 4; ++t) mid[t] = 0.5 * (r.u[t] + r.v[t]);
  const double best = point_to_centroid_cost(r, {mid, 0});
  for (int trial = 0; trial < 100; ++trial) {
    auto c = mid;
    for (auto& x : c) x += 0.1 * n(rng);
    CHECK(point_to_centroid_cost(r, {c, 0}) >= best);
  }
}

TEST_CASE("make_pair_point concatenations") {
  const std::vector<float> d{1, 2}, q{3, 4};
  const auto p = make_pair_point({d, q}, 7);
  CHECK(p.u == std::vector<double>{1, 2, 3, 4});
  CHECK(p.v == std::vector<double>{3, 4, 1, 2});
  CHECK(p.pair_index == 7);
}

TEST_CASE("kmeans_init") {
  auto [docs, queries] = blobs(4, 1);
  std::vector<std::size_t> idx(docs.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto points = make_pair_points(docs, queries, idx);

  const auto one = kmeans_init(points, 1, 9);
  REQUIRE(one.centroids.size() == 1);
  bool sampled = false;
  for (const auto& p : points) sampled |= one.centroids[0].c == p.u || one.centroids[0].c == p.v;
  CHECK(sampled);

  const auto a = kmeans_init(points, 3, 42), b = kmeans_init(points, 3, 42);
  for (std::size_t c = 0; c < 3; ++c) CHECK(a.centroids[c].c == b.centroids[c].c);

  CHECK_THROWS_AS(kmeans_init(points, 2 * points.size() + 1, 0), ConfigError);

  // Two blobs: one seed lands in each nearly always.
  std::size_t split = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto init = kmeans_init(points, 2, s);
    split += (init.centroids[0].c[0] < 0) != (init.centroids[1].c[0] < 0);
  }
  CHECK(split >= 99);
}

TEST_CASE("kmeans_init flags duplicates") {
  std::vector<PairPoint> same(3, point({1, 1}, {1, 1}));
  const auto init = kmeans_init(same, 2, 0);
  CHECK(init.duplicates);
  CHECK(init.centroids.size() == 2);
}

TEST_CASE("cluster_pairs k=1 closed form") {
  auto [docs, queries] = blobs(3, 2);
  ClusterConfig cfg;
  cfg.k = 1;
  cfg.per_domain = false;
  const auto a = cluster_pairs(docs, queries, cfg);
  REQUIRE(a.k == 1);
  std::vector<double> mean(4, 0.0);
  double total = 0.0;
  std::vector<std::size_t> idx(docs.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const auto points = make_pair_points(docs, queries, idx);
  for (const auto& p : points) {
    for (int t = 0; t < 4; ++t) mean[t] += (p.u[t] + p.v[t]) / (2.0 * points.size());
  }
  for (const auto& p : points) {
    for (int t = 0; t < 4; ++t) {
      total += (p.u[t] - mean[t]) * (p.u[t] - mean[t]) + (p.v[t] - mean[t]) * (p.v[t] - mean[t]);
    }
  }
  for (int t = 0; t < 4; ++t) CHECK(a.centroids[0].c[t] == doctest::Approx(mean[t]));
  CHECK(a.objective == doctest::Approx(total));
}

TEST_CASE("cluster_pairs separates two groups like the exhaustive oracle") {
  auto [docs, queries] = blobs(3, 5);
  ClusterConfig cfg;
  cfg.k = 2;
  cfg.per_domain = false;
  const auto a = cluster_pairs(docs, queries, cfg);
  for (std::size_t i = 1; i < 3; ++i) CHECK(a.assignment[i] == a.assignment[0]);
  for (std::size_t i = 4; i < 6; ++i) CHECK(a.assignment[i] == a.assignment[3]);
  CHECK(a.assignment[0] != a.assignment[3]);

  std::vector<std::size_t> idx(6);
  for (std::size_t i = 0; i < 6; ++i) idx[i] = i;
  const auto points = make_pair_points(docs, queries, idx);
  double best = 1e300;
  for (unsigned bits = 1; bits + 1 < 64; ++bits) {
    std::vector<std::size_t> ids(6);
    for (std::size_t i = 0; i < 6; ++i) ids[i] = (bits >> i) & 1;
    best = std::min(best, assignment_from_ids(ids, 2, docs, queries).objective);
  }
  CHECK(a.objective == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("restarts keep the best run and traces never increase") {
  std::mt19937_64 rng(8);
  std::normal_distribution<float> n;
  EmbeddingMatrix docs(3), queries(3);
  for (int i = 0; i < 40; ++i) {
    docs.append(std::vector<float>{n(rng), n(rng), n(rng)}, std::to_string(i));
    queries.append(std::vector<float>{n(rng), n(rng), n(rng)}, std::to_string(i));
  }
  ClusterConfig cfg;
  cfg.k = 4;
  cfg.restarts = 3;
  cfg.tol = 0;
  cfg.per_domain = false;
  const auto a = cluster_pairs(docs, queries, cfg);
  REQUIRE(a.traces.size() == 3);
  for (const auto& t : a.traces) {
    CHECK(a.objective <= t.back() + 1e-12);
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] <= t[i - 1] * (1 + 1e-12));
  }

  std::vector<std::size_t> idx(40);
  for (std::size_t i = 0; i < 40; ++i) idx[i] = i;
  const auto points = make_pair_points(docs, queries, idx);
  CHECK(clustering_objective(points, a.assignment, a.centroids) ==
        doctest::Approx(a.objective).epsilon(1e-6));
  double share = 0;
  for (double s : a.objective_share) share += s;
  CHECK(share == doctest::Approx(1.0));
}

TEST_CASE("per-domain clustering never mixes domains") {
  auto [docs, queries] = blobs(6, 3);
  std::vector<std::string> domains(12);
  for (std::size_t i = 0; i < 12; ++i) domains[i] = i % 2 ? "odd" : "even";
  ClusterConfig cfg;
  cfg.k = 2;
  const auto a = cluster_pairs(docs, queries, cfg, domains);
  CHECK(a.k == 4);
  for (std::size_t i = 0; i < 12; ++i) CHECK(a.cluster_domain[a.assignment[i]] == domains[i]);
}

TEST_CASE("cluster_pairs errors") {
  EmbeddingMatrix empty(2);
  CHECK_THROWS_AS(cluster_pairs(empty, empty, {}), ConfigError);
  auto [docs, queries] = blobs(1, 0);
  ClusterConfig cfg;
  cfg.k = 3;
  cfg.per_domain = false;
  CHECK_THROWS_AS(cluster_pairs(docs, queries, cfg), ConfigError);
}

TEST_CASE("clustering_objective examples") {
  std::vector<PairPoint> same(3, point({1, 1}, {1, 1}));
  std::vector<std::size_t> zeros(3, 0);
  std::vector<Centroid> c{{{1, 1}, 3}};
  CHECK(clustering_objective(same, zeros, c) == 0.0);

  const auto p = point({1, 0, 2, 3}, {2, 3, 1, 0});
  std::vector<Centroid> mid{{{1.5, 1.5, 1.5, 1.5}, 1}};
  double uv = 0;
  for (int t = 0; t < 4; ++t) uv += (p.u[t] - p.v[t]) * (p.u[t] - p.v[t]);
  std::vector<std::size_t> zero{0};
  CHECK(clustering_objective(std::span(&p, 1), zero, mid) == doctest::Approx(uv / 2));
}

TEST_CASE("batch_adversarial_score") {
  EmbeddingMatrix docs(2), queries(2);
  for (int i = 0; i < 2; ++i) {
    docs.append(std::vector<float>{1, 0}, std::to_string(i));
    queries.append(std::vector<float>{1, 0}, std::to_string(i));
  }
  const std::vector<std::size_t> one{0}, both{0, 1};
  CHECK(batch_adversarial_score(one, docs, queries) == 0.0);
  // Ordered pairs (0,1) and (1,0), each contributing 1 + 1.
  CHECK(batch_adversarial_score(both, docs, queries) == doctest::Approx(4.0));

  EmbeddingMatrix d2(4), q2(4);
  d2.append(std::vector<float>{1, 0, 0, 0}, "a");
  q2.append(std::vector<float>{0, 1, 0, 0}, "a");
  d2.append(std::vector<float>{0, 0, 1, 0}, "b");
  q2.append(std::vector<float>{0, 0, 0, 1}, "b");
  CHECK(batch_adversarial_score(both, d2, q2) == 0.0);
}

TEST_CASE("cluster file round trip") {
  auto [docs, queries] = blobs(3, 4);
  ClusterConfig cfg;
  cfg.k = 2;
  cfg.per_domain = false;
  const auto a = cluster_pairs(docs, queries, cfg);
  std::size_t k = 0;
  const auto ids = parse_cluster_file(cluster_file_jsonl(a), docs.rows(), &k);
  CHECK(k == 2);
  CHECK(ids == a.assignment);
  const auto rebuilt = assignment_from_ids(ids, k, docs, queries);
  CHECK(rebuilt.objective == doctest::Approx(a.objective));
  CHECK_THROWS_AS(parse_cluster_file(cluster_file_jsonl(a), docs.rows() + 1), FormatError);
}
