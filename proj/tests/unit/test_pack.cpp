#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "cde/error.hpp"
#include "cde/pack/packer.hpp"

using namespace cde;
using namespace cde::pack;

namespace {

std::vector<std::size_t> iota_vec(std::size_t n, std::size_t from = 0) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), from);
  return v;
}

cluster::Centroid at(std::vector<double> c) { return {std::move(c), 1}; }

// Assignment where cluster c holds `sizes[c]` consecutive pairs.
cluster::ClusterAssignment blocks(const std::vector<std::size_t>& sizes) {
  cluster::ClusterAssignment a;
  a.k = sizes.size();
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    a.assignment.insert(a.assignment.end(), sizes[c], c);
    a.centroids.push_back(at({static_cast<double>(c), 0.0}));
    a.cluster_domain.push_back("x");
  }
  return a;
}

void check_partition(const BatchPlan& plan, std::size_t n) {
  std::vector<int> seen(n, 0);
  for (const auto& b : plan.batches) {
    for (std::size_t i : b.pair_indices) ++seen[i];
  }
  for (std::size_t i : plan.dropped) ++seen[i];
  for (int s : seen) CHECK(s == 1);
  CHECK(plan.covered_pairs() + plan.dropped.size() == n);
}

}  // namespace

TEST_CASE("split_oversized chunk sizes") {
  const auto pairs = iota_vec(600);
  const auto chunks = split_oversized(pairs, 256, 1);
  REQUIRE(chunks.size() == 3);
  CHECK(chunks[0].size() == 256);
  CHECK(chunks[1].size() == 256);
  CHECK(chunks[2].size() == 88);
  CHECK(split_oversized(pairs, 256, 1) == chunks);

  const auto exact = split_oversized(iota_vec(256), 256, 4);
  REQUIRE(exact.size() == 1);
  CHECK(std::set<std::size_t>(exact[0].begin(), exact[0].end()).size() == 256);
}

TEST_CASE("merge_undersized fills, drops and respects domains") {
  PackingConfig cfg;
  cfg.batch_size = 256;
  std::vector<cluster::Centroid> cents{at({0}), at({1})};

  std::vector<Fragment> two{{iota_vec(88), 0, "a"}, {iota_vec(168, 88), 1, "a"}};
  auto merged = merge_undersized(two, cents, cfg);
  REQUIRE(merged.batches.size() == 1);
  CHECK(merged.batches[0].pair_indices.size() == 256);
  CHECK(merged.dropped.empty());

  std::vector<Fragment> tiny{{iota_vec(10), 0, "a"}};
  auto dropped = merge_undersized(tiny, cents, cfg);
  CHECK(dropped.batches.empty());
  CHECK(dropped.dropped.size() == 10);

  std::vector<Fragment> cross{{iota_vec(200), 0, "a"}, {iota_vec(200, 200), 1, "b"}};
  auto sep = merge_undersized(cross, cents, cfg);
  for (const auto& b : sep.batches) {
    CHECK(b.domain != "*");
    std::set<bool> sides;
    for (std::size_t i : b.pair_indices) sides.insert(i < 200);
    CHECK(sides.size() == 1);
  }
}

TEST_CASE("short tail policy") {
  PackingConfig cfg;
  cfg.batch_size = 10;
  std::vector<cluster::Centroid> cents{at({0})};
  std::vector<Fragment> f{{iota_vec(6), 0, "a"}};
  CHECK(merge_undersized(f, cents, cfg).batches.size() == 1);
  cfg.keep_short_tail = false;
  const auto strict = merge_undersized(f, cents, cfg);
  CHECK(strict.batches.empty());
  CHECK(strict.dropped.size() == 6);
}

TEST_CASE("greedy tour walks to the nearest centroid") {
  std::vector<cluster::Centroid> one{at({3, 3})};
  CHECK(order_clusters_greedy_tsp(one, 7) == std::vector<std::size_t>{0});

  // Cluster ids 0, 1, 2 sit at x = 5, 0, 1.
  std::vector<cluster::Centroid> line{at({5}), at({0}), at({1})};
  CHECK(order_clusters_greedy_tsp_from(line, 1) == std::vector<std::size_t>{1, 2, 0});
  CHECK(tour_length(line, std::vector<std::size_t>{1, 2, 0}) == doctest::Approx(5.0));
}

TEST_CASE("greedy tour beats random order") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  int wins = 0;
  for (int inst = 0; inst < 100; ++inst) {
    std::vector<cluster::Centroid> cs;
    for (int c = 0; c < 12; ++c) cs.push_back(at({n(rng), n(rng), n(rng)}));
    const auto greedy = order_clusters_greedy_tsp(cs, inst);
    auto random = iota_vec(cs.size());
    std::shuffle(random.begin(), random.end(), rng);
    wins += tour_length(cs, greedy) <= tour_length(cs, random);
  }
  CHECK(wins >= 90);
}

TEST_CASE("pack_batches passes exact clusters through") {
  const auto a = blocks({4, 4, 4, 4});
  const std::vector<std::string> domains(16, "x");
  PackingConfig cfg;
  cfg.batch_size = 4;
  const auto plan = pack_batches(a, domains, cfg);
  REQUIRE(plan.batches.size() == 4);
  for (const auto& b : plan.batches) {
    REQUIRE(b.source_clusters.size() == 1);
    const std::size_t c = *b.source_clusters.begin();
    for (std::size_t i : b.pair_indices) CHECK(a.assignment[i] == c);
  }
  check_partition(plan, 16);
}

TEST_CASE("pack_batches partition and reseeding") {
  const auto a = blocks({37, 5, 12, 23, 3, 40});
  const std::vector<std::string> domains(a.assignment.size(), "x");
  PackingConfig cfg;
  cfg.batch_size = 16;
  cfg.seed = 1;
  const auto p1 = pack_batches(a, domains, cfg);
  check_partition(p1, a.assignment.size());
  cfg.seed = 2;
  const auto p2 = pack_batches(a, domains, cfg);
  check_partition(p2, a.assignment.size());
  CHECK(p1.fingerprint() != p2.fingerprint());
  auto sizes = [](const BatchPlan& p) {
    std::multiset<std::size_t> s;
    for (const auto& b : p.batches) s.insert(b.pair_indices.size());
    return s;
  };
  CHECK(sizes(p1) == sizes(p2));
  cfg.seed = 1;
  CHECK(pack_batches(a, domains, cfg).fingerprint() == p1.fingerprint());
  for (auto strategy : {Strategy::random, Strategy::tsp}) {
    cfg.strategy = strategy;
    check_partition(pack_batches(a, domains, cfg), a.assignment.size());
  }
}

TEST_CASE("random_batches keeps domains apart") {
  std::vector<std::string> domains;
  for (int i = 0; i < 50; ++i) domains.push_back(i % 2 ? "a" : "b");
  PackingConfig cfg;
  cfg.batch_size = 8;
  const auto plan = random_batches(domains, cfg);
  check_partition(plan, 50);
  for (const auto& b : plan.batches) {
    for (std::size_t i : b.pair_indices) CHECK(domains[i] == b.domain);
  }
}

TEST_CASE("plan files round trip") {
  const auto a = blocks({9, 14, 7});
  const std::vector<std::string> domains(a.assignment.size(), "x");
  PackingConfig cfg;
  cfg.batch_size = 8;
  const auto plan = pack_batches(a, domains, cfg);
  const auto back = parse_plan(plan_jsonl(plan), drop_report_json(plan));
  CHECK(back.fingerprint() == plan.fingerprint());
  CHECK(back.dropped == plan.dropped);
  CHECK_THROWS_AS(parse_plan("{bad", "{}"), FormatError);
}

TEST_CASE("packing config validation") {
  PackingConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_strategy("tsp") == Strategy::tsp);
  CHECK(strategy_name(Strategy::random) == "random");
  CHECK_THROWS_AS(parse_strategy("zigzag"), ConfigError);
}
