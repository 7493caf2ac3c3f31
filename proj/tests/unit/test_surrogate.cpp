#include <cmath>

#include "doctest.h"
#include "cde/error.hpp"
#include "cde/surrogate/embedder.hpp"

using namespace cde;
using namespace cde::surrogate;

namespace {

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

double norm(const std::vector<float>& a) {
  double s = 0;
  for (float x : a) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("smoothed idf values") {
  const auto v = data::build_vocab({"a b", "b c"});
  CHECK(idf(v, "b") == doctest::Approx(1.0));
  CHECK(idf(v, "a") == doctest::Approx(std::log(1.5) + 1.0));
  CHECK(idf(v, "a") == doctest::Approx(1.4055).epsilon(1e-4));
  CHECK(idf(v, "unseen") == doctest::Approx(std::log(3.0) + 1.0));
  CHECK(idf(v, "unseen") == doctest::Approx(2.0986).epsilon(1e-4));
  CHECK(idf_from_counts(2, 2) == doctest::Approx(1.0));
}

TEST_CASE("embed_text basics") {
  const auto v = data::build_vocab({"a b", "b c", "a a b"});
  SurrogateConfig cfg;
  const auto empty = embed_text("", v, cfg);
  REQUIRE(empty.size() == cfg.hash_dim);
  CHECK(norm(empty) == 0.0);

  CHECK(embed_text("a b", v, cfg) == embed_text("a b", v, cfg));

  const auto x = embed_text("a a b", v, cfg);
  const auto y = embed_text("a b", v, cfg);
  CHECK(norm(x) > 0);
  CHECK(norm(y) > 0);
  if (hash_slot("a", cfg.hash_dim).bucket != hash_slot("b", cfg.hash_dim).bucket) {
    CHECK(cosine(x, y) < 1.0 - 1e-6);
  }
  CHECK(norm(x) == doctest::Approx(1.0));
}

TEST_CASE("hash slots are stable and in range") {
  for (const char* t : {"a", "bb", "query", "\xc3\xa9t\xc3\xa9"}) {
    const auto s = hash_slot(t, 64);
    CHECK(s.bucket < 64);
    CHECK(std::abs(s.sign) == 1.0f);
    CHECK(hash_slot(t, 64).bucket == s.bucket);
  }
}

TEST_CASE("surrogate config validation") {
  SurrogateConfig cfg;
  cfg.hash_dim = 100;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.hash_dim = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("surrogate_score is a dot product") {
  const std::vector<float> e1{1, 0}, e2{0, 1}, a{0.6f, 0.8f}, b{0.8f, 0.6f};
  CHECK(surrogate_score(e1, e1) == doctest::Approx(1.0));
  CHECK(surrogate_score(e1, e2) == 0.0);
  CHECK(surrogate_score(a, b) == doctest::Approx(0.96));
  const std::vector<float> three{1, 2, 3};
  CHECK_THROWS_AS(surrogate_score(e1, three), ShapeError);
}

TEST_CASE("embed_pairs rows align with pairs") {
  const auto ds = data::generate_synthetic_corpus(1, 2, 5, 30, 0.1);
  const auto vocab = data::build_vocab(data::all_texts(ds));
  const auto e = embed_pairs(ds, vocab, {});
  CHECK(e.documents.rows() == ds.size());
  CHECK(e.queries.rows() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::vector<float> row(e.documents.row(i).begin(), e.documents.row(i).end());
    CHECK(norm(row) == doctest::Approx(1.0));
  }
  // A query shares terms with its own document.
  double own = 0, other = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    own += surrogate_score(e.queries.row(i), e.documents.row(i));
    other += surrogate_score(e.queries.row(i), e.documents.row((i + 3) % ds.size()));
  }
  CHECK(own > other);
}
