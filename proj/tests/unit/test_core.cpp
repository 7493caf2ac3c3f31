#include <filesystem>
#include <set>

#include "doctest.h"
#include "cde/core/dataset.hpp"
#include "cde/core/embedding_matrix.hpp"
#include "cde/error.hpp"

using namespace cde;
using namespace cde::data;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "cde_unit";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("pairs jsonl without prefixes keeps texts as-is") {
  const auto ds = parse_pairs_jsonl(R"({"query":"q","document":"d","domain":"x"})");
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].query.text == "q");
  CHECK(ds[0].document.text == "d");
  CHECK(ds[0].query.domain == "x");
}

TEST_CASE("pairs jsonl applies task prefixes") {
  PrefixConfig pc;
  pc.by_domain["x"] = {"search_query", "search_document"};
  const auto ds = parse_pairs_jsonl(R"({"query":"q","document":"d","domain":"x"})", pc);
  CHECK(ds[0].query.text == "search_query: q");
  CHECK(ds[0].document.text == "search_document: d");
  CHECK(ds[0].query.body == "q");
}

TEST_CASE("duplicate pair lines are preserved") {
  const std::string line = R"({"query":"q","document":"d","domain":"x"})";
  const auto ds = parse_pairs_jsonl(line + "\n" + line + "\n");
  CHECK(ds.size() == 2);
}

TEST_CASE("malformed pairs lines are format errors") {
  CHECK_THROWS_AS(parse_pairs_jsonl("{not json"), FormatError);
  CHECK_THROWS_AS(parse_pairs_jsonl(R"({"query":"q","domain":"x"})"), FormatError);
  CHECK_THROWS_AS(load_pairs_jsonl(temp_path("does_not_exist.jsonl")), InputError);
}

TEST_CASE("pairs jsonl round trip") {
  const auto ds = generate_synthetic_corpus(3, 2, 5, 20, 0.1);
  const auto path = temp_path("pairs.jsonl");
  write_pairs_jsonl(ds, path);
  const auto back = load_pairs_jsonl(path);
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back[i].query.body == ds[i].query.body);
    CHECK(back[i].document.body == ds[i].document.body);
    CHECK(back[i].query.domain == ds[i].query.domain);
  }
}

TEST_CASE("tokenize lowercases and splits on punctuation") {
  const auto t = tokenize("Hello, World! a-b");
  CHECK(t == std::vector<std::string>{"hello", "world", "a", "b"});
  CHECK(tokenize("").empty());
}

TEST_CASE("build_vocab document frequencies") {
  const auto v = build_vocab({"a b", "b c"});
  CHECK(v.num_docs() == 2);
  CHECK(v.df("a") == 1);
  CHECK(v.df("b") == 2);
  CHECK(v.df("c") == 1);
  CHECK(v.df("zzz") == 0);

  const auto one = build_vocab({"x"});
  CHECK(one.num_docs() == 1);
  CHECK(one.df("x") == 1);

  const auto empty = build_vocab({"", ""});
  CHECK(empty.num_docs() == 2);
  CHECK(empty.size() == 0);
}

TEST_CASE("repeated terms count once per text") {
  const auto v = build_vocab({"a a a", "b"});
  CHECK(v.df("a") == 1);
}

TEST_CASE("synthetic corpus is deterministic and sized") {
  const auto a = generate_synthetic_corpus(7, 4, 64, 200, 0.1);
  const auto b = generate_synthetic_corpus(7, 4, 64, 200, 0.1);
  CHECK(a == b);
  CHECK(to_jsonl(a) == to_jsonl(b));
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.size() == 256);
  CHECK(a.domains().size() == 4);
  const auto c = generate_synthetic_corpus(8, 4, 64, 200, 0.1);
  CHECK(c.fingerprint() != a.fingerprint());
}

TEST_CASE("noise-free queries only use document tokens") {
  SyntheticConfig cfg;
  cfg.seed = 11;
  cfg.noise = 0.0;
  cfg.query_ratio = 1.0;
  const auto ds = generate_synthetic_corpus(cfg);
  for (const auto& p : ds.pairs()) {
    const auto dt = tokenize(p.document.body);
    const std::set<std::string> doc(dt.begin(), dt.end());
    for (const auto& t : tokenize(p.query.body)) CHECK(doc.count(t) == 1);
  }
}

TEST_CASE("split_holdout partitions every domain") {
  const auto ds = generate_synthetic_corpus(1, 3, 20, 50, 0.1);
  auto [train, test] = split_holdout(ds, 0.25, 5);
  CHECK(train.size() + test.size() == ds.size());
  for (const auto& [domain, idx] : test.indices_by_domain()) CHECK(idx.size() == 5);
  auto [train2, test2] = split_holdout(ds, 0.25, 5);
  CHECK(test2 == test);
}

TEST_CASE("subset and indices_by_domain") {
  const auto ds = generate_synthetic_corpus(2, 2, 4, 20, 0.0);
  const auto sub = ds.subset({5, 0});
  REQUIRE(sub.size() == 2);
  CHECK(sub[0] == ds[5]);
  CHECK(sub[1] == ds[0]);
  for (const auto& [domain, idx] : ds.indices_by_domain()) {
    CHECK(idx.size() == 4);
    CHECK(std::is_sorted(idx.begin(), idx.end()));
  }
}

TEST_CASE("embedding cache round trip") {
  EmbeddingMatrix m(3);
  m.append(std::vector<float>{1.f, 2.f, 3.f}, "a");
  m.append(std::vector<float>{-0.5f, 0.f, 1e-7f}, "b\xc3\xa9");
  const auto path = temp_path("m.cde");
  write_embedding_cache(m, path);
  const auto back = read_embedding_cache(path);
  CHECK(back == m);
  CHECK(back.ids()[1] == "b\xc3\xa9");
}

TEST_CASE("empty embedding cache") {
  EmbeddingMatrix m(8);
  const auto back = decode_embedding_cache(encode_embedding_cache(m));
  CHECK(back.rows() == 0);
  CHECK(back.dim() == 8);
}

TEST_CASE("embedding cache corruption is reported") {
  EmbeddingMatrix m(2);
  m.append(std::vector<float>{1.f, 2.f}, "a");
  auto bytes = encode_embedding_cache(m);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_embedding_cache(bad_magic), FormatError);
  CHECK_THROWS_AS(decode_embedding_cache(bytes.substr(0, bytes.size() - 1)), SizeError);
  CHECK_THROWS_AS(decode_embedding_cache(bytes + "x"), SizeError);
  CHECK_THROWS_AS(decode_embedding_cache(""), Error);
}

TEST_CASE("embedding matrix shape checks") {
  EmbeddingMatrix m(2);
  CHECK_THROWS_AS(m.append(std::vector<float>{1.f}, "a"), ShapeError);
  m.append(std::vector<float>{0.6f, 0.8f}, "a");
  m.mark_unit_norm();
  CHECK(m.unit_norm());
  EmbeddingMatrix n(2);
  n.append(std::vector<float>{1.f, 1.f}, "a");
  CHECK_THROWS_AS(n.mark_unit_norm(), NumericError);
}
