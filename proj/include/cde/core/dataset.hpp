#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace cde::data {

/// One query or document. `text` is what encoders see (prefix applied);
/// `body` is the raw text without prefix, used for collision checks.
struct TextRecord {
  std::string id;
  std::string text;
  std::string body;
  std::string domain;
  std::optional<std::string> prefix;

  bool operator==(const TextRecord&) const = default;
};

struct Pair {
  TextRecord query;
  TextRecord document;

  bool operator==(const Pair&) const = default;
};

/// Aligned (query, document, domain) triples. Index i addresses pair i
/// stably for the lifetime of the dataset.
class PairDataset {
 public:
  PairDataset() = default;
  explicit PairDataset(std::vector<Pair> pairs);

  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const Pair& operator[](std::size_t i) const { return pairs_[i]; }
  const std::vector<Pair>& pairs() const noexcept { return pairs_; }
  const std::set<std::string>& domains() const noexcept { return domains_; }

  /// Pair indices per domain label, each list in ascending order.
  std::map<std::string, std::vector<std::size_t>> indices_by_domain() const;

  /// Subset in the given index order; records are copied unchanged.
  PairDataset subset(const std::vector<std::size_t>& indices) const;

  /// Stable 64-bit fingerprint of the serialized dataset.
  std::uint64_t fingerprint() const;

  bool operator==(const PairDataset& other) const {
    return pairs_ == other.pairs_;
  }

 private:
  std::vector<Pair> pairs_;
  std::set<std::string> domains_;
};

/// Per-domain task prefixes, e.g. {"search_query", "search_document"}.
struct PrefixPair {
  std::string query;
  std::string document;
};

struct PrefixConfig {
  std::map<std::string, PrefixPair> by_domain;
  /// Applied to domains missing from `by_domain` when set.
  std::optional<PrefixPair> fallback;
  std::string separator = ": ";

  const PrefixPair* lookup(const std::string& domain) const;
};

/// Reads a JSONL pairs file. Each line needs "query", "document" and
/// "domain" string fields; "id" is optional. File order is preserved and
/// duplicate pairs are kept.
PairDataset load_pairs_jsonl(const std::filesystem::path& path,
                             const PrefixConfig& prefixes = {});

/// Same as load_pairs_jsonl over an in-memory buffer. `source` names the
/// buffer in error messages.
PairDataset parse_pairs_jsonl(std::string_view contents,
                              const PrefixConfig& prefixes = {},
                              std::string_view source = "<memory>");

/// Writes raw (unprefixed) bodies back out as JSONL.
std::string to_jsonl(const PairDataset& dataset);
void write_pairs_jsonl(const PairDataset& dataset,
                       const std::filesystem::path& path);

// Lowercases ASCII and splits on Unicode whitespace and ASCII punctuation.
// Non-ASCII letters pass through unchanged.
std::vector<std::string> tokenize(std::string_view text);

/// Term -> dense id, with document frequencies over N texts.
class Vocab {
 public:
  Vocab() = default;

  std::size_t size() const noexcept { return terms_.size(); }
  std::size_t num_docs() const noexcept { return num_docs_; }

  std::optional<std::uint32_t> id(std::string_view term) const;
  /// 0 for unseen terms.
  std::uint32_t df(std::string_view term) const;
  std::uint32_t df_at(std::uint32_t id) const { return df_[id]; }
  const std::string& term(std::uint32_t id) const { return terms_[id]; }
  const std::vector<std::string>& terms() const noexcept { return terms_; }

  friend Vocab build_vocab(const std::vector<std::string>& texts);

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> terms_;
  std::vector<std::uint32_t> df_;
  std::size_t num_docs_ = 0;
};

/// df(t) counts texts containing t at least once; ids follow first
/// occurrence order.
Vocab build_vocab(const std::vector<std::string>& texts);

/// All query and document texts of a dataset, queries first.
std::vector<std::string> all_texts(const PairDataset& dataset);
std::vector<std::string> document_texts(const PairDataset& dataset);

struct SyntheticConfig {
  std::uint64_t seed = 0;
  std::size_t n_domains = 4;
  std::size_t pairs_per_domain = 64;
  std::size_t vocab_per_domain = 200;
  double noise = 0.1;
  /// Size of the vocabulary shared by all domains.
  std::size_t shared_vocab = 200;
  /// Probability a document token comes from the shared vocabulary.
  double shared_fraction = 0.5;
  std::size_t doc_length = 24;
  /// Fraction of document tokens a query keeps.
  double query_ratio = 0.5;
  /// Zipf exponent for token popularity inside a domain.
  double zipf_exponent = 1.0;
  /// Per-domain filler terms, taken from the head of the domain's shared
  /// ranking; each document token is filler with boilerplate_fraction
  /// probability. A filler term of one domain is an ordinary content term
  /// everywhere else.
  std::size_t boilerplate_terms = 0;
  double boilerplate_fraction = 0.0;
};

/// Per-domain holdout: a seeded `test_fraction` of each domain's pairs
/// (at least one when the domain has two or more) goes to the second set.
/// Both sets keep the original relative order.
std::pair<PairDataset, PairDataset> split_holdout(const PairDataset& dataset,
                                                  double test_fraction,
                                                  std::uint64_t seed);

/// Deterministic toy corpus. Every domain owns a disjoint core vocabulary
/// and draws from a shared vocabulary with its own popularity ranking, so a
/// shared term that is boilerplate in one domain can be rare in another.
/// Queries are noisy subsamples of their documents.
PairDataset generate_synthetic_corpus(const SyntheticConfig& cfg);

inline PairDataset generate_synthetic_corpus(std::uint64_t seed,
                                             std::size_t n_domains,
                                             std::size_t pairs_per_domain,
                                             std::size_t vocab_per_domain,
                                             double noise) {
  SyntheticConfig cfg;
  cfg.seed = seed;
  cfg.n_domains = n_domains;
  cfg.pairs_per_domain = pairs_per_domain;
  cfg.vocab_per_domain = vocab_per_domain;
  cfg.shared_vocab = vocab_per_domain;
  cfg.noise = noise;
  return generate_synthetic_corpus(cfg);
}

}  // namespace cde::data
