#include "cde/surrogate/embedder.hpp"

#include <bit>
#include <cmath>
#include <unordered_map>

#include "cde/core/hash.hpp"
#include "cde/error.hpp"

namespace cde::surrogate {

void SurrogateConfig::validate() const {
  if (hash_dim < 2 || !std::has_single_bit(hash_dim)) {
    throw ConfigError("surrogate hash_dim must be a power of two >= 2, got " +
                      std::to_string(hash_dim));
  }
}

double idf_from_counts(std::size_t num_docs, std::size_t df) {
  return std::log((1.0 + static_cast<double>(num_docs)) /
                  (1.0 + static_cast<double>(df))) +
         1.0;
}

double idf(const data::Vocab& vocab, std::string_view term) {
  return idf_from_counts(vocab.num_docs(), vocab.df(term));
}

HashSlot hash_slot(std::string_view token, std::size_t hash_dim) {
  const std::uint64_t h = fnv1a64(token);
  return {static_cast<std::size_t>(h % hash_dim),
          (mix64(h) >> 63) != 0 ? -1.0f : 1.0f};
}

std::vector<float> embed_text(std::string_view text, const data::Vocab& vocab,
                              const SurrogateConfig& cfg) {
  cfg.validate();
  std::unordered_map<std::string, std::size_t> tf;
  std::vector<std::string> order;
  for (std::string& tok : data::tokenize(text)) {
    auto [it, inserted] = tf.try_emplace(tok, 0);
    if (inserted) order.push_back(tok);
    ++it->second;
  }
  std::vector<double> acc(cfg.hash_dim, 0.0);
  for (const std::string& tok : order) {
    const double w = cfg.idf_smoothing ? idf(vocab, tok) : 1.0;
    const HashSlot slot = hash_slot(tok, cfg.hash_dim);
    acc[slot.bucket] += slot.sign * static_cast<double>(tf[tok]) * w;
  }
  if (cfg.normalize) {
    double sq = 0.0;
    for (double x : acc) sq += x * x;
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (double& x : acc) x *= inv;
    }
  }
  return {acc.begin(), acc.end()};
}

EmbeddingMatrix embed_texts(const std::vector<std::string>& texts,
                            const std::vector<std::string>& ids,
                            const data::Vocab& vocab,
                            const SurrogateConfig& cfg) {
  if (texts.size() != ids.size()) {
    throw ShapeError("embed_texts: " + std::to_string(texts.size()) +
                     " texts but " + std::to_string(ids.size()) + " ids");
  }
  EmbeddingMatrix m(cfg.hash_dim);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    m.append(embed_text(texts[i], vocab, cfg), ids[i]);
  }
  return m;
}

PairEmbeddings embed_pairs(const data::PairDataset& dataset,
                           const data::Vocab& vocab,
                           const SurrogateConfig& cfg) {
  PairEmbeddings out{EmbeddingMatrix(cfg.hash_dim),
                     EmbeddingMatrix(cfg.hash_dim)};
  for (const data::Pair& p : dataset.pairs()) {
    out.documents.append(embed_text(p.document.text, vocab, cfg),
                         p.document.id);
    out.queries.append(embed_text(p.query.text, vocab, cfg), p.query.id);
  }
  return out;
}

double surrogate_score(std::span<const float> q, std::span<const float> d) {
  if (q.size() != d.size()) {
    throw ShapeError("surrogate_score: dims " + std::to_string(q.size()) +
                     " and " + std::to_string(d.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    s += static_cast<double>(q[i]) * d[i];
  }
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace cde::surrogate
