#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cde/core/dataset.hpp"
#include "cde/core/embedding_matrix.hpp"
#include "cde/core/hash.hpp"
#include "cde/eval/metrics.hpp"
#include "cde/model/biencoder.hpp"
#include "cde/model/cde.hpp"
#include "cde/model/tokens.hpp"
#include "cde/surrogate/embedder.hpp"
#include "cde/train/steps.hpp"

namespace cde::eval {

using train::TokenLists;

/// One domain's retrieval problem: its documents form the corpus and its
/// queries are ranked against all of them.
struct EvalCorpus {
  std::string domain;
  std::vector<std::string> doc_ids;
  std::vector<std::string> doc_texts;
  TokenLists documents;
  /// Documents cut to the first-stage token budget.
  TokenLists context_documents;
  std::vector<std::string> query_ids;
  std::vector<std::string> query_texts;
  TokenLists queries;
  /// Per query, indices of relevant documents.
  std::vector<std::vector<std::size_t>> relevant;
};

/// One corpus per domain, in domain order. Each pair's document is the
/// single relevant document for its query.
std::vector<EvalCorpus> build_eval_corpora(const data::PairDataset& dataset,
                                           const model::TokenEncoder& enc,
                                           const model::ModelConfig& cfg);

/// Documents a context can be sampled from (e.g. one domain's training
/// documents), already cut to the first-stage budget.
struct ContextPool {
  std::string domain;
  std::vector<std::string> ids;
  TokenLists documents;
};

std::vector<ContextPool> build_context_pools(const data::PairDataset& dataset,
                                             const model::TokenEncoder& enc,
                                             const model::ModelConfig& cfg);
ContextPool pool_from_corpus(const EvalCorpus& corpus);

/// Lexical nearest-neighbour lookup used by the top-k strategies.
struct SurrogateRetriever {
  EmbeddingMatrix documents;
  EmbeddingMatrix queries;

  /// Indices of the k corpus documents closest to document i (i included),
  /// by score then index.
  std::vector<std::size_t> topk_for_document(std::size_t i, std::size_t k) const;
  std::vector<std::size_t> topk_for_query(std::size_t i, std::size_t k) const;
};

/// Vocabulary statistics come from the corpus documents.
SurrogateRetriever make_surrogate_retriever(const EvalCorpus& corpus,
                                            const surrogate::SurrogateConfig& cfg = {});

enum class ContextSource { null, random_in_domain, topk, full_sample };

ContextSource parse_context_source(std::string_view name);
std::string_view context_source_name(ContextSource s);

/// How contexts are chosen at test time. `k` = 0 means the model capacity.
/// full_sample draws from the corpus being indexed; random_in_domain draws
/// from the supplied pool (the corpus when none is given). Draws depend
/// only on (seed, source pool), so both sides see the same sample when
/// they draw from the same pool.
struct InferenceStrategy {
  ContextSource doc_context = ContextSource::null;
  ContextSource query_context = ContextSource::null;
  std::size_t k = 0;
  std::uint64_t seed = 0;

  /// "<doc>-<query>", e.g. "null-null".
  std::string name() const;
  static InferenceStrategy parse(std::string_view name);
};

struct EvalOptions {
  const ContextPool* pool = nullptr;
  const SurrogateRetriever* retriever = nullptr;
  /// Ablation switch passed to the second stage.
  bool attention_identity = false;
};

/// Ranks every document for every query by dot product; ties go to the
/// lower document index.
template <class T>
EvalReport score_rankings(const EvalCorpus& corpus, const ag::Tensor<T>& q, const ag::Tensor<T>& d,
                          std::string strategy);

namespace detail {

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::uint64_t seed);

template <class T>
ag::Tensor<T> pick_rows(const ag::Tensor<T>& rows, const std::vector<std::size_t>& idx) {
  ag::Tensor<T> out(idx.size(), rows.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy(rows.row(idx[r]).begin(), rows.row(idx[r]).end(), out.row(r).begin());
  }
  return out;
}

/// Lazily computed first-stage rows for the corpus and the pool.
template <class T>
struct FirstStageCache {
  const model::CdeParams<T>& params;
  const EvalCorpus& corpus;
  const ContextPool* pool;
  std::optional<ag::Tensor<T>> corpus_rows;
  std::optional<ag::Tensor<T>> pool_rows;

  const ag::Tensor<T>& for_corpus() {
    if (!corpus_rows) {
      corpus_rows = model::m1_rows(params, std::span<const std::vector<std::uint32_t>>(
                                               corpus.context_documents));
    }
    return *corpus_rows;
  }
  const ag::Tensor<T>& for_pool() {
    if (pool == nullptr) return for_corpus();
    if (!pool_rows) {
      pool_rows = model::m1_rows(params, std::span<const std::vector<std::uint32_t>>(pool->documents));
    }
    return *pool_rows;
  }
};

/// Embeds `texts` under one shared context, or per-text top-k contexts.
template <class T>
ag::Tensor<T> embed_side(const model::CdeParams<T>& p, ContextSource source,
                         const TokenLists& texts, std::size_t k, std::uint64_t seed,
                         FirstStageCache<T>& cache, const SurrogateRetriever* retriever,
                         bool is_query, bool identity) {
  auto all = std::span<const std::vector<std::uint32_t>>(texts);
  switch (source) {
    case ContextSource::null:
      return model::cde_embed_batch(p, model::null_context(p), all, identity);
    case ContextSource::full_sample:
    case ContextSource::random_in_domain: {
      const auto& rows = source == ContextSource::full_sample ? cache.for_corpus() : cache.for_pool();
      const auto idx = sample_indices(rows.rows(), k, seed);
      return model::cde_embed_batch(p, model::context_from_rows(p, pick_rows(rows, idx), {}), all,
                                    identity);
    }
    case ContextSource::topk: {
      if (retriever == nullptr) throw ConfigError("topk context needs a retriever");
      const auto& rows = cache.for_corpus();
      ag::Tensor<T> out(texts.size(), p.config.dim);
      for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto idx = is_query ? retriever->topk_for_query(i, k) : retriever->topk_for_document(i, k);
        auto e = model::cde_embed_batch(p, model::context_from_rows(p, pick_rows(rows, idx), {}),
                                        all.subspan(i, 1), identity);
        std::copy(e.data(), e.data() + e.size(), out.row(i).begin());
      }
      return out;
    }
  }
  throw ConfigError("unknown context source");
}

}  // namespace detail

/// Biencoders have no context path: every strategy reports as null-null.
template <class T>
EvalReport evaluate_retrieval(const model::BiencoderParams<T>& params, const EvalCorpus& corpus,
                              const InferenceStrategy& = {}, const EvalOptions& = {}) {
  ag::Tape<T> tape(false);
  auto v = model::bind(tape, params);
  auto q = model::biencoder_forward(v, std::span<const std::vector<std::uint32_t>>(corpus.queries));
  auto d = model::biencoder_forward(v, std::span<const std::vector<std::uint32_t>>(corpus.documents));
  return score_rankings(corpus, q.value(), d.value(), "null-null");
}

template <class T>
EvalReport evaluate_retrieval(const model::CdeParams<T>& params, const EvalCorpus& corpus,
                              const InferenceStrategy& strategy, const EvalOptions& opts = {}) {
  if (strategy.query_context == ContextSource::full_sample) {
    throw ConfigError("query context cannot be full_sample");
  }
  const std::size_t k = strategy.k == 0 ? params.config.context_capacity : strategy.k;
  if (k > params.config.context_capacity) {
    throw ConfigError("context size " + std::to_string(k) + " exceeds capacity " +
                      std::to_string(params.config.context_capacity));
  }
  if ((strategy.doc_context == ContextSource::topk || strategy.query_context == ContextSource::topk) &&
      opts.retriever == nullptr) {
    throw ConfigError("topk strategy without a retriever");
  }
  detail::FirstStageCache<T> cache{params, corpus, opts.pool, {}, {}};
  auto d = detail::embed_side(params, strategy.doc_context, corpus.documents, k, strategy.seed,
                              cache, opts.retriever, false, opts.attention_identity);
  auto q = detail::embed_side(params, strategy.query_context, corpus.queries, k, strategy.seed,
                              cache, opts.retriever, true, opts.attention_identity);
  return score_rankings(corpus, q, d, strategy.name());
}

/// Evaluates each corpus and merges per-query scores.
template <class Params>
EvalReport evaluate_all(const Params& params, const std::vector<EvalCorpus>& corpora,
                        const InferenceStrategy& strategy,
                        const std::vector<ContextPool>* pools = nullptr) {
  std::vector<EvalReport> parts;
  for (std::size_t i = 0; i < corpora.size(); ++i) {
    EvalOptions opts;
    if (pools != nullptr) opts.pool = &pools->at(i);
    parts.push_back(evaluate_retrieval(params, corpora[i], strategy, opts));
  }
  return EvalReport::merge(strategy.name(), parts);
}

struct SweepPoint {
  std::size_t context_size = 0;
  double mean_ndcg10 = 0.0;
};

/// One evaluation per context size with `base`'s sources; size 0 is the
/// null-null evaluation.
template <class T>
std::vector<SweepPoint> context_size_sweep(const model::CdeParams<T>& params,
                                           const std::vector<EvalCorpus>& corpora,
                                           std::span<const std::size_t> sizes,
                                           InferenceStrategy base,
                                           const std::vector<ContextPool>* pools = nullptr) {
  std::vector<SweepPoint> out;
  for (std::size_t size : sizes) {
    if (size > params.config.context_capacity) {
      throw ConfigError("sweep size " + std::to_string(size) + " exceeds capacity");
    }
    InferenceStrategy s = base;
    if (size == 0) {
      s.doc_context = ContextSource::null;
      s.query_context = ContextSource::null;
    }
    s.k = size;
    out.push_back({size, evaluate_all(params, corpora, s, pools).mean_ndcg10});
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points);
std::vector<SweepPoint> parse_sweep_csv(std::string_view text);

/// cells[i][j]: corpus j evaluated with random context from pool i.
struct DomainMatrix {
  std::vector<std::string> context_domains;
  std::vector<std::string> eval_domains;
  std::vector<std::vector<double>> cells;
  /// Cells within `highlight_margin` of their column maximum.
  std::vector<std::vector<std::uint8_t>> highlight;

  std::string to_csv() const;
  static DomainMatrix from_csv(std::string_view text);
};

/// Marks cells within `margin` (one NDCG point = 0.01) of each column max.
void apply_highlight(DomainMatrix& m, double margin = 0.01);

template <class T>
DomainMatrix cross_domain_context_matrix(const model::CdeParams<T>& params,
                                         const std::vector<EvalCorpus>& corpora,
                                         const std::vector<ContextPool>& pools, std::size_t k,
                                         std::uint64_t seed, double margin = 0.01) {
  if (pools.empty() || corpora.empty()) throw ConfigError("domain matrix needs domains");
  DomainMatrix m;
  for (const auto& p : pools) m.context_domains.push_back(p.domain);
  for (const auto& c : corpora) m.eval_domains.push_back(c.domain);
  InferenceStrategy s{ContextSource::random_in_domain, ContextSource::random_in_domain, k, seed};
  m.cells.assign(pools.size(), std::vector<double>(corpora.size()));
  for (std::size_t i = 0; i < pools.size(); ++i) {
    for (std::size_t j = 0; j < corpora.size(); ++j) {
      EvalOptions opts;
      opts.pool = &pools[i];
      m.cells[i][j] = evaluate_retrieval(params, corpora[j], s, opts).mean_ndcg10;
    }
  }
  apply_highlight(m, margin);
  return m;
}

// ---------------------------------------------------------------------------

template <class T>
EvalReport score_rankings(const EvalCorpus& corpus, const ag::Tensor<T>& q, const ag::Tensor<T>& d,
                          std::string strategy) {
  if (q.rows() != corpus.queries.size() || d.rows() != corpus.documents.size()) {
    throw ShapeError("score_rankings: embedding rows do not match corpus");
  }
  EvalReport report;
  report.strategy = std::move(strategy);
  const std::size_t n = d.rows();
  std::vector<double> scores(n);
  std::vector<std::size_t> order(n);
  std::vector<int> grades;
  double total = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i) {
    const auto qi = q.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto dj = d.row(j);
      double s = 0.0;
      for (std::size_t c = 0; c < qi.size(); ++c) s += static_cast<double>(qi[c]) * dj[c];
      scores[j] = s;
    }
    std::iota(order.begin(), order.end(), 0);
    const std::size_t top = std::min<std::size_t>(10, n);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        if (scores[a] != scores[b]) return scores[a] > scores[b];
                        return a < b;
                      });
    const auto& rel = corpus.relevant[i];
    grades.clear();
    for (std::size_t r = 0; r < top; ++r) {
      grades.push_back(std::find(rel.begin(), rel.end(), order[r]) != rel.end() ? 1 : 0);
    }
    auto v = ndcg_from_grades(grades, std::vector<int>(rel.size(), 1), 10);
    if (!v) {
      ++report.skipped;
      continue;
    }
    report.per_query.push_back({corpus.query_ids[i], *v});
    total += *v;
  }
  report.mean_ndcg10 =
      report.per_query.empty() ? 0.0 : total / static_cast<double>(report.per_query.size());
  return report;
}

}  // namespace cde::eval
