#pragma once

// Two-stage contextual document encoder.
//
// First stage (M1): each context document -> one unit vector (mean pooled
// token table rows, projected, normalized).
// Second stage (M2): the sequence [context rows ; text tokens + positions]
// passes through residual scaled-dot attention blocks; the text positions
// are mean pooled, projected and normalized. Context rows carry no
// positional encoding and are put in a canonical (value-sorted) order, so
// the output does not depend on the order the context was supplied in.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cde/autograd/ops.hpp"
#include "cde/model/config.hpp"

namespace cde::model {

template <class T>
struct AttentionBlockParams {
  ag::Param<T> query;
  ag::Param<T> key;
  ag::Param<T> value;
};

template <class T>
struct CdeParams {
  ModelConfig config;
  // First stage.
  ag::Param<T> m1_table;
  ag::Param<T> m1_proj;
  // Second stage.
  ag::Param<T> m2_table;
  ag::Param<T> pos_table;
  std::vector<AttentionBlockParams<T>> blocks;
  ag::Param<T> out_proj;
  ag::Param<T> null_token;

  static CdeParams init(const ModelConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    const double w = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
    auto normal = [&](std::size_t r, std::size_t c, double sd) {
      return detail::normal_tensor<T>(r, c, sd, rng);
    };
    CdeParams p;
    p.config = cfg;
    p.m1_table = {"m1.token_table", normal(cfg.vocab_size, cfg.dim, cfg.init_std)};
    p.m1_proj = {"m1.projection", normal(cfg.dim, cfg.dim, w)};
    p.m2_table = {"m2.token_table", normal(cfg.vocab_size, cfg.dim, cfg.init_std)};
    p.pos_table = {"m2.positions", ag::Tensor<T>(cfg.max_len, cfg.dim)};
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
      const std::string prefix = "m2.block" + std::to_string(b) + ".";
      p.blocks.push_back({{prefix + "query", normal(cfg.dim, cfg.dim, w)},
                          {prefix + "key", normal(cfg.dim, cfg.dim, w)},
                          {prefix + "value", normal(cfg.dim, cfg.dim, cfg.init_std)}});
    }
    p.out_proj = {"m2.projection", normal(cfg.dim, cfg.dim, w)};
    p.null_token = {"m2.null_token", ag::Tensor<T>(1, cfg.dim)};
    return p;
  }

  std::vector<ag::Param<T>*> first_stage() { return {&m1_table, &m1_proj}; }

  std::vector<ag::Param<T>*> second_stage() {
    std::vector<ag::Param<T>*> out = {&m2_table, &pos_table};
    for (auto& b : blocks) {
      out.push_back(&b.query);
      out.push_back(&b.key);
      out.push_back(&b.value);
    }
    out.push_back(&out_proj);
    out.push_back(&null_token);
    return out;
  }

  std::vector<ag::Param<T>*> all() {
    auto out = first_stage();
    for (auto* p : second_stage()) out.push_back(p);
    return out;
  }

  template <class U>
  CdeParams<U> cast() const {
    CdeParams<U> out;
    out.config = config;
    out.m1_table = m1_table.template cast<U>();
    out.m1_proj = m1_proj.template cast<U>();
    out.m2_table = m2_table.template cast<U>();
    out.pos_table = pos_table.template cast<U>();
    for (const auto& b : blocks) {
      out.blocks.push_back({b.query.template cast<U>(), b.key.template cast<U>(),
                            b.value.template cast<U>()});
    }
    out.out_proj = out_proj.template cast<U>();
    out.null_token = null_token.template cast<U>();
    return out;
  }
};

template <class T>
struct CdeVars {
  ag::Var<T> m1_table, m1_proj;
  ag::Var<T> m2_table, pos_table, out_proj, null_token;
  std::vector<std::array<ag::Var<T>, 3>> blocks;  // query, key, value
  std::size_t dim = 0;
  std::size_t capacity = 0;
  std::size_t max_len = 0;
};

template <class T>
CdeVars<T> bind(ag::Tape<T>& tape, CdeParams<T>& p) {
  CdeVars<T> v{tape.param(p.m1_table), tape.param(p.m1_proj),
               tape.param(p.m2_table), tape.param(p.pos_table),
               tape.param(p.out_proj), tape.param(p.null_token),
               {}, p.config.dim, p.config.context_capacity, p.config.max_len};
  for (auto& b : p.blocks) {
    v.blocks.push_back({tape.param(b.query), tape.param(b.key), tape.param(b.value)});
  }
  return v;
}

template <class T>
CdeVars<T> bind(ag::Tape<T>& tape, const CdeParams<T>& p) {
  CdeVars<T> v{tape.view(p.m1_table.value), tape.view(p.m1_proj.value),
               tape.view(p.m2_table.value), tape.view(p.pos_table.value),
               tape.view(p.out_proj.value), tape.view(p.null_token.value),
               {}, p.config.dim, p.config.context_capacity, p.config.max_len};
  for (const auto& b : p.blocks) {
    v.blocks.push_back({tape.view(b.query.value), tape.view(b.key.value), tape.view(b.value.value)});
  }
  return v;
}

/// First stage over a list of documents: one unit row per document.
template <class T>
ag::Var<T> m1_forward(const CdeVars<T>& v,
                      std::span<const std::vector<std::uint32_t>> docs) {
  if (docs.empty()) throw ShapeError("m1_forward: no documents");
  std::vector<std::uint32_t> flat;
  std::vector<std::size_t> offsets = {0};
  for (const auto& d : docs) {
    if (d.empty()) throw ShapeError("m1_forward: empty document");
    flat.insert(flat.end(), d.begin(), d.end());
    offsets.push_back(flat.size());
  }
  auto pooled = ag::segment_mean(ag::embedding_lookup(v.m1_table, std::move(flat)),
                                 std::move(offsets));
  return ag::l2_normalize_rows(ag::matmul(pooled, v.m1_proj));
}

/// Builds the J_max x e context matrix: first-stage rows (may be absent),
/// zero padding, then every slot flagged in `null_mask` or beyond the
/// supplied rows replaced by the null token.
template <class T>
ag::Var<T> assemble_context(const CdeVars<T>& v, const ag::Var<T>* m1_rows,
                            std::vector<std::uint8_t> null_mask) {
  auto& tape = v.null_token.tape();
  const std::size_t J = v.capacity;
  const std::size_t have = m1_rows != nullptr ? m1_rows->rows() : 0;
  if (have > J) {
    throw ShapeError("assemble_context: " + std::to_string(have) +
                     " context rows exceed capacity " + std::to_string(J));
  }
  if (null_mask.size() != J) throw ShapeError("assemble_context: mask length != capacity");
  for (std::size_t i = have; i < J; ++i) null_mask[i] = 1;

  ag::Var<T> base;
  if (have == 0) {
    base = tape.constant(ag::Tensor<T>(J, v.dim));
  } else if (have == J) {
    base = *m1_rows;
  } else {
    base = ag::concat_rows<T>({*m1_rows, tape.constant(ag::Tensor<T>(J - have, v.dim))});
  }
  return ag::dropout_rows(base, std::move(null_mask), v.null_token);
}

/// Context rows in canonical order plus the first block's keys/values,
/// which every text in a batch shares.
template <class T>
struct PreparedContext {
  ag::Var<T> rows;
  ag::Var<T> keys;
  ag::Var<T> values;
};

/// Lexicographic row order; ties keep their relative order.
template <class T>
std::vector<std::uint32_t> canonical_row_order(const ag::Tensor<T>& rows) {
  std::vector<std::uint32_t> order(rows.rows());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    auto ra = rows.row(a);
    auto rb = rows.row(b);
    return std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end());
  });
  return order;
}

template <class T>
PreparedContext<T> prepare_context(const CdeVars<T>& v, const ag::Var<T>& ctx) {
  if (ctx.rows() != v.capacity || ctx.cols() != v.dim) {
    throw ShapeError("prepare_context: expected " + std::to_string(v.capacity) + "x" +
                     std::to_string(v.dim) + " context, got " + ctx.value().shape_str());
  }
  auto rows = ag::gather_rows(ctx, canonical_row_order(ctx.value()));
  auto keys = ag::matmul(rows, v.blocks.front()[1]);
  auto values = ag::matmul(rows, v.blocks.front()[2]);
  return {rows, keys, values};
}

/// Mean over sequence rows [begin, end).
template <class T>
ag::Var<T> pool_text_tokens(const ag::Var<T>& seq, std::size_t begin, std::size_t end) {
  if (begin >= end) throw ShapeError("pool_text_tokens: empty text range");
  return ag::mean_rows(seq, begin, end);
}

/// Second stage for a list of texts sharing one prepared context. With
/// `attention_identity` every text position attends only to itself, which
/// cuts the context out of the computation (ablation use).
template <class T>
ag::Var<T> m2_forward(const CdeVars<T>& v, const PreparedContext<T>& ctx,
                      std::span<const std::vector<std::uint32_t>> texts,
                      bool attention_identity = false) {
  if (texts.empty()) throw ShapeError("m2_forward: no texts");
  std::vector<ag::Var<T>> pooled;
  pooled.reserve(texts.size());
  for (const auto& tokens : texts) {
    if (tokens.empty()) throw ShapeError("cde_embed: empty token list");
    const std::size_t len = std::min(tokens.size(), v.max_len);
    std::vector<std::uint32_t> ids(tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(len));
    std::vector<std::uint32_t> positions(len);
    std::iota(positions.begin(), positions.end(), 0u);

    ag::Var<T> x = ag::add(ag::embedding_lookup(v.m2_table, std::move(ids)),
                           ag::embedding_lookup(v.pos_table, std::move(positions)));
    ag::Var<T> c = ctx.rows;
    for (std::size_t b = 0; b < v.blocks.size(); ++b) {
      const auto& [wq, wk, wv] = v.blocks[b];
      const bool last = b + 1 == v.blocks.size();
      auto kc = b == 0 ? ctx.keys : ag::matmul(c, wk);
      auto vc = b == 0 ? ctx.values : ag::matmul(c, wv);
      auto kt = ag::matmul(x, wk);
      auto vt = ag::matmul(x, wv);
      ag::Var<T> attended_text;
      ag::Var<T> next_c;
      if (attention_identity) {
        attended_text = vt;
        next_c = last ? c : ag::add(c, vc);
      } else {
        auto keys = ag::concat_rows<T>({kc, kt});
        auto values = ag::concat_rows<T>({vc, vt});
        if (!last) next_c = ag::add(c, ag::scaled_dot_attention(ag::matmul(c, wq), keys, values));
        attended_text = ag::scaled_dot_attention(ag::matmul(x, wq), keys, values);
      }
      x = ag::add(x, attended_text);
      c = next_c;
    }
    pooled.push_back(ag::matmul(pool_text_tokens(x, 0, len), v.out_proj));
  }
  return ag::l2_normalize_rows(ag::concat_rows(pooled));
}

/// Materialized context: J_max rows, ids ("" for null slots) and the
/// null flags.
template <class T>
struct ContextSet {
  ag::Tensor<T> rows;
  std::vector<std::string> ids;
  std::vector<std::uint8_t> null_mask;

  std::size_t capacity() const noexcept { return null_mask.size(); }
  std::size_t non_null() const {
    return static_cast<std::size_t>(std::count(null_mask.begin(), null_mask.end(), 0));
  }
};

template <class T>
ContextSet<T> null_context(const CdeParams<T>& p) {
  const std::size_t J = p.config.context_capacity;
  ContextSet<T> ctx{ag::Tensor<T>(J, p.config.dim), std::vector<std::string>(J),
                    std::vector<std::uint8_t>(J, 1)};
  for (std::size_t i = 0; i < J; ++i) {
    std::copy(p.null_token.value.data(), p.null_token.value.data() + p.config.dim,
              ctx.rows.row(i).begin());
  }
  return ctx;
}

/// Context from precomputed first-stage rows (e.g. read from a cache).
template <class T>
ContextSet<T> context_from_rows(const CdeParams<T>& p, const ag::Tensor<T>& rows,
                                std::vector<std::string> ids) {
  if (rows.rows() > p.config.context_capacity) {
    throw ShapeError("context_from_rows: " + std::to_string(rows.rows()) +
                     " rows exceed capacity " + std::to_string(p.config.context_capacity));
  }
  if (rows.rows() > 0 && rows.cols() != p.config.dim) {
    throw ShapeError("context_from_rows: row dim mismatch");
  }
  ContextSet<T> ctx = null_context(p);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    std::copy(rows.row(i).begin(), rows.row(i).end(), ctx.rows.row(i).begin());
    ctx.null_mask[i] = 0;
    ctx.ids[i] = i < ids.size() ? ids[i] : std::string();
  }
  return ctx;
}

/// First-stage rows for a document list, no padding.
template <class T>
ag::Tensor<T> m1_rows(const CdeParams<T>& p,
                      std::span<const std::vector<std::uint32_t>> docs) {
  if (docs.empty()) return ag::Tensor<T>(0, p.config.dim);
  ag::Tape<T> tape(false);
  auto v = bind(tape, p);
  return m1_forward(v, docs).value();
}

/// First stage over `docs`, padded with the null token up to capacity.
template <class T>
ContextSet<T> m1_embed_context(const CdeParams<T>& p,
                               std::span<const std::vector<std::uint32_t>> docs,
                               std::vector<std::string> ids = {}) {
  if (docs.size() > p.config.context_capacity) {
    throw ShapeError("m1_embed_context: " + std::to_string(docs.size()) +
                     " documents exceed capacity " + std::to_string(p.config.context_capacity));
  }
  return context_from_rows(p, m1_rows(p, docs), std::move(ids));
}

/// Independent Bernoulli(p) draw per slot.
inline std::vector<std::uint8_t> sample_dropout_mask(std::size_t slots, double p,
                                                     std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sequence dropout p must lie in [0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution drop(p);
  std::vector<std::uint8_t> mask(slots);
  for (auto& m : mask) m = drop(rng) ? 1 : 0;
  return mask;
}

/// Training-time replacement of non-null slots by the null token with
/// probability p; identity when not training.
template <class T>
ContextSet<T> apply_sequence_dropout(const ContextSet<T>& ctx, double p, std::uint64_t seed,
                                     bool training, const CdeParams<T>& params) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("sequence dropout p must lie in [0, 1]");
  if (!training) return ctx;
  ContextSet<T> out = ctx;
  const auto mask = sample_dropout_mask(ctx.capacity(), p, seed);
  for (std::size_t i = 0; i < ctx.capacity(); ++i) {
    if (out.null_mask[i] != 0 || mask[i] == 0) continue;
    out.null_mask[i] = 1;
    out.ids[i].clear();
    std::copy(params.null_token.value.data(), params.null_token.value.data() + params.config.dim,
              out.rows.row(i).begin());
  }
  return out;
}

/// Inference: one unit row per text.
template <class T>
ag::Tensor<T> cde_embed_batch(const CdeParams<T>& p, const ContextSet<T>& ctx,
                              std::span<const std::vector<std::uint32_t>> texts,
                              bool attention_identity = false) {
  ag::Tape<T> tape(false);
  auto v = bind(tape, p);
  auto prepared = prepare_context(v, tape.view(ctx.rows));
  return m2_forward(v, prepared, texts, attention_identity).value();
}

template <class T>
std::vector<T> cde_embed(const std::vector<std::uint32_t>& tokens, const ContextSet<T>& ctx,
                         const CdeParams<T>& p) {
  return cde_embed_batch(p, ctx, std::span(&tokens, 1)).values();
}

/// The null-context reduction: the contextual model used as a biencoder.
template <class T>
std::vector<T> cde_embed_biencoder_mode(const std::vector<std::uint32_t>& tokens,
                                        const CdeParams<T>& p) {
  return cde_embed(tokens, null_context(p), p);
}

}  // namespace cde::model
