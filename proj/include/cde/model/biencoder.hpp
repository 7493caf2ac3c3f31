#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "cde/autograd/ops.hpp"
#include "cde/model/config.hpp"

namespace cde::model {

/// Shared token table and projection used for both documents and queries.
template <class T>
struct BiencoderParams {
  ModelConfig config;
  ag::Param<T> token_table;
  ag::Param<T> projection;

  static BiencoderParams init(const ModelConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    BiencoderParams p;
    p.config = cfg;
    p.token_table = {"bi.token_table",
                     detail::normal_tensor<T>(cfg.vocab_size, cfg.dim, cfg.init_std, rng)};
    p.projection = {"bi.projection",
                    detail::normal_tensor<T>(cfg.dim, cfg.dim,
                                             1.0 / std::sqrt(static_cast<double>(cfg.dim)), rng)};
    return p;
  }

  std::vector<ag::Param<T>*> all() { return {&token_table, &projection}; }

  template <class U>
  BiencoderParams<U> cast() const {
    BiencoderParams<U> out;
    out.config = config;
    out.token_table = token_table.template cast<U>();
    out.projection = projection.template cast<U>();
    return out;
  }
};

/// Parameter handles bound to one tape.
template <class T>
struct BiencoderVars {
  ag::Var<T> token_table;
  ag::Var<T> projection;
};

/// Gradient leaves for training.
template <class T>
BiencoderVars<T> bind(ag::Tape<T>& tape, BiencoderParams<T>& p) {
  return {tape.param(p.token_table), tape.param(p.projection)};
}

/// Read-only views for inference.
template <class T>
BiencoderVars<T> bind(ag::Tape<T>& tape, const BiencoderParams<T>& p) {
  return {tape.view(p.token_table.value), tape.view(p.projection.value)};
}

/// Batched forward: one unit-norm row per text (mean pool -> project ->
/// normalize).
template <class T>
ag::Var<T> biencoder_forward(const BiencoderVars<T>& vars,
                             std::span<const std::vector<std::uint32_t>> texts) {
  if (texts.empty()) throw ShapeError("biencoder_forward: no texts");
  std::vector<std::uint32_t> flat;
  std::vector<std::size_t> offsets = {0};
  for (const auto& t : texts) {
    if (t.empty()) throw ShapeError("biencoder_embed: empty token list");
    flat.insert(flat.end(), t.begin(), t.end());
    offsets.push_back(flat.size());
  }
  auto pooled = ag::segment_mean(ag::embedding_lookup(vars.token_table, std::move(flat)),
                                 std::move(offsets));
  return ag::l2_normalize_rows(ag::matmul(pooled, vars.projection));
}

template <class T>
std::vector<T> biencoder_embed(const std::vector<std::uint32_t>& tokens,
                               const BiencoderParams<T>& params) {
  ag::Tape<T> tape(false);
  auto out = biencoder_forward(bind(tape, params), std::span(&tokens, 1));
  return out.value().values();
}

}  // namespace cde::model
