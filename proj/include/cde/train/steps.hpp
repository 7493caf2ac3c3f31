#pragma once

// One optimization step for each encoder, plus the two gradient paths for
// the contextual encoder (direct backprop and two-stage gradient caching).

#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "cde/core/dataset.hpp"
#include "cde/filter/negative_filter.hpp"
#include "cde/model/biencoder.hpp"
#include "cde/model/cde.hpp"
#include "cde/model/tokens.hpp"
#include "cde/train/adam.hpp"
#include "cde/train/config.hpp"
#include "cde/train/loss.hpp"

namespace cde::train {

using TokenLists = std::vector<std::vector<std::uint32_t>>;

/// Token ids for every pair of a dataset, encoded once.
struct TokenizedPairs {
  TokenLists queries;
  TokenLists documents;
  /// Documents truncated to the first-stage budget.
  TokenLists context_documents;
};

TokenizedPairs tokenize_pairs(const data::PairDataset& dataset, const model::TokenEncoder& enc,
                              const model::ModelConfig& cfg);

struct BatchTexts {
  TokenLists queries;
  TokenLists documents;
};

BatchTexts gather_batch(const TokenizedPairs& tokens, std::span<const std::size_t> batch);

/// Indices into a batch's documents: all of them when n <= k, otherwise k
/// distinct indices drawn uniformly. Sorted; a pure function of its inputs.
std::vector<std::size_t> subsample_context(std::size_t n, std::size_t k, std::uint64_t seed,
                                           std::uint64_t step = 0);

/// Second-stage context for one batch: the surviving context documents and
/// a J_max mask that is 0 exactly on the first `docs.size()` slots.
struct ContextPlan {
  TokenLists docs;
  std::vector<std::uint8_t> null_mask;
};

/// subsample_context over the batch documents with k capped at the model
/// capacity, then sequence dropout (when training) resampled from
/// (seed, step). Dropped documents are removed rather than computed and
/// discarded; slot order does not matter to the encoder.
ContextPlan plan_context(const TokenizedPairs& tokens, std::span<const std::size_t> batch,
                         std::size_t capacity, const TrainConfig& cfg, std::uint64_t step,
                         bool training = true);

struct StepResult {
  double loss = 0.0;
  double lr = 0.0;
  std::size_t masked_cells = 0;
};

/// Zeroes grads, computes the masked loss and accumulates parameter grads.
template <class T>
double biencoder_loss_grad(model::BiencoderParams<T>& params, const BatchTexts& batch,
                           const filter::LossMask* mask, const TrainConfig& cfg) {
  for (auto* p : params.all()) p->zero_grad();
  ag::Tape<T> tape;
  auto vars = model::bind(tape, params);
  auto q = model::biencoder_forward(vars, std::span<const std::vector<std::uint32_t>>(batch.queries));
  auto d = model::biencoder_forward(vars, std::span<const std::vector<std::uint32_t>>(batch.documents));
  auto loss = info_nce_loss(ag::matmul_nt(q, d), mask, cfg.temperature, cfg.symmetric);
  tape.backward(loss);
  return static_cast<double>(loss.value().item());
}

template <class T>
StepResult train_step_biencoder(model::BiencoderParams<T>& params, Adam<T>& opt,
                                const BatchTexts& batch, const filter::LossMask* mask,
                                const TrainConfig& cfg, double lr) {
  const double loss = biencoder_loss_grad(params, batch, mask, cfg);
  auto ps = params.all();
  opt.step(ps, lr);
  return {loss, lr, mask != nullptr ? mask->masked_count() : 0};
}

namespace detail {

template <class T>
ag::Var<T> cde_context(const model::CdeVars<T>& v, const ag::Var<T>* rows,
                       const ContextPlan& ctx) {
  return model::assemble_context(v, rows, ctx.null_mask);
}

inline std::span<const std::vector<std::uint32_t>> lists(const TokenLists& l) {
  return {l.data(), l.size()};
}

}  // namespace detail

/// Direct end-to-end backprop through both stages. Zeroes grads first.
template <class T>
double cde_loss_grad_direct(model::CdeParams<T>& params, const BatchTexts& batch,
                            const ContextPlan& ctx, const filter::LossMask* mask,
                            const TrainConfig& cfg) {
  for (auto* p : params.all()) p->zero_grad();
  ag::Tape<T> tape;
  auto v = model::bind(tape, params);
  ag::Var<T> rows;
  if (!ctx.docs.empty()) rows = model::m1_forward(v, detail::lists(ctx.docs));
  auto c = detail::cde_context(v, ctx.docs.empty() ? nullptr : &rows, ctx);
  auto prepared = model::prepare_context(v, c);
  auto q = model::m2_forward(v, prepared, detail::lists(batch.queries));
  auto d = model::m2_forward(v, prepared, detail::lists(batch.documents));
  auto loss = info_nce_loss(ag::matmul_nt(q, d), mask, cfg.temperature, cfg.symmetric);
  tape.backward(loss);
  return static_cast<double>(loss.value().item());
}

/// Two-stage gradient caching. Produces the same grads as
/// cde_loss_grad_direct while holding only one chunk's graph at a time:
///   A. first-stage rows, no graph
///   B. second-stage embeddings and loss, no graph; d loss / d embedding
///   C. second stage again per chunk of texts with a graph, seeded with
///      the cached embedding grads; collects d loss / d context rows
///   D. first stage again per chunk of documents, seeded with those grads
template <class T>
double cde_loss_grad_gradcache(model::CdeParams<T>& params, const BatchTexts& batch,
                               const ContextPlan& ctx, const filter::LossMask* mask,
                               const TrainConfig& cfg) {
  for (auto* p : params.all()) p->zero_grad();
  const auto& frozen = std::as_const(params);
  const bool has_rows = !ctx.docs.empty();
  const std::size_t chunk = cfg.gradcache_chunk;

  // A
  ag::Tensor<T> rows = model::m1_rows(frozen, detail::lists(ctx.docs));

  // B
  ag::Tensor<T> q_emb, d_emb;
  {
    ag::Tape<T> tape(false);
    auto v = model::bind(tape, frozen);
    auto r = tape.view(rows);
    auto prepared = model::prepare_context(v, detail::cde_context(v, has_rows ? &r : nullptr, ctx));
    q_emb = model::m2_forward(v, prepared, detail::lists(batch.queries)).value();
    d_emb = model::m2_forward(v, prepared, detail::lists(batch.documents)).value();
  }
  ag::Tensor<T> q_grad, d_grad;
  double loss_value = 0.0;
  {
    ag::Tape<T> tape;
    auto q = tape.input(q_emb);
    auto d = tape.input(d_emb);
    auto loss = info_nce_loss(ag::matmul_nt(q, d), mask, cfg.temperature, cfg.symmetric);
    tape.backward(loss);
    loss_value = static_cast<double>(loss.value().item());
    q_grad = q.grad();
    d_grad = d.grad();
  }

  // C
  ag::Tensor<T> row_grad(rows.rows(), rows.cols());
  auto second_stage = [&](const TokenLists& texts, const ag::Tensor<T>& cached,
                          const ag::Tensor<T>& seed_grad) {
    for (std::size_t begin = 0; begin < texts.size(); begin += chunk) {
      const std::size_t end = std::min(texts.size(), begin + chunk);
      ag::Tape<T> tape;
      auto v = model::bind(tape, params);
      auto r = tape.input(rows);
      auto prepared =
          model::prepare_context(v, detail::cde_context(v, has_rows ? &r : nullptr, ctx));
      auto out = model::m2_forward(
          v, prepared, std::span<const std::vector<std::uint32_t>>(texts.data() + begin, end - begin));
      ag::Tensor<T> seed(end - begin, cached.cols());
      for (std::size_t i = begin; i < end; ++i) {
        const auto a = out.value().row(i - begin);
        const auto b = cached.row(i);
        if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) {
          throw Error("gradcache: second-stage recomputation diverged from cached embedding");
        }
        std::copy(seed_grad.row(i).begin(), seed_grad.row(i).end(), seed.row(i - begin).begin());
      }
      std::pair<ag::Var<T>, ag::Tensor<T>> s{out, std::move(seed)};
      tape.backward_from(std::span(&s, 1));
      if (has_rows && !r.grad().empty()) {
        if (!r.grad().same_shape(row_grad)) throw Error("gradcache: context grad shape mismatch");
        for (std::size_t i = 0; i < row_grad.size(); ++i) row_grad.data()[i] += r.grad().data()[i];
      }
    }
  };
  second_stage(batch.queries, q_emb, q_grad);
  second_stage(batch.documents, d_emb, d_grad);

  // D
  for (std::size_t begin = 0; has_rows && begin < ctx.docs.size(); begin += chunk) {
    const std::size_t end = std::min(ctx.docs.size(), begin + chunk);
    ag::Tape<T> tape;
    auto v = model::bind(tape, params);
    auto out = model::m1_forward(
        v, std::span<const std::vector<std::uint32_t>>(ctx.docs.data() + begin, end - begin));
    ag::Tensor<T> seed(end - begin, row_grad.cols());
    for (std::size_t i = begin; i < end; ++i) {
      std::copy(row_grad.row(i).begin(), row_grad.row(i).end(), seed.row(i - begin).begin());
    }
    std::pair<ag::Var<T>, ag::Tensor<T>> s{out, std::move(seed)};
    tape.backward_from(std::span(&s, 1));
  }
  return loss_value;
}

template <class T>
StepResult train_step_cde(model::CdeParams<T>& params, Adam<T>& opt, const BatchTexts& batch,
                          const ContextPlan& ctx, const filter::LossMask* mask,
                          const TrainConfig& cfg, double lr) {
  const double loss = cfg.gradcache ? cde_loss_grad_gradcache(params, batch, ctx, mask, cfg)
                                    : cde_loss_grad_direct(params, batch, ctx, mask, cfg);
  auto ps = params.all();
  opt.step(ps, lr);
  return {loss, lr, mask != nullptr ? mask->masked_count() : 0};
}

}  // namespace cde::train
