#pragma once

#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "cde/core/hash.hpp"
#include "cde/pack/packer.hpp"
#include "cde/train/steps.hpp"

namespace cde::train {

struct TrainLogRow {
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::size_t masked_cells = 0;
  double batch_hardness = 0.0;
};

/// Header: step,lr,loss,masked_cells,batch_hardness
std::string train_log_csv(const std::vector<TrainLogRow>& rows);

struct TrainInputs {
  const TokenizedPairs* tokens = nullptr;
  const pack::BatchPlan* plan = nullptr;
  /// One per batch of the plan, or empty for the unmasked loss.
  std::vector<filter::LossMask> masks;
  /// Optional per-batch hardness, copied into the log.
  std::vector<double> hardness;
};

/// Called after every epoch with the 1-based epoch number.
using EpochHook = std::function<void(std::size_t epoch)>;

namespace detail {

void check_inputs(const TrainInputs& in);

/// Runs `step_fn(batch_index, step, lr)` over every batch of every epoch,
/// with the batch order reshuffled per epoch.
template <class StepFn>
std::vector<TrainLogRow> run_loop(const TrainInputs& in, const TrainConfig& cfg, StepFn&& step_fn,
                                  const EpochHook& hook) {
  cfg.validate();
  check_inputs(in);
  const std::size_t nb = in.plan->batches.size();
  const std::size_t total = cfg.epochs * nb;
  const TrainConfig sched = effective_schedule(cfg, total);
  std::vector<TrainLogRow> log;
  log.reserve(total);
  std::size_t step = 0;
  std::vector<std::size_t> order(nb);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix64(cfg.seed ^ mix64(epoch + 1)));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b : order) {
      // Step s trains at lr_at(s + 1) so neither the first nor the last
      // update is wasted at lr 0.
      const double lr = lr_at(step + 1, total + 1, sched);
      StepResult r = step_fn(b, step, lr);
      log.push_back({step, lr, r.loss, r.masked_cells,
                     in.hardness.empty() ? 0.0 : in.hardness[b]});
      ++step;
    }
    if (hook) hook(epoch + 1);
  }
  return log;
}

}  // namespace detail

template <class T>
std::vector<TrainLogRow> train_biencoder(model::BiencoderParams<T>& params, const TrainInputs& in,
                                         const TrainConfig& cfg, const EpochHook& hook = {}) {
  Adam<T> opt;
  return detail::run_loop(
      in, cfg,
      [&](std::size_t b, std::size_t, double lr) {
        const auto& batch = in.plan->batches[b].pair_indices;
        const auto texts = gather_batch(*in.tokens, batch);
        const filter::LossMask* mask = in.masks.empty() ? nullptr : &in.masks[b];
        return train_step_biencoder(params, opt, texts, mask, cfg, lr);
      },
      hook);
}

template <class T>
std::vector<TrainLogRow> train_cde(model::CdeParams<T>& params, const TrainInputs& in,
                                   const TrainConfig& cfg, const EpochHook& hook = {}) {
  Adam<T> opt;
  return detail::run_loop(
      in, cfg,
      [&](std::size_t b, std::size_t step, double lr) {
        const auto& batch = in.plan->batches[b].pair_indices;
        const auto texts = gather_batch(*in.tokens, batch);
        const auto ctx = plan_context(*in.tokens, batch, params.config.context_capacity, cfg, step);
        const filter::LossMask* mask = in.masks.empty() ? nullptr : &in.masks[b];
        return train_step_cde(params, opt, texts, ctx, mask, cfg, lr);
      },
      hook);
}

}  // namespace cde::train
