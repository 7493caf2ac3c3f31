#include "cde/train/trainer.hpp"

#include <sstream>

namespace cde::train {

std::string train_log_csv(const std::vector<TrainLogRow>& rows) {
  std::ostringstream out;
  out.precision(9);
  out << "step,lr,loss,masked_cells,batch_hardness\n";
  for (const auto& r : rows) {
    out << r.step << ',' << r.lr << ',' << r.loss << ',' << r.masked_cells << ','
        << r.batch_hardness << '\n';
  }
  return out.str();
}

namespace detail {

void check_inputs(const TrainInputs& in) {
  if (in.tokens == nullptr || in.plan == nullptr) throw ConfigError("trainer: missing inputs");
  if (in.plan->batches.empty()) throw ConfigError("trainer: batch plan is empty");
  const std::size_t nb = in.plan->batches.size();
  if (!in.masks.empty() && in.masks.size() != nb) {
    throw ShapeError("trainer: " + std::to_string(in.masks.size()) + " masks for " +
                     std::to_string(nb) + " batches");
  }
  if (!in.hardness.empty() && in.hardness.size() != nb) {
    throw ShapeError("trainer: hardness list does not match batch count");
  }
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& batch = in.plan->batches[b].pair_indices;
    if (!in.masks.empty() && in.masks[b].size() != batch.size()) {
      throw ShapeError("trainer: mask " + std::to_string(b) + " does not match its batch");
    }
    for (std::size_t i : batch) {
      if (i >= in.tokens->queries.size()) throw InputError("trainer: pair index out of range");
    }
  }
}

}  // namespace detail

}  // namespace cde::train
