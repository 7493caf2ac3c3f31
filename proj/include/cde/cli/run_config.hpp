#pragma once

// Flat key=value run configuration covering every module. A config file
// holds one "key = value" per line; '#' starts a comment. Unknown keys and
// unparsable values are ConfigErrors.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cde/cluster/kmeans.hpp"
#include "cde/core/dataset.hpp"
#include "cde/filter/negative_filter.hpp"
#include "cde/model/config.hpp"
#include "cde/pack/packer.hpp"
#include "cde/surrogate/embedder.hpp"
#include "cde/train/config.hpp"

namespace cde::cli {

struct EvalSettings {
  /// "<doc source>-<query source>", see eval::InferenceStrategy.
  std::string strategy = "null-null";
  /// Context size; 0 means the model capacity.
  std::size_t k = 0;
  /// Comma-separated context sizes for sweep-context.
  std::string sizes = "0,8,16,32,64";
  double highlight_margin = 0.01;
  /// cosine | l1
  std::string divergence = "cosine";
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  data::SyntheticConfig synth;
  /// Fraction of each domain's pairs synth-data writes to test.jsonl.
  double holdout = 0.25;
  surrogate::SurrogateConfig surrogate;
  cluster::ClusterConfig cluster;
  pack::PackingConfig pack;
  filter::FilterConfig filter;
  model::ModelConfig model;
  train::TrainConfig train;
  EvalSettings eval;

  /// Sets one key from its text form.
  void set(std::string_view key, std::string_view value);
  /// "key = value" lines, applied in order.
  void apply_text(std::string_view text, std::string_view source = "<config>");
  void apply_file(const std::filesystem::path& path);

  /// Copies `seed` into every module seed, each under its own salt.
  void derive_seeds();
  nlohmann::json seeds() const;

  /// Every key with its effective value, typed.
  nlohmann::json echo() const;
  static std::vector<std::string> keys();

  void validate() const;
};

std::vector<std::size_t> parse_size_list(std::string_view text);

}  // namespace cde::cli
