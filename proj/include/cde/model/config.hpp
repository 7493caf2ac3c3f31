#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "cde/autograd/tensor.hpp"

namespace cde::model {

struct ModelConfig {
  /// Token table rows, reserved ids included.
  std::size_t vocab_size = 4096;
  std::size_t dim = 64;
  /// Text positions that receive positional encodings; longer texts are
  /// truncated.
  std::size_t max_len = 64;
  /// J_max: context slots fed to the second stage.
  std::size_t context_capacity = 64;
  /// Tokens kept per context document in the first stage.
  std::size_t context_doc_tokens = 32;
  /// Attention blocks in the second stage.
  std::size_t blocks = 1;
  double init_std = 0.02;
  std::uint64_t seed = 0;

  void validate() const;
};

namespace detail {

template <class T>
ag::Tensor<T> normal_tensor(std::size_t rows, std::size_t cols, double stddev,
                            std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  ag::Tensor<T> t(rows, cols);
  for (auto& x : t.values()) x = static_cast<T>(dist(rng));
  return t;
}

}  // namespace detail

}  // namespace cde::model
