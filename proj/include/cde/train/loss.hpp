#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cde/autograd/ops.hpp"
#include "cde/filter/negative_filter.hpp"

namespace cde::train {

namespace detail {

/// -log softmax of the gold entry over the unmasked entries of one line of
/// S (a row, or a column when `by_column`). Fills `p` with the softmax over
/// unmasked entries (0 where masked).
template <class T>
double line_loss(const ag::Tensor<T>& s, const filter::LossMask* mask, double tau,
                 std::size_t line, bool by_column, std::vector<double>& p) {
  const std::size_t n = s.rows();
  auto at = [&](std::size_t j) {
    return by_column ? static_cast<double>(s(j, line)) : static_cast<double>(s(line, j));
  };
  auto masked = [&](std::size_t j) {
    if (mask == nullptr) return false;
    return by_column ? (*mask)(j, line) : (*mask)(line, j);
  };
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    if (!masked(j)) top = std::max(top, at(j) / tau);
  }
  double z = 0.0;
  p.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (masked(j)) continue;
    p[j] = std::exp(at(j) / tau - top);
    z += p[j];
  }
  for (auto& x : p) x /= z;
  return top + std::log(z) - at(line) / tau;
}

template <class T>
void check_scores(const ag::Tensor<T>& s, const filter::LossMask* mask) {
  if (s.rows() != s.cols() || s.rows() == 0) {
    throw ShapeError("info_nce: score matrix must be square and non-empty, got " + s.shape_str());
  }
  if (mask != nullptr && mask->size() != s.rows()) {
    throw ShapeError("info_nce: mask size " + std::to_string(mask->size()) +
                     " does not match batch " + std::to_string(s.rows()));
  }
  for (T x : s.values()) {
    if (!std::isfinite(static_cast<double>(x))) {
      throw NumericError("info_nce: non-finite score");
    }
  }
}

}  // namespace detail

/// Per-row query->document losses for a score matrix S[i][j] = q_i . d_j.
template <class T>
std::vector<double> info_nce_rows(const ag::Tensor<T>& s, const filter::LossMask* mask,
                                  double tau) {
  detail::check_scores(s, mask);
  std::vector<double> out(s.rows()), p;
  for (std::size_t i = 0; i < s.rows(); ++i) out[i] = detail::line_loss(s, mask, tau, i, false, p);
  return out;
}

/// Mean masked InfoNCE over rows (and over columns too when `symmetric`,
/// averaging the two directions). Masked cells leave the normalizer; the
/// diagonal never does.
template <class T>
ag::Var<T> info_nce_loss(const ag::Var<T>& scores, const filter::LossMask* mask, double tau,
                         bool symmetric = false) {
  if (!(tau > 0.0)) throw ConfigError("info_nce: temperature must be positive");
  const auto& s = scores.value();
  detail::check_scores(s, mask);
  const std::size_t n = s.rows();
  const double lines = symmetric ? 2.0 * static_cast<double>(n) : static_cast<double>(n);

  ag::Tensor<T> dscore(n, n);
  double total = 0.0;
  std::vector<double> p;
  for (int dir = 0; dir < (symmetric ? 2 : 1); ++dir) {
    const bool by_column = dir == 1;
    for (std::size_t i = 0; i < n; ++i) {
      total += detail::line_loss(s, mask, tau, i, by_column, p);
      for (std::size_t j = 0; j < n; ++j) {
        const double g = (p[j] - (i == j ? 1.0 : 0.0)) / (tau * lines);
        T& cell = by_column ? dscore(j, i) : dscore(i, j);
        cell = static_cast<T>(static_cast<double>(cell) + g);
      }
    }
  }
  const double loss = total / lines;
  if (!std::isfinite(loss)) throw NumericError("info_nce: loss is not finite");

  auto pn = scores.node();
  return scores.tape().make(
      ag::Tensor<T>::scalar(static_cast<T>(loss)), scores.requires_grad(),
      [pn, dscore = std::move(dscore)](ag::Node<T>& self) {
        const double g = static_cast<double>(self.grad.item());
        auto& dst = pn->ensure_grad();
        for (std::size_t i = 0; i < dst.size(); ++i) {
          dst.data()[i] = static_cast<T>(static_cast<double>(dst.data()[i]) +
                                         g * static_cast<double>(dscore.data()[i]));
        }
      });
}

}  // namespace cde::train
