#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "cde/autograd/ops.hpp"

namespace cde::ag {

/// Central-difference check of analytic gradients.
///
/// `fn` builds a scalar on the tape it is given. Analytic grads come from
/// one recording pass; each parameter entry is then perturbed by +-step and
/// re-evaluated on a non-recording tape. The per-entry error is
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3 * g_max), where
/// g_max is the largest numeric gradient magnitude, so entries that are
/// zero by symmetry do not divide by zero. Returns the maximum.
///
/// A central difference cannot resolve slopes below eps * max(1, |f|) / step.
/// When every numeric entry is under that floor the function is flat at the
/// check's resolution, and the error is max |analytic| divided by the floor.
template <class T>
double finite_diff_check(const std::function<Var<T>(Tape<T>&)>& fn,
                         std::span<Param<T>* const> params, double step) {
  for (Param<T>* p : params) p->zero_grad();
  {
    Tape<T> tape;
    Var<T> loss = fn(tape);
    tape.backward(loss);
  }

  auto eval = [&]() {
    Tape<T> tape(false);
    return static_cast<double>(fn(tape).value().item());
  };
  const double resolution = static_cast<double>(std::numeric_limits<T>::epsilon()) *
                            std::max(1.0, std::abs(eval())) / step;

  std::vector<double> analytic, numeric;
  for (Param<T>* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      T& x = p->value.data()[i];
      const T saved = x;
      x = static_cast<T>(saved + step);
      const double up = eval();
      x = static_cast<T>(saved - step);
      const double down = eval();
      x = saved;
      numeric.push_back((up - down) / (2.0 * step));
      analytic.push_back(static_cast<double>(p->grad.data()[i]));
    }
  }

  double g_max = 0.0;
  for (double n : numeric) g_max = std::max(g_max, std::abs(n));
  const double floor = std::max(1e-3 * g_max, 1e-300);
  double worst = 0.0;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  if (g_max <= resolution) {
    worst = 0.0;
    for (double a : analytic) worst = std::max(worst, std::abs(a) / resolution);
  }
  return worst;
}

}  // namespace cde::ag
