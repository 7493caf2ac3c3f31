#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "cde/autograd/tensor.hpp"

namespace cde::train {

/// Adam with bias correction. Moment buffers are created on the first step
/// and matched to parameters by position.
template <class T>
class Adam {
 public:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  std::size_t steps() const noexcept { return t_; }
  const std::vector<ag::Tensor<T>>& first_moments() const noexcept { return m_; }
  const std::vector<ag::Tensor<T>>& second_moments() const noexcept { return v_; }

  void step(std::span<ag::Param<T>* const> params, double lr) {
    if (m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->value.rows(), p->value.cols());
        v_.emplace_back(p->value.rows(), p->value.cols());
      }
    }
    if (m_.size() != params.size()) throw ShapeError("adam: parameter count changed");
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& p = *params[k];
      p.ensure_grad();
      if (!m_[k].same_shape(p.value)) throw ShapeError("adam: buffer shape mismatch for " + p.name);
      T* w = p.value.data();
      const T* g = p.grad.data();
      T* m = m_[k].data();
      T* v = v_[k].data();
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double gi = static_cast<double>(g[i]);
        const double mi = kBeta1 * static_cast<double>(m[i]) + (1.0 - kBeta1) * gi;
        const double vi = kBeta2 * static_cast<double>(v[i]) + (1.0 - kBeta2) * gi * gi;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        if (lr == 0.0) continue;
        const double update = lr * (mi / c1) / (std::sqrt(vi / c2) + kEps);
        w[i] = static_cast<T>(static_cast<double>(w[i]) - update);
      }
    }
  }

 private:
  std::vector<ag::Tensor<T>> m_;
  std::vector<ag::Tensor<T>> v_;
  std::size_t t_ = 0;
};

}  // namespace cde::train
