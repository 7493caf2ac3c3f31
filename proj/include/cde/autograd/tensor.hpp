#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cde/error.hpp"

namespace cde::ag {

/// Live-buffer accounting, per thread. Every non-empty Tensor holds one
/// count while it is alive; copies acquire their own.
class TensorStats {
 public:
  static std::size_t live() noexcept { return live_; }
  static std::size_t peak() noexcept { return peak_; }
  static void reset_peak() noexcept { peak_ = live_; }

 private:
  template <class T>
  friend class Tensor;
  friend class LiveToken;
  static void acquire() noexcept {
    ++live_;
    peak_ = std::max(peak_, live_);
  }
  static void release() noexcept { --live_; }

  static inline thread_local std::size_t live_ = 0;
  static inline thread_local std::size_t peak_ = 0;
};

class LiveToken {
 public:
  LiveToken() = default;
  explicit LiveToken(bool active) : active_(active) {
    if (active_) TensorStats::acquire();
  }
  LiveToken(const LiveToken& o) : active_(o.active_) {
    if (active_) TensorStats::acquire();
  }
  LiveToken(LiveToken&& o) noexcept : active_(std::exchange(o.active_, false)) {}
  LiveToken& operator=(const LiveToken& o) {
    if (this != &o) {
      if (o.active_ && !active_) TensorStats::acquire();
      if (!o.active_ && active_) TensorStats::release();
      active_ = o.active_;
    }
    return *this;
  }
  LiveToken& operator=(LiveToken&& o) noexcept {
    if (this != &o) {
      if (active_) TensorStats::release();
      active_ = std::exchange(o.active_, false);
    }
    return *this;
  }
  ~LiveToken() {
    if (active_) TensorStats::release();
  }

 private:
  bool active_ = false;
};

/// Row-major 2-D array. Scalars are 1x1, vectors 1xN.
template <class T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill), token_(rows * cols > 0) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<T> values)
      : rows_(rows), cols_(cols), data_(std::move(values)), token_(rows * cols > 0) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("tensor: " + std::to_string(data_.size()) +
                       " values for shape " + std::to_string(rows_) + "x" +
                       std::to_string(cols_));
    }
  }

  static Tensor scalar(T v) { return Tensor(1, 1, v); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }
  bool same_shape(const Tensor& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  T operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  T item() const {
    if (data_.size() != 1) throw ShapeError("item() on " + shape_str() + " tensor");
    return data_[0];
  }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <class U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(rows_, cols_, std::move(out));
  }

  bool operator==(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
  LiveToken token_;
};

/// A learnable tensor and its gradient accumulator.
template <class T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void ensure_grad() {
    if (!grad.same_shape(value)) grad = Tensor<T>(value.rows(), value.cols());
  }
  void zero_grad() {
    ensure_grad();
    grad.fill(T(0));
  }

  template <class U>
  Param<U> cast() const {
    Param<U> p(name, value.template cast<U>());
    p.grad = grad.template cast<U>();
    return p;
  }
};

}  // namespace cde::ag
