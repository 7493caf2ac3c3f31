#include <cmath>
#include <random>

#include "doctest.h"
#include "cde/autograd/gradcheck.hpp"
#include "cde/autograd/ops.hpp"

using namespace cde;
using namespace cde::ag;

namespace {

Tensor<double> rand_tensor(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> u(-1, 1);
  Tensor<double> t(r, c);
  for (auto& x : t.values()) x = u(rng);
  return t;
}

}  // namespace

TEST_CASE("softmax of an equal row is uniform") {
  Tape<double> tape(false);
  auto s = rowwise_softmax(tape.constant(Tensor<double>(1, 4, 3.0)));
  for (double x : s.value().values()) CHECK(x == doctest::Approx(0.25));
}

TEST_CASE("attention over identical keys averages the values") {
  Tape<double> tape(false);
  auto q = tape.constant(Tensor<double>(2, 3, {0.1, 0.2, 0.3, -1, 2, 0}));
  auto k = tape.constant(Tensor<double>(3, 3, {1, 1, 1, 1, 1, 1, 1, 1, 1}));
  auto v = tape.constant(Tensor<double>(3, 2, {1, 2, 3, 4, 5, 9}));
  auto out = scaled_dot_attention(q, k, v).value();
  for (std::size_t r = 0; r < 2; ++r) {
    CHECK(out(r, 0) == doctest::Approx(3.0));
    CHECK(out(r, 1) == doctest::Approx(5.0));
  }
}

TEST_CASE("identity matmul") {
  std::mt19937_64 rng(1);
  const auto x = rand_tensor(rng, 3, 4);
  Tensor<double> eye(3, 3);
  for (int i = 0; i < 3; ++i) eye(i, i) = 1;
  Tape<double> tape(false);
  CHECK(matmul(tape.constant(eye), tape.constant(x)).value() == x);
}

TEST_CASE("shape errors") {
  Tape<double> tape(false);
  auto a = tape.constant(Tensor<double>(2, 3));
  auto b = tape.constant(Tensor<double>(2, 3));
  CHECK_THROWS_AS(matmul(a, b), ShapeError);
  CHECK_THROWS_AS(add(a, tape.constant(Tensor<double>(3, 2))), ShapeError);
  CHECK_THROWS_AS(Tensor<double>(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  Tape<double> rec;
  auto x = rec.input(Tensor<double>(2, 2));
  CHECK_THROWS_AS(rec.backward(x), ShapeError);
}

TEST_CASE("backward of sum and dot") {
  Param<double> x("x", Tensor<double>(1, 3, {1, 2, 3}));
  Param<double> y("y", Tensor<double>(1, 3, {4, -5, 6}));
  {
    Tape<double> tape;
    tape.backward(sum(tape.param(x)));
    for (double g : x.grad.values()) CHECK(g == 1.0);
  }
  x.zero_grad();
  {
    Tape<double> tape;
    tape.backward(matmul_nt(tape.param(x), tape.param(y)));
    CHECK(x.grad == y.value);
    CHECK(y.grad == x.value);
  }
}

TEST_CASE("finite_diff_check closed forms") {
  Param<double> t("t", Tensor<double>(1, 2, {1, 2}));
  std::vector<Param<double>*> ps{&t};
  const std::function<Var<double>(Tape<double>&)> sq = [&](Tape<double>& tape) {
    auto v = tape.param(t);
    return matmul_nt(v, v);
  };
  CHECK(finite_diff_check<double>(sq, ps, 1e-4) < 1e-8);
  CHECK(t.grad(0, 0) == doctest::Approx(2.0));
  CHECK(t.grad(0, 1) == doctest::Approx(4.0));

  const std::function<Var<double>(Tape<double>&)> constant = [&](Tape<double>& tape) {
    return sum(scale(tape.param(t), 0.0));
  };
  CHECK(finite_diff_check<double>(constant, ps, 1e-6) == 0.0);
  for (double g : t.grad.values()) CHECK(g == 0.0);
}

TEST_CASE("finite_diff_check catches a wrong gradient") {
  Param<double> t("t", Tensor<double>(1, 2, {1, 2}));
  std::vector<Param<double>*> ps{&t};
  // Forward doubles the input but the recorded backward is the identity.
  const std::function<Var<double>(Tape<double>&)> wrong = [&](Tape<double>& tape) {
    auto v = tape.param(t);
    Tensor<double> out = v.value();
    for (auto& x : out.values()) x *= 2;
    auto node = v.node();
    return sum(tape.make(out, v.requires_grad(), [node](Node<double>& self) {
      auto& g = node->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += self.grad.data()[i];
    }));
  };
  CHECK(finite_diff_check<double>(wrong, ps, 1e-6) > 0.1);
}

TEST_CASE("attention layer gradients") {
  std::mt19937_64 rng(4);
  Param<double> q("q", rand_tensor(rng, 3, 4)), k("k", rand_tensor(rng, 5, 4)),
      v("v", rand_tensor(rng, 5, 2));
  const auto r = rand_tensor(rng, 2, 3);
  std::vector<Param<double>*> ps{&q, &k, &v};
  const std::function<Var<double>(Tape<double>&)> fn = [&](Tape<double>& tape) {
    auto out = scaled_dot_attention(tape.param(q), tape.param(k), tape.param(v));
    return sum(rowwise_softmax(matmul(out, tape.view(r))));
  };
  CHECK(finite_diff_check<double>(fn, ps, 1e-6) < 1e-5);
}

TEST_CASE("f32 composite within the looser tolerance") {
  std::mt19937_64 rng(5);
  Param<float> a("a", rand_tensor(rng, 3, 3).cast<float>());
  const auto r = rand_tensor(rng, 3, 2).cast<float>();
  std::vector<Param<float>*> ps{&a};
  const std::function<Var<float>(Tape<float>&)> fn = [&](Tape<float>& tape) {
    return sum(matmul(rowwise_softmax(tape.param(a)), tape.view(r)));
  };
  CHECK(finite_diff_check<float>(fn, ps, 1e-2) < 1e-3);
}

TEST_CASE("live tensor accounting") {
  const std::size_t before = TensorStats::live();
  {
    Tensor<double> a(2, 2), b = a;
    CHECK(TensorStats::live() == before + 2);
    Tensor<double> empty;
    CHECK(TensorStats::live() == before + 2);
  }
  CHECK(TensorStats::live() == before);
  TensorStats::reset_peak();
  {
    Tensor<double> a(1, 1), b(1, 1), c(1, 1);
  }
  CHECK(TensorStats::peak() == before + 3);
}

TEST_CASE("l2 normalization of a non-finite row propagates NaN") {
  Tape<double> tape(false);
  auto out = l2_normalize_rows(tape.constant(
      Tensor<double>(2, 2, {std::numeric_limits<double>::infinity(), 1, 3, 4})));
  CHECK(std::isnan(out.value()(0, 0)));
  CHECK(out.value()(1, 0) == doctest::Approx(0.6));
}

TEST_CASE("dropout_rows replaces masked rows with the fill") {
  Tape<double> tape(false);
  auto x = tape.constant(Tensor<double>(3, 2, {1, 2, 3, 4, 5, 6}));
  auto fill = tape.constant(Tensor<double>(1, 2, {-1, -2}));
  auto out = dropout_rows(x, {0, 1, 0}, fill).value();
  CHECK(out == Tensor<double>(3, 2, {1, 2, -1, -2, 5, 6}));
}
