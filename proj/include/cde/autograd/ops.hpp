#pragma once

// Differentiable primitives. Forward values are computed eagerly; when the
// tape records, each op stores a closure that maps the output gradient to
// its inputs. Reductions accumulate in double regardless of T.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cde/autograd/tape.hpp"

namespace cde::ag {

namespace detail {

template <class T>
Tensor<T>* grad_of(const std::shared_ptr<Node<T>>& n) {
  return n->requires_grad ? &n->ensure_grad() : nullptr;
}

template <class T>
void same_tape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (&a.tape() != &b.tape()) {
    throw Error(std::string(op) + ": operands live on different tapes");
  }
}

[[noreturn]] inline void shape_fail(const char* op, const std::string& a,
                                    const std::string& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a + " and " + b);
}

// C(MxN) += alpha * A(MxK) B(KxN)
template <class T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B,
             T* C, double alpha = 1.0) {
  std::vector<double> acc(N);
  for (std::size_t i = 0; i < M; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* arow = A + i * K;
    for (std::size_t k = 0; k < K; ++k) {
      const double a = arow[k];
      if (a == 0.0) continue;
      const T* brow = B + k * N;
      for (std::size_t j = 0; j < N; ++j) acc[j] += a * brow[j];
    }
    T* crow = C + i * N;
    for (std::size_t j = 0; j < N; ++j) crow[j] += static_cast<T>(alpha * acc[j]);
  }
}

// C(MxN) += alpha * A(MxK) B(NxK)^T
template <class T>
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B,
             T* C, double alpha = 1.0) {
  for (std::size_t i = 0; i < M; ++i) {
    const T* arow = A + i * K;
    for (std::size_t j = 0; j < N; ++j) {
      const T* brow = B + j * K;
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += static_cast<double>(arow[k]) * brow[k];
      C[i * N + j] += static_cast<T>(alpha * s);
    }
  }
}

// C(MxN) += alpha * A(KxM)^T B(KxN)
template <class T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B,
             T* C, double alpha = 1.0) {
  std::vector<double> acc(M * N, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const T* arow = A + k * M;
    const T* brow = B + k * N;
    for (std::size_t i = 0; i < M; ++i) {
      const double a = arow[i];
      if (a == 0.0) continue;
      double* crow = acc.data() + i * N;
      for (std::size_t j = 0; j < N; ++j) crow[j] += a * brow[j];
    }
  }
  for (std::size_t i = 0; i < M * N; ++i) C[i] += static_cast<T>(alpha * acc[i]);
}

template <class T>
void softmax_row(const T* in, T* out, std::size_t n, double scale = 1.0) {
  double mx = -INFINITY;
  for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, scale * in[j]);
  double z = 0.0;
  std::vector<double> e(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = std::exp(scale * in[j] - mx);
    z += e[j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<T>(e[j] / z);
}

}  // namespace detail

/// a(MxK) b(KxN)
template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  detail::same_tape(a, b, "matmul");
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.cols() != B.rows()) detail::shape_fail("matmul", A.shape_str(), B.shape_str());
  const std::size_t M = A.rows(), K = A.cols(), N = B.cols();
  Tensor<T> out(M, N);
  detail::gemm_nn(M, N, K, A.data(), B.data(), out.data());
  auto an = a.node(), bn = b.node();
  return a.tape().make(std::move(out), an->requires_grad || bn->requires_grad,
                       [an, bn, M, N, K](Node<T>& self) {
                         const auto& G = self.grad;
                         if (auto* ga = detail::grad_of(an)) {
                           detail::gemm_nt(M, K, N, G.data(), bn->value().data(), ga->data());
                         }
                         if (auto* gb = detail::grad_of(bn)) {
                           detail::gemm_tn(K, N, M, an->value().data(), G.data(), gb->data());
                         }
                       });
}

/// a(MxK) b(NxK)^T
template <class T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b) {
  detail::same_tape(a, b, "matmul_nt");
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.cols() != B.cols()) detail::shape_fail("matmul_nt", A.shape_str(), B.shape_str());
  const std::size_t M = A.rows(), K = A.cols(), N = B.rows();
  Tensor<T> out(M, N);
  detail::gemm_nt(M, N, K, A.data(), B.data(), out.data());
  auto an = a.node(), bn = b.node();
  return a.tape().make(std::move(out), an->requires_grad || bn->requires_grad,
                       [an, bn, M, N, K](Node<T>& self) {
                         const auto& G = self.grad;
                         if (auto* ga = detail::grad_of(an)) {
                           detail::gemm_nn(M, K, N, G.data(), bn->value().data(), ga->data());
                         }
                         if (auto* gb = detail::grad_of(bn)) {
                           detail::gemm_tn(N, K, M, G.data(), an->value().data(), gb->data());
                         }
                       });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::same_tape(a, b, "add");
  const auto& A = a.value();
  const auto& B = b.value();
  if (!A.same_shape(B)) detail::shape_fail("add", A.shape_str(), B.shape_str());
  Tensor<T> out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += B.data()[i];
  auto an = a.node(), bn = b.node();
  return a.tape().make(std::move(out), an->requires_grad || bn->requires_grad,
                       [an, bn](Node<T>& self) {
                         for (auto* g : {detail::grad_of(an), detail::grad_of(bn)}) {
                           if (g == nullptr) continue;
                           for (std::size_t i = 0; i < g->size(); ++i) g->data()[i] += self.grad.data()[i];
                         }
                       });
}

/// a(MxN) + row(1xN) broadcast over rows.
template <class T>
Var<T> add_row(const Var<T>& a, const Var<T>& row) {
  detail::same_tape(a, row, "add_row");
  const auto& A = a.value();
  const auto& R = row.value();
  if (R.rows() != 1 || R.cols() != A.cols()) detail::shape_fail("add_row", A.shape_str(), R.shape_str());
  Tensor<T> out = A;
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t j = 0; j < A.cols(); ++j) out(i, j) += R(0, j);
  }
  auto an = a.node(), rn = row.node();
  return a.tape().make(std::move(out), an->requires_grad || rn->requires_grad,
                       [an, rn](Node<T>& self) {
                         const auto& G = self.grad;
                         if (auto* ga = detail::grad_of(an)) {
                           for (std::size_t i = 0; i < G.size(); ++i) ga->data()[i] += G.data()[i];
                         }
                         if (auto* gr = detail::grad_of(rn)) {
                           for (std::size_t j = 0; j < G.cols(); ++j) {
                             double s = 0.0;
                             for (std::size_t i = 0; i < G.rows(); ++i) s += G(i, j);
                             (*gr)(0, j) += static_cast<T>(s);
                           }
                         }
                       });
}

template <class T>
Var<T> scale(const Var<T>& a, double s) {
  Tensor<T> out = a.value();
  for (auto& x : out.values()) x = static_cast<T>(x * s);
  auto an = a.node();
  return a.tape().make(std::move(out), an->requires_grad, [an, s](Node<T>& self) {
    auto* g = detail::grad_of(an);
    for (std::size_t i = 0; i < g->size(); ++i) g->data()[i] += static_cast<T>(s * self.grad.data()[i]);
  });
}

/// 1x1 sum of all entries.
template <class T>
Var<T> sum(const Var<T>& a) {
  double s = 0.0;
  for (T x : a.value().values()) s += x;
  auto an = a.node();
  return a.tape().make(Tensor<T>::scalar(static_cast<T>(s)), an->requires_grad,
                       [an](Node<T>& self) {
                         auto* g = detail::grad_of(an);
                         const T up = self.grad.data()[0];
                         for (auto& x : g->values()) x += up;
                       });
}

template <class T>
Var<T> rowwise_softmax(const Var<T>& a) {
  const auto& A = a.value();
  Tensor<T> out(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    detail::softmax_row(A.data() + i * A.cols(), out.data() + i * A.cols(), A.cols());
  }
  auto an = a.node();
  return a.tape().make(std::move(out), an->requires_grad, [an](Node<T>& self) {
    auto* g = detail::grad_of(an);
    const auto& Y = self.own;
    const auto& G = self.grad;
    for (std::size_t i = 0; i < Y.rows(); ++i) {
      double d = 0.0;
      for (std::size_t j = 0; j < Y.cols(); ++j) d += static_cast<double>(G(i, j)) * Y(i, j);
      for (std::size_t j = 0; j < Y.cols(); ++j) {
        (*g)(i, j) += static_cast<T>(Y(i, j) * (G(i, j) - d));
      }
    }
  });
}

/// Elementwise natural log; inputs must be positive.
template <class T>
Var<T> log(const Var<T>& a) {
  Tensor<T> out = a.value();
  for (auto& x : out.values()) {
    if (!(x > T(0))) throw NumericError("log: non-positive input");
    x = std::log(x);
  }
  auto an = a.node();
  return a.tape().make(std::move(out), an->requires_grad, [an](Node<T>& self) {
    auto* g = detail::grad_of(an);
    const auto& X = an->value();
    for (std::size_t i = 0; i < g->size(); ++i) g->data()[i] += self.grad.data()[i] / X.data()[i];
  });
}

/// Mean of rows [begin, end) as a 1xN row.
template <class T>
Var<T> mean_rows(const Var<T>& a, std::size_t begin, std::size_t end) {
  const auto& A = a.value();
  if (begin >= end || end > A.rows()) {
    throw ShapeError("mean_rows: empty or out-of-range row span [" + std::to_string(begin) +
                     ", " + std::to_string(end) + ") of " + A.shape_str());
  }
  const std::size_t N = A.cols();
  const double inv = 1.0 / static_cast<double>(end - begin);
  std::vector<double> acc(N, 0.0);
  for (std::size_t i = begin; i < end; ++i) {
    for (std::size_t j = 0; j < N; ++j) acc[j] += A(i, j);
  }
  Tensor<T> out(1, N);
  for (std::size_t j = 0; j < N; ++j) out(0, j) = static_cast<T>(acc[j] * inv);
  auto an = a.node();
  return a.tape().make(std::move(out), an->requires_grad,
                       [an, begin, end, inv](Node<T>& self) {
                         auto* g = detail::grad_of(an);
                         for (std::size_t i = begin; i < end; ++i) {
                           for (std::size_t j = 0; j < g->cols(); ++j) {
                             (*g)(i, j) += static_cast<T>(self.grad(0, j) * inv);
                           }
                         }
                       });
}

/// Row s of the output is the mean of rows [offsets[s], offsets[s+1]).
template <class T>
Var<T> segment_mean(const Var<T>& a, std::vector<std::size_t> offsets) {
  const auto& A = a.value();
  if (offsets.size() < 2 || offsets.back() > A.rows()) {
    throw ShapeError("segment_mean: bad offsets for " + A.shape_str());
  }
  const std::size_t S = offsets.size() - 1, N = A.cols();
  Tensor<T> out(S, N);
  std::vector<double> acc(N);
  for (std::size_t s = 0; s < S; ++s) {
    if (offsets[s] >= offsets[s + 1]) throw ShapeError("segment_mean: empty segment");
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) {
      for (std::size_t j = 0; j < N; ++j) acc[j] += A(i, j);
    }
    const double inv = 1.0 / static_cast<double>(offsets[s + 1] - offsets[s]);
    for (std::size_t j = 0; j < N; ++j) out(s, j) = static_cast<T>(acc[j] * inv);
  }
  auto an = a.node();
  return a.tape().make(std::move(out), an->requires_grad,
                       [an, offsets = std::move(offsets)](Node<T>& self) {
                         auto* g = detail::grad_of(an);
                         for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
                           const double inv = 1.0 / static_cast<double>(offsets[s + 1] - offsets[s]);
                           for (std::size_t i = offsets[s]; i < offsets[s + 1]; ++i) {
                             for (std::size_t j = 0; j < g->cols(); ++j) {
                               (*g)(i, j) += static_cast<T>(self.grad(s, j) * inv);
                             }
                           }
                         }
                       });
}

/// Each row divided by its L2 norm; all-zero rows stay zero.
template <class T>
Var<T> l2_normalize_rows(const Var<T>& a) {
  const auto& A = a.value();
  Tensor<T> out(A.rows(), A.cols());
  std::vector<double> norms(A.rows());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double sq = 0.0;
    for (T x : A.row(i)) sq += static_cast<double>(x) * x;
    norms[i] = std::sqrt(sq);
    if (!std::isfinite(norms[i])) {
      // Non-finite input stays visible downstream instead of becoming a zero row.
      for (auto& y : out.row(i)) y = std::numeric_limits<T>::quiet_NaN();
    } else if (norms[i] > 0.0) {
      for (std::size_t j = 0; j < A.cols(); ++j) out(i, j) = static_cast<T>(A(i, j) / norms[i]);
    }
  }
  auto an = a.node();
  return a.tape().make(std::move(out), an->requires_grad,
                       [an, norms = std::move(norms)](Node<T>& self) {
                         auto* g = detail::grad_of(an);
                         const auto& Y = self.own;
                         const auto& G = self.grad;
                         for (std::size_t i = 0; i < Y.rows(); ++i) {
                           if (norms[i] == 0.0) continue;
                           double d = 0.0;
                           for (std::size_t j = 0; j < Y.cols(); ++j) d += static_cast<double>(Y(i, j)) * G(i, j);
                           for (std::size_t j = 0; j < Y.cols(); ++j) {
                             (*g)(i, j) += static_cast<T>((G(i, j) - Y(i, j) * d) / norms[i]);
                           }
                         }
                       });
}

/// softmax(q k^T / sqrt(d)) v for q(MxD), k(LxD), v(LxE).
template <class T>
Var<T> scaled_dot_attention(const Var<T>& q, const Var<T>& k, const Var<T>& v) {
  detail::same_tape(q, k, "scaled_dot_attention");
  detail::same_tape(q, v, "scaled_dot_attention");
  const auto& Q = q.value();
  const auto& K = k.value();
  const auto& V = v.value();
  if (Q.cols() != K.cols()) detail::shape_fail("scaled_dot_attention(q,k)", Q.shape_str(), K.shape_str());
  if (K.rows() != V.rows()) detail::shape_fail("scaled_dot_attention(k,v)", K.shape_str(), V.shape_str());
  const std::size_t M = Q.rows(), D = Q.cols(), L = K.rows(), E = V.cols();
  const double s = 1.0 / std::sqrt(static_cast<double>(D));

  Tensor<T> scores(M, L);
  detail::gemm_nt(M, L, D, Q.data(), K.data(), scores.data());
  Tensor<T> attn(M, L);
  for (std::size_t i = 0; i < M; ++i) {
    detail::softmax_row(scores.data() + i * L, attn.data() + i * L, L, s);
  }
  Tensor<T> out(M, E);
  detail::gemm_nn(M, E, L, attn.data(), V.data(), out.data());

  auto qn = q.node(), kn = k.node(), vn = v.node();
  const bool need = qn->requires_grad || kn->requires_grad || vn->requires_grad;
  return q.tape().make(
      std::move(out), need,
      [qn, kn, vn, attn = std::move(attn), M, D, L, E, s](Node<T>& self) {
        const auto& G = self.grad;
        if (auto* gv = detail::grad_of(vn)) {
          detail::gemm_tn(L, E, M, attn.data(), G.data(), gv->data());
        }
        auto* gq = detail::grad_of(qn);
        auto* gk = detail::grad_of(kn);
        if (gq == nullptr && gk == nullptr) return;
        // dA = G V^T, then softmax backward, then the 1/sqrt(d) scale.
        Tensor<T> dA(M, L);
        detail::gemm_nt(M, L, E, G.data(), vn->value().data(), dA.data());
        Tensor<T> dS(M, L);
        for (std::size_t i = 0; i < M; ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < L; ++j) dot += static_cast<double>(dA(i, j)) * attn(i, j);
          for (std::size_t j = 0; j < L; ++j) dS(i, j) = static_cast<T>(attn(i, j) * (dA(i, j) - dot));
        }
        if (gq != nullptr) detail::gemm_nn(M, D, L, dS.data(), kn->value().data(), gq->data(), s);
        if (gk != nullptr) detail::gemm_tn(L, D, M, dS.data(), qn->value().data(), gk->data(), s);
      });
}

/// Rows of `table` picked by `ids` (repeats allowed).
template <class T>
Var<T> embedding_lookup(const Var<T>& table, std::vector<std::uint32_t> ids) {
  const auto& W = table.value();
  Tensor<T> out(ids.size(), W.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= W.rows()) {
      throw ShapeError("embedding_lookup: id " + std::to_string(ids[i]) +
                       " outside table " + W.shape_str());
    }
    std::copy(W.row(ids[i]).begin(), W.row(ids[i]).end(), out.row(i).begin());
  }
  auto tn = table.node();
  return table.tape().make(std::move(out), tn->requires_grad,
                           [tn, ids = std::move(ids)](Node<T>& self) {
                             auto* g = detail::grad_of(tn);
                             for (std::size_t i = 0; i < ids.size(); ++i) {
                               auto dst = g->row(ids[i]);
                               auto src = self.grad.row(i);
                               for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
                             }
                           });
}

template <class T>
Var<T> gather_rows(const Var<T>& a, std::vector<std::uint32_t> ids) {
  return embedding_lookup(a, std::move(ids));
}

template <class T>
Var<T> slice_rows(const Var<T>& a, std::size_t begin, std::size_t end) {
  const auto& A = a.value();
  if (begin > end || end > A.rows()) {
    throw ShapeError("slice_rows: bad range for " + A.shape_str());
  }
  Tensor<T> out(end - begin, A.cols());
  std::copy(A.data() + begin * A.cols(), A.data() + end * A.cols(), out.data());
  auto an = a.node();
  return a.tape().make(std::move(out), an->requires_grad, [an, begin](Node<T>& self) {
    auto* g = detail::grad_of(an);
    T* dst = g->data() + begin * g->cols();
    for (std::size_t i = 0; i < self.grad.size(); ++i) dst[i] += self.grad.data()[i];
  });
}

/// Vertical concatenation; all parts share a column count.
template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const std::size_t N = parts.front().cols();
  std::size_t rows = 0;
  bool need = false;
  for (const auto& p : parts) {
    detail::same_tape(parts.front(), p, "concat_rows");
    if (p.cols() != N) detail::shape_fail("concat_rows", parts.front().value().shape_str(), p.value().shape_str());
    rows += p.rows();
    need |= p.requires_grad();
  }
  Tensor<T> out(rows, N);
  std::vector<std::shared_ptr<Node<T>>> nodes;
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy(p.value().data(), p.value().data() + p.value().size(), out.data() + at * N);
    at += p.rows();
    nodes.push_back(p.node());
  }
  return parts.front().tape().make(std::move(out), need,
                                   [nodes = std::move(nodes)](Node<T>& self) {
                                     std::size_t off = 0;
                                     for (const auto& n : nodes) {
                                       const std::size_t cnt = n->value().size();
                                       if (auto* g = detail::grad_of(n)) {
                                         for (std::size_t i = 0; i < cnt; ++i) g->data()[i] += self.grad.data()[off + i];
                                       }
                                       off += cnt;
                                     }
                                   });
}

/// Rows with mask[i] != 0 are replaced by `fill` (1xN).
template <class T>
Var<T> dropout_rows(const Var<T>& x, std::vector<std::uint8_t> mask, const Var<T>& fill) {
  detail::same_tape(x, fill, "dropout_rows");
  const auto& X = x.value();
  const auto& F = fill.value();
  if (F.rows() != 1 || F.cols() != X.cols()) detail::shape_fail("dropout_rows", X.shape_str(), F.shape_str());
  if (mask.size() != X.rows()) throw ShapeError("dropout_rows: mask length does not match rows");
  Tensor<T> out = X;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    if (mask[i] != 0) std::copy(F.data(), F.data() + F.cols(), out.row(i).begin());
  }
  auto xn = x.node(), fn = fill.node();
  return x.tape().make(std::move(out), xn->requires_grad || fn->requires_grad,
                       [xn, fn, mask = std::move(mask)](Node<T>& self) {
                         auto* gx = detail::grad_of(xn);
                         auto* gf = detail::grad_of(fn);
                         for (std::size_t i = 0; i < mask.size(); ++i) {
                           auto src = self.grad.row(i);
                           if (mask[i] != 0) {
                             if (gf == nullptr) continue;
                             for (std::size_t j = 0; j < src.size(); ++j) (*gf)(0, j) += src[j];
                           } else if (gx != nullptr) {
                             auto dst = gx->row(i);
                             for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
                           }
                         }
                       });
}

}  // namespace cde::ag
