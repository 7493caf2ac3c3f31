#include "cde/eval/analysis.hpp"

#include <cmath>
#include <set>
#include <string>

#include "cde/error.hpp"
#include "cde/surrogate/embedder.hpp"

namespace cde::eval {

double batch_hardness(std::span<const std::size_t> batch, const EmbeddingMatrix& docs,
                      const EmbeddingMatrix& queries) {
  if (batch.size() < 2) throw InputError("batch_hardness: need at least two pairs");
  double total = 0.0;
  for (std::size_t i : batch) {
    double row = 0.0;
    for (std::size_t j : batch) {
      if (i == j) continue;
      row += surrogate::surrogate_score(queries.row(i), docs.row(j));
    }
    total += row / static_cast<double>(batch.size() - 1);
  }
  return total / static_cast<double>(batch.size());
}

double idf_divergence(const data::Vocab& a, const data::Vocab& b, DivergenceKind kind) {
  if (a.terms().empty() || b.terms().empty()) throw InputError("idf_divergence: empty vocabulary");
  std::set<std::string> terms(a.terms().begin(), a.terms().end());
  terms.insert(b.terms().begin(), b.terms().end());
  bool same = true;
  double dot = 0.0, na = 0.0, nb = 0.0, l1 = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& t : terms) {
    const double x = surrogate::idf(a, t);
    const double y = surrogate::idf(b, t);
    same = same && x == y;
    dot += x * y;
    na += x * x;
    nb += y * y;
    l1 += std::abs(x - y);
    sa += x;
    sb += y;
  }
  if (same) return 0.0;
  if (kind == DivergenceKind::l1) return l1 / (sa + sb);
  return std::max(0.0, 1.0 - dot / std::sqrt(na * nb));
}

}  // namespace cde::eval
