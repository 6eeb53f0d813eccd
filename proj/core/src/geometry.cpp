#include "paramine/geometry.hpp"

#include <cmath>

#include "paramine/error.hpp"
#include "paramine/parallel.hpp"

namespace paramine {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatchError(a.size(), b.size());
  long double acc = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<long double>(a[i]) * static_cast<long double>(b[i]);
  }
  return static_cast<double>(acc);
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Embedding l2_normalize(std::span<const double> v) {
  if (v.size() < 2) {
    throw DimensionMismatchError("l2_normalize needs dimension >= 2, got " +
                                 std::to_string(v.size()));
  }
  const double n = norm(v);
  if (n < 1e-12) throw ZeroVectorError();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return Embedding(std::move(out));
}

double cosine(const Embedding& u, const Embedding& v) {
  return clamp_unit(dot(u.span(), v.span()));
}

double angle(const Embedding& u, const Embedding& v) { return std::acos(cosine(u, v)); }

SimilarityMatrix pairwise_cosine(std::span<const Embedding> anchors,
                                 std::span<const Embedding> candidates,
                                 int threads) {
  if (anchors.empty() || candidates.empty()) {
    throw EmptyInputError("pairwise_cosine needs non-empty anchor and candidate lists");
  }
  const std::size_t d = anchors[0].dim();
  for (const auto& a : anchors) {
    if (a.dim() != d) throw DimensionMismatchError(a.dim(), d);
  }
  for (const auto& c : candidates) {
    if (c.dim() != d) throw DimensionMismatchError(c.dim(), d);
  }

  SimilarityMatrix m;
  m.rows = anchors.size();
  m.cols = candidates.size();
  m.entries.resize(m.rows * m.cols);
  parallel_for(m.rows, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < m.cols; ++j) {
        m.entries[i * m.cols + j] = cosine(anchors[i], candidates[j]);
      }
    }
  });
  return m;
}

}  // namespace paramine
