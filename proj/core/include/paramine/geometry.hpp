#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace paramine {

// A point on (or near) the unit hypersphere. l2_normalize() is the blessed
// constructor; code that builds one by hand is responsible for the norm.
struct Embedding {
  std::vector<double> values;

  Embedding() = default;
  explicit Embedding(std::vector<double> v) : values(std::move(v)) {}

  std::size_t dim() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  std::span<const double> span() const { return values; }
};

// Row-major matrix of cosine similarities, rows = anchors, cols = candidates.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> entries;

  double at(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }
};

// Dot product accumulated in long double, ascending index order. Both choices
// are contractual: they pin the result bit-for-bit across runs.
double dot(std::span<const double> a, std::span<const double> b);

double norm(std::span<const double> v);

// Scales v to unit Euclidean norm. Throws ZeroVectorError for norm < 1e-12
// and DimensionMismatchError for dim < 2.
Embedding l2_normalize(std::span<const double> v);

// Clamped dot product of two unit vectors, in [-1, 1].
double cosine(const Embedding& u, const Embedding& v);

// arccos of the clamped cosine, in [0, pi].
double angle(const Embedding& u, const Embedding& v);

// entry (i, j) == cosine(anchors[i], candidates[j]), bit-for-bit.
SimilarityMatrix pairwise_cosine(std::span<const Embedding> anchors,
                                 std::span<const Embedding> candidates,
                                 int threads = 1);

inline double clamp_unit(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace paramine
