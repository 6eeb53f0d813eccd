#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace paramine {

// Deterministic random source. All draws are implemented here on top of the
// raw mt19937_64 stream instead of <random> distributions, so a given seed
// produces the same sequence on every standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  // Standard normal via Box-Muller. No state is cached between calls, so the
  // draw count per call is fixed (two raw draws).
  double gaussian() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Uniform direction on the unit sphere S^{d-1}.
  std::vector<double> unit_vector(std::size_t dim) {
    std::vector<double> v(dim);
    while (true) {
      double norm_sq = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        v[i] = gaussian();
        norm_sq += v[i] * v[i];
      }
      if (norm_sq > 1e-24) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& x : v) x *= inv;
        return v;
      }
    }
  }

  // Fisher-Yates shuffle using uniform_int, independent of std::shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace paramine
