#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace paramine {

// Runs fn(begin, end) over a partition of [0, n) on up to `threads` workers.
// Each index lands in exactly one chunk and chunks are contiguous, so callers
// that write result slot i from index i get deterministic output regardless
// of thread count. Reductions must still be done serially by the caller.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(threads < 1 ? 1 : static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace paramine
