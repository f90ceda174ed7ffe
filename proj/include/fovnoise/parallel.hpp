#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace fovnoise {

/// Worker count used by parallel_rows. 0 selects hardware concurrency.
void set_thread_count(unsigned count);
unsigned thread_count();

/// Runs fn(begin, end) over disjoint contiguous chunks of [0, n). Every index is
/// visited exactly once and chunks never share indices, so results that are
/// written per index are independent of the thread count.
template <typename Fn>
void parallel_rows(std::ptrdiff_t n, Fn&& fn) {
  const auto workers = static_cast<std::ptrdiff_t>(thread_count());
  if (workers <= 1 || n < 2 * workers) {
    fn(std::ptrdiff_t{0}, n);
    return;
  }
  const std::ptrdiff_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::ptrdiff_t begin = 0; begin < n; begin += chunk) {
    const std::ptrdiff_t end = std::min(n, begin + chunk);
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
}

}  // namespace fovnoise
