#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace kgalign {

namespace detail {
inline std::atomic<std::size_t>& max_threads_setting() {
  static std::atomic<std::size_t> value{1};
  return value;
}
}  // namespace detail

/// Caps worker threads used by scoring and mining. 0 means hardware concurrency.
inline void set_max_threads(std::size_t n) {
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  detail::max_threads_setting().store(n);
}

inline std::size_t max_threads() { return detail::max_threads_setting().load(); }

/// Runs fn(i) for i in [0, n). Each index must write only its own output slot,
/// which keeps results independent of the thread count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min(max_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
}

}  // namespace kgalign
