#pragma once

// Chunked parallel-for over independent chains. Work is partitioned by index,
// so results land in preallocated slots and never depend on the thread count.

#include <algorithm>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace alps {

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

inline void parallel_for(long n, int threads, const std::function<void(long)>& body) {
  threads = std::min<long>(resolve_threads(threads), std::max<long>(n, 1));
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t) {
    const long lo = n * t / threads, hi = n * (t + 1) / threads;
    pool.emplace_back([&, lo, hi] {
      try {
        for (long i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace alps
