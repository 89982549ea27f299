#pragma once

#include "newfluence/common.hpp"

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace newfluence {

inline int hardware_threads() {
  const unsigned count = std::thread::hardware_concurrency();
  return count == 0 ? 1 : static_cast<int>(count);
}

// requested <= 0 means "use every available core".
inline int resolve_thread_count(int requested) {
  return requested > 0 ? requested : hardware_threads();
}

// Runs fn(0) ... fn(count - 1) across up to `threads` workers with dynamic
// work stealing via a shared counter. The first exception thrown by any
// worker stops the remaining work and is rethrown after all workers join.
inline void parallel_for(Index count, int threads, const std::function<void(Index)>& fn) {
  if (count <= 0) return;
  const int workers =
      static_cast<int>(std::min<Index>(resolve_thread_count(threads), count));
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<Index> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (!failed.load(std::memory_order_relaxed)) {
      const Index i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
  }  // jthreads join here
  if (error) std::rethrow_exception(error);
}

}  // namespace newfluence
