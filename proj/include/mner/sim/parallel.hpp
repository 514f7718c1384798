#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mner::sim {

/// Runs `body(block, begin, end)` for fixed-size blocks of [0, total) on up to
/// `workers` threads and returns the per-block results in block order. The
/// partition does not depend on `workers`, so an in-order fold of the result
/// is bitwise identical for any worker count.
template <class Body>
auto run_blocks(std::size_t total, std::size_t block_size, unsigned workers, Body body) {
  using Result = decltype(body(std::size_t{}, std::size_t{}, std::size_t{}));
  const std::size_t n_blocks = total == 0 ? 0 : (total + block_size - 1) / block_size;
  std::vector<Result> results(n_blocks);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        const std::size_t begin = b * block_size;
        results[b] = body(b, begin, std::min(total, begin + block_size));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_blocks;
        return;
      }
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(workers, 1u), std::max<std::size_t>(n_blocks, 1)));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

/// Default worker count: hardware concurrency, at least 1.
inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

}  // namespace mner::sim
