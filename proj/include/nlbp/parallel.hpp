#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nlbp {

namespace detail {
inline std::atomic<int>& worker_budget_slot() {
  static std::atomic<int> budget{0};
  return budget;
}
}  // namespace detail

/// Global worker budget. 0 means "not set yet"; the first query resolves it
/// from NLBP_WORKERS or hardware_concurrency.
inline int worker_budget() {
  int b = detail::worker_budget_slot().load(std::memory_order_relaxed);
  if (b > 0) return b;
  if (const char* env = std::getenv("NLBP_WORKERS")) {
    int v = std::atoi(env);
    if (v > 0) {
      detail::worker_budget_slot().store(v, std::memory_order_relaxed);
      return v;
    }
  }
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  b = hw > 0 ? hw : 1;
  detail::worker_budget_slot().store(b, std::memory_order_relaxed);
  return b;
}

inline void set_worker_budget(int workers) {
  detail::worker_budget_slot().store(workers > 0 ? workers : 1,
                                     std::memory_order_relaxed);
}

/// Runs fn(begin, end) over [0, n) split into contiguous chunks, one per
/// worker. Deterministic partition; callers own any result merging and must
/// merge in chunk order if order matters.
template <typename Fn>
void parallel_chunks(std::int64_t n, Fn&& fn, int workers = 0) {
  if (n <= 0) return;
  if (workers <= 0) workers = worker_budget();
  workers = static_cast<int>(std::min<std::int64_t>(workers, n));
  if (workers <= 1) {
    fn(std::int64_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::int64_t chunk = (n + workers - 1) / workers;
  for (int t = 0; t < workers; ++t) {
    std::int64_t begin = t * chunk;
    std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
    if (begin >= end) break;
    threads.emplace_back([&, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Elementwise variant: fn(i) for i in [0, n).
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn, int workers = 0) {
  parallel_chunks(
      n,
      [&](std::int64_t begin, std::int64_t end) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
      },
      workers);
}

}  // namespace nlbp
