#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace vss::parallel {

namespace detail {
inline std::atomic<int>& override_threads() {
  static std::atomic<int> n{0};
  return n;
}
}  // namespace detail

/// Upper bound on data-parallel width. Reads VSS_THREADS unless
/// set_max_threads() was called with a positive value.
inline int max_threads() {
  if (int n = detail::override_threads().load(); n > 0) return n;
  if (const char* env = std::getenv("VSS_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Pass 0 to fall back to VSS_THREADS / hardware concurrency.
inline void set_max_threads(int n) { detail::override_threads().store(n); }

/// Calls fn(row) for every row in [0, rows). Rows are handed out in
/// contiguous bands; fn must only write outputs owned by its row.
template <typename Fn>
void for_rows(int rows, Fn&& fn) {
  const int threads = std::min(max_threads(), rows);
  if (threads <= 1) {
    for (int r = 0; r < rows; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  constexpr int kBand = 4;
  auto worker = [&] {
    try {
      for (;;) {
        const int begin = next.fetch_add(kBand);
        if (begin >= rows) break;
        const int end = std::min(rows, begin + kBand);
        for (int r = begin; r < end; ++r) fn(r);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(rows);
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads - 1);
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace vss::parallel
