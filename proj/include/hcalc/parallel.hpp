#pragma once

// Index-parallel map with results kept in index order, so any reduction done
// by the caller is independent of the thread count.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace hcalc {

namespace detail {
inline std::atomic<int>& thread_setting() {
  static std::atomic<int> n{0};
  return n;
}
}  // namespace detail

/// 0 restores the default (HCALC_THREADS, else 1).
inline void set_threads(int n) { detail::thread_setting() = std::max(0, n); }

inline int thread_count() {
  const int n = detail::thread_setting();
  if (n > 0) return n;
  if (const char* env = std::getenv("HCALC_THREADS")) {
    const int e = std::atoi(env);
    if (e > 0) return e;
  }
  return 1;
}

/// Calls fn(i) for i in [0, count) and returns the results in index order.
/// If any call throws, the exception from the smallest failing index is
/// rethrown.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, F&& fn) {
  std::vector<R> out(count);
  const std::size_t threads =
      std::min<std::size_t>(static_cast<std::size_t>(thread_count()), count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (count + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(count, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          out[i] = fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (std::size_t t = 0; t < threads; ++t)
    if (errors[t]) std::rethrow_exception(errors[t]);
  return out;
}

}  // namespace hcalc
