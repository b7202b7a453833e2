#pragma once

// Index-parallel map with results stored by index, so any later reduction
// can run in a fixed order and stay bit-reproducible across thread counts.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dqw {

namespace detail {
inline std::atomic<unsigned>& default_threads_slot() {
  static std::atomic<unsigned> n{0};
  return n;
}
}  // namespace detail

/// 0 selects std::thread::hardware_concurrency().
inline void set_default_threads(unsigned n) { detail::default_threads_slot() = n; }

inline unsigned resolve_threads(unsigned requested) {
  unsigned n = requested != 0 ? requested : detail::default_threads_slot().load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

template <class T, class F>
std::vector<T> parallel_map(std::size_t count, F&& f, unsigned threads = 0) {
  std::vector<T> out(count);
  const unsigned n = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(count, 1));
  if (n <= 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(n);
  for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace dqw
