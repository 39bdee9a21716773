#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace pfhom {

/// Run fn(0) ... fn(n-1) on `workers` threads. Indices are claimed from an
/// atomic counter, so work distribution varies between runs but callers that
/// store results by index stay deterministic.
inline void parallel_for(std::uint64_t n, int workers,
                         const std::function<void(std::uint64_t)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto body = [&] {
    for (;;) {
      std::uint64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  int nt = std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), n);
  pool.reserve(nt);
  for (int t = 0; t < nt; ++t) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace pfhom
