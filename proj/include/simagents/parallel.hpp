#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace simagents {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. If several calls
/// throw, the exception from the lowest index is rethrown, so failures are
/// reported the same way regardless of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  if (n == 0) return;
  jobs = std::clamp<std::size_t>(jobs, 1, n);
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = n;
  std::exception_ptr err;
  {
    std::vector<std::jthread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(err_mutex);
            if (i < err_index) {
              err_index = i;
              err = std::current_exception();
            }
          }
        }
      });
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace simagents
