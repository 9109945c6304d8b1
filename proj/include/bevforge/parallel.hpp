#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bevforge {

// Runs fn(i) for i in [0, n) on up to `jobs` threads.  Work is split into
// contiguous static chunks, so results are deterministic as long as fn(i)
// writes only to its own slot -- every call site in this library keeps that
// contract, which is what makes --jobs 1 and --jobs 8 byte-identical.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  if (n == 0) return;
  if (jobs < 1) jobs = 1;
  if (jobs > n) jobs = n;
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    // Chunk w covers [w*n/jobs, (w+1)*n/jobs); sizes differ by at most one.
    std::size_t begin = w * n / jobs;
    std::size_t end = (w + 1) * n / jobs;
    workers.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& worker : workers) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace bevforge
