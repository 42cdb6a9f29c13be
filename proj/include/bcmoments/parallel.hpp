#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bcmoments {

struct ExecutionOptions {
  unsigned threads = 1;  // 0 means hardware concurrency
};

inline unsigned resolve_threads(unsigned requested) {
  if (requested == 0) {
    requested = std::max(1u, std::thread::hardware_concurrency());
  }
  return requested;
}

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunks are
/// disjoint, so bodies that write only to their own slots produce the same
/// result for any thread count. The first exception thrown is rethrown.
template <typename Body>
void parallel_for(std::size_t count, const ExecutionOptions& options, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(resolve_threads(options.threads), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// out[i] = fn(i) for i in [0, count), computed in parallel.
template <typename T, typename Fn>
std::vector<T> parallel_generate(std::size_t count, const ExecutionOptions& options, Fn&& fn) {
  std::vector<T> out(count);
  parallel_for(count, options, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = fn(i);
  });
  return out;
}

}  // namespace bcmoments
