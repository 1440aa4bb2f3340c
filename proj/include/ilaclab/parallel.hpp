#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <type_traits>
#include <vector>

namespace ilac {

/// Evaluates fn(0), ..., fn(count - 1) on up to `workers` threads and returns
/// the results in index order. Tasks are claimed from a shared counter, but
/// every result lands in its own slot, so the output never depends on the
/// schedule. After a failure no new tasks start; indices are claimed in
/// increasing order, so every index below the failing one has run and the
/// rethrown exception is always the one of the lowest failing index.
template <class F>
auto parallel_map(std::size_t count, std::size_t workers, F&& fn) -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using T = std::invoke_result_t<F&, std::size_t>;
  std::vector<T> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) break;
      try {
        results[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed.store(true);
      }
    }
  };

  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), std::max<std::size_t>(count, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

}  // namespace ilac
