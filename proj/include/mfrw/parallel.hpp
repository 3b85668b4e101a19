#pragma once

#include <cstdlib>
#include <cstddef>
#include <string>
#include <thread>
#include <vector>

namespace mfrw {

/// Worker count: MFRW_THREADS env var when set, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("MFRW_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

/// Runs fn(i) for i in [0, n). Each index writes only its own outputs, so the
/// result is identical for any worker count; reductions over the results must
/// be done by the caller in fixed index order.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned workers = worker_count();
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const unsigned use = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  pool.reserve(use);
  for (unsigned w = 0; w < use; ++w) {
    pool.emplace_back([&fn, n, w, use] {
      for (std::size_t i = w; i < n; i += use) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace mfrw
