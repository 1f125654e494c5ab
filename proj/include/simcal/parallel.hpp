#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace simcal {

inline unsigned default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1u : hc;
}

// Run fn(i) for i in [0, count). Work is split into fixed-size chunks claimed
// by an atomic cursor, so every i runs exactly once and callers that
// accumulate per-index results indexed by i get output independent of the
// worker count.
template <typename Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  if (count == 0) return;
  if (workers <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  constexpr std::size_t kChunk = 64;
  std::atomic<std::size_t> cursor{0};
  auto work = [&] {
    for (;;) {
      const std::size_t begin = cursor.fetch_add(kChunk);
      if (begin >= count) return;
      const std::size_t end = std::min(begin + kChunk, count);
      for (std::size_t i = begin; i < end; ++i) fn(i);
    }
  };
  std::vector<std::thread> pool;
  const unsigned nthreads = static_cast<unsigned>(
      std::min<std::size_t>(workers, (count + kChunk - 1) / kChunk));
  pool.reserve(nthreads - 1);
  for (unsigned t = 1; t < nthreads; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
}

}  // namespace simcal
