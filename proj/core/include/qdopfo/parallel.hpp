#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace qdopfo {

// static block partition; results must be written to disjoint slots
inline void parallel_for(std::size_t count, int threads,
                         const std::function<void(std::size_t, std::size_t)>& body) {
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw > 0 ? static_cast<int>(hw) : 1;
  }
  if (threads == 1 || count <= 1) {
    body(0, count);
    return;
  }
  const std::size_t nthreads =
      std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  const std::size_t chunk = (count + nthreads - 1) / nthreads;
  for (std::size_t k = 0; k < nthreads; ++k) {
    const std::size_t lo = k * chunk;
    const std::size_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace qdopfo
