#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace bpr {

// Splits [0, n) into `shards` contiguous ranges and runs fn(begin, end) on
// each, one thread per extra shard. Shard boundaries depend only on n and
// shards, so callers that write disjoint outputs stay deterministic.
template <typename Fn>
void parallel_for_shards(std::size_t n, std::size_t shards, Fn&& fn) {
  shards = std::clamp<std::size_t>(shards, 1, std::max<std::size_t>(n, 1));
  if (shards == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + shards - 1) / shards;
  std::vector<std::jthread> workers;
  workers.reserve(shards - 1);
  for (std::size_t s = 1; s < shards; ++s) {
    const std::size_t begin = std::min(n, s * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    if (begin < end) workers.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::size_t{0}, std::min(n, chunk));
}

}  // namespace bpr
