// Chunked thread-pool-free parallel loop with deterministic, index-ordered
// chunk layout so reductions can be combined reproducibly.

#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace ddporo {

// Thread count actually used: a positive request wins, otherwise the
// DDPORO_THREADS environment variable, otherwise 1.
inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char *env = std::getenv("DDPORO_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

// Splits [0, n) into n_threads contiguous chunks and runs fn(chunk, begin,
// end) for each. Chunk boundaries depend only on (n, n_threads), so per-chunk
// partial results combined in chunk order are reproducible.
inline void parallel_for_chunks(int n, int n_threads,
                                const std::function<void(int, int, int)> &fn) {
  if (n <= 0) return;
  const int workers = n_threads < 1 ? 1 : (n_threads > n ? n : n_threads);
  if (workers == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int c = 0; c < workers; ++c) {
    const int begin = static_cast<int>(static_cast<long long>(n) * c / workers);
    const int end = static_cast<int>(static_cast<long long>(n) * (c + 1) / workers);
    pool.emplace_back([&fn, c, begin, end] { fn(c, begin, end); });
  }
  for (auto &t : pool) t.join();
}

}  // namespace ddporo
