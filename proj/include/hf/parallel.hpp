// Deterministic data-parallel helper.  Work is split into a fixed chunk grid
// that depends only on the problem size, workers execute disjoint chunks, and
// any reductions are performed serially in chunk order afterwards -- so
// results are bitwise independent of the worker count (HETEROFIELD_THREADS).
#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace hf {

inline int worker_count() {
  if (const char* env = std::getenv("HETEROFIELD_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Invokes fn(chunk_index, begin, end) over [0, n) split into chunks whose
// layout depends only on n.  fn must write to disjoint state per chunk.
inline void parallel_chunks(int n, const std::function<void(int, int, int)>& fn) {
  if (n <= 0) return;
  const int chunk = std::max(1, (n + 63) / 64);  // at most 64 chunks
  const int n_chunks = (n + chunk - 1) / chunk;
  const int workers = std::min(worker_count(), n_chunks);
  if (workers <= 1) {
    for (int c = 0; c < n_chunks; ++c)
      fn(c, c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int c = w; c < n_chunks; c += workers)
        fn(c, c * chunk, std::min(n, (c + 1) * chunk));
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace hf
