#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace elosslab {

/// Worker count used by parallel_for. ELOSSLAB_THREADS caps it; defaults to
/// the hardware concurrency (at least 1).
inline int worker_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw < 1) hw = 1;
  if (const char* env = std::getenv("ELOSSLAB_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) hw = std::min(hw, cap);
  }
  return hw;
}

/// Static block partition of [begin, end). Each index must write only its own
/// preallocated slot; with per-index derived seeds the result is identical for
/// any worker count.
template <typename F>
void parallel_for(int begin, int end, F&& f, int workers = -1) {
  const int n = end - begin;
  if (n <= 0) return;
  if (workers < 1) workers = worker_count();
  workers = std::min(workers, n);
  if (workers == 1) {
    for (int i = begin; i < end; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int lo = begin + w * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &f] {
      for (int i = lo; i < hi; ++i) f(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace elosslab
