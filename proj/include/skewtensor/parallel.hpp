#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace skewtensor {

// Worker cap: SKEWTENSOR_THREADS if set (>= 1), else min(hardware, 8).
inline int worker_count() {
  if (const char* env = std::getenv("SKEWTENSOR_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::min(hw == 0 ? 1u : hw, 8u));
}

// Static block partition of [0, n). fn(i) must only touch slot i of shared
// state, so results never depend on the worker count.
inline void parallel_for(long long n, const std::function<void(long long)>& fn) {
  const int workers = std::min<long long>(worker_count(), n);
  if (workers <= 1) {
    for (long long i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  const long long chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long long lo = w * chunk, hi = std::min(n, lo + chunk);
    pool.emplace_back([lo, hi, &fn] {
      for (long long i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Sum with a fixed pairwise reduction tree: the value is a function of the
// inputs alone, independent of threading or traversal order.
inline double pairwise_sum(const double* p, long long n) {
  if (n <= 8) {
    double s = 0.0;
    for (long long i = 0; i < n; ++i) s += p[i];
    return s;
  }
  const long long h = n / 2;
  return pairwise_sum(p, h) + pairwise_sum(p + h, n - h);
}

inline double pairwise_mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : pairwise_sum(v.data(), static_cast<long long>(v.size())) /
                               static_cast<double>(v.size());
}

}  // namespace skewtensor
