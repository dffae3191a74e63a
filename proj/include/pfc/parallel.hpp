#pragma once

#include <atomic>
#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pfc {

/// Process-wide switch between the OpenMP kernels and the serial reference
/// path. Tests flip it to compare both; the default is parallel when built
/// with OpenMP.
inline std::atomic<bool>& parallel_flag() {
  static std::atomic<bool> enabled{true};
  return enabled;
}
inline bool parallel_enabled() { return parallel_flag().load(std::memory_order_relaxed); }
inline void set_parallel_enabled(bool on) { parallel_flag().store(on, std::memory_order_relaxed); }

/// Data-parallel map: f(i) must write only state owned by index i, so the
/// serial and parallel paths produce bit-identical results.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
#ifdef _OPENMP
  if (parallel_enabled() && n > 1) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < nn; ++i) f(static_cast<std::size_t>(i));
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) f(i);
}

inline int worker_count() {
#ifdef _OPENMP
  return parallel_enabled() ? omp_get_max_threads() : 1;
#else
  return 1;
#endif
}

}  // namespace pfc
