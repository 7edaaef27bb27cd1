#include "ood3d/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ood3d {

int worker_count() {
  static const int cached = [] {
#ifdef _OPENMP
    int n = omp_get_max_threads();
#else
    int n = 1;
#endif
    if (const char* env = std::getenv("OOD3D_THREADS")) {
      const int cap = std::atoi(env);
      if (cap >= 1 && cap < n) n = cap;
    }
    return n;
  }();
  return cached;
}

namespace detail {

void parallel_for_impl(std::int64_t n, void* ctx, void (*body)(void*, std::int64_t)) {
  if (n <= 0) return;
#ifdef _OPENMP
  const int threads = worker_count();
  if (threads > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < n; ++i) {
      body(ctx, i);
    }
    return;
  }
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    body(ctx, i);
  }
}

}  // namespace detail

}  // namespace ood3d
