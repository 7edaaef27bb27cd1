#pragma once

#include <cstdint>

namespace ood3d {

// Worker count for the OpenMP kernels. OOD3D_THREADS caps it; read once
// per process.
int worker_count();

namespace detail {
void parallel_for_impl(std::int64_t n, void* ctx, void (*body)(void*, std::int64_t));
}

// Static-schedule parallel loop over [0, n). Every kernel built on this
// writes to disjoint slots only, so results never depend on the thread
// count; the serial reference paths exist to prove that in tests.
template <typename F>
void parallel_for(std::int64_t n, F&& f) {
  auto thunk = [](void* ctx, std::int64_t i) { (*static_cast<F*>(ctx))(i); };
  detail::parallel_for_impl(n, &f, thunk);
}

}  // namespace ood3d
