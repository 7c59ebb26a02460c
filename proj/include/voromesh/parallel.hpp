#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace voromesh {

// 0 = all cores, otherwise the requested count.
inline int resolve_threads(int requested) {
#ifdef _OPENMP
    if (requested <= 0) return omp_get_max_threads();
    return requested;
#else
    (void)requested;
    return 1;
#endif
}

// Static-schedule parallel loop. Bodies must not throw. Callers that need
// bit-determinism write per-index slots here and reduce sequentially after;
// with that pattern results do not depend on the thread count.
template <class F>
void parallel_for(std::size_t n, int threads, F&& body) {
    int t = resolve_threads(threads);
#ifdef _OPENMP
    if (t > 1 && n > 1) {
#pragma omp parallel for schedule(static) num_threads(t)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    (void)t;
    for (std::size_t i = 0; i < n; ++i) body(i);
}

} // namespace voromesh
