#pragma once

#include <cstddef>
#include <span>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace twistray {

// Global switch: 0 = library default (OpenMP decides), 1 = serial reference.
// The serial path is kept as the reference implementation; every parallel
// kernel must produce byte-identical results against it.
void set_threads(int n);
int thread_count();
bool parallel_enabled();

// Data-parallel loop over [0, n). The body must be pure per index (it may
// write only to slot i of preallocated output), which makes the result
// independent of scheduling.
template <class F>
void parallel_for(std::size_t n, F&& body) {
#if defined(_OPENMP)
    if (parallel_enabled() && n > 1) {
#pragma omp parallel for schedule(dynamic, 8)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            body(static_cast<std::size_t>(i));
        }
        return;
    }
#endif
    for (std::size_t i = 0; i < n; ++i) body(i);
}

// Fixed-order pairwise tree sum. Used for every floating-point reduction in
// reports so that totals do not depend on thread count or schedule.
double pairwise_sum(std::span<const double> v);

// Convenience: evaluate term(i) into a buffer in parallel, then tree-sum.
template <class F>
double parallel_sum(std::size_t n, F&& term) {
    std::vector<double> buf(n);
    parallel_for(n, [&](std::size_t i) { buf[i] = term(i); });
    return pairwise_sum(buf);
}

}  // namespace twistray
