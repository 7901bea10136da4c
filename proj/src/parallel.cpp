#include "twistray/parallel.hpp"

namespace twistray {

namespace {
int g_threads = 0;
#if defined(_OPENMP)
const int g_default_threads = omp_get_max_threads();
#endif
}

void set_threads(int n) {
    g_threads = n;
#if defined(_OPENMP)
    omp_set_num_threads(n > 0 ? n : g_default_threads);
#endif
}

int thread_count() {
#if defined(_OPENMP)
    if (g_threads == 1) return 1;
    return omp_get_max_threads();
#else
    return 1;
#endif
}

bool parallel_enabled() { return g_threads != 1; }

double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = v[0];
        for (std::size_t i = 1; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace twistray
