// Benchmark: OpenMP kernels against the serial reference path. Covers the
// three batch workloads: ray tracing, grid stencils, matrix assembly.

#include <chrono>
#include <cstdio>

#include "twistray/inversion.hpp"
#include "twistray/lambda.hpp"
#include "twistray/parallel.hpp"
#include "twistray/pestov.hpp"
#include "twistray/rng.hpp"

using namespace twistray;

namespace {

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <class F>
double timed(F&& f) {
    const double t0 = now_ms();
    f();
    return now_ms() - t0;
}

}  // namespace

int main() {
    const Chart chart(ExprField::parse("0.2*sin(x)*cos(y)"),
                      BoundaryComponent::circle(0, 0, 1.0, true),
                      BoundaryComponent::circle(0, 0, 0.5, false));
    const auto lambda = lambda_expr("0.3 + 0.15*cos(theta)");

    std::printf("%-28s %12s %12s %8s\n", "kernel", "serial[ms]", "parallel[ms]", "speedup");

    // batch ray tracing
    {
        const int n = 4000;
        std::vector<double> out(n);
        auto run = [&] {
            Rng base(1);
            parallel_for(n, [&](std::size_t i) {
                Rng rng = base.stream(i);
                const double a = rng.uniform(0, 6.2831853);
                const PhasePoint s{0.92 * std::cos(a), 0.92 * std::sin(a),
                                   rng.uniform(0, 6.2831853)};
                out[i] = trace_broken_ray(chart, *lambda, s).total_time;
            });
        };
        set_threads(1);
        const double ts = timed(run);
        const auto ref = out;
        set_threads(0);
        const double tp = timed(run);
        for (int i = 0; i < n; ++i) {
            if (out[i] != ref[i]) {
                std::printf("ray batch: MISMATCH vs serial reference at %d\n", i);
                return 1;
            }
        }
        std::printf("%-28s %12.1f %12.1f %8.2f\n", "broken-ray batch (4000)", ts, tp, ts / tp);
    }

    // grid stencils
    {
        GridSpec gs;
        gs.nx = gs.ny = gs.ntheta = 64;
        const SMGrid grid(chart, gs);
        const auto u = lambda_expr("sin(x)*cos(theta) + y*y");
        const GridFn us = sample(grid, *u);
        GridFn out;
        auto run = [&] { out = apply_field(grid, chart, *lambda, FrameVec::F, us); };
        set_threads(1);
        const double ts = timed(run);
        const auto ref = out;
        set_threads(0);
        const double tp = timed(run);
        if (out != ref) {
            std::printf("apply_field: MISMATCH vs serial reference\n");
            return 1;
        }
        std::printf("%-28s %12.1f %12.1f %8.2f\n", "frame stencil 64^3", ts, tp, ts / tp);
    }

    // forward-system assembly
    {
        GridSpec gs;
        gs.nx = gs.ny = 64;
        gs.ntheta = 8;
        const SMGrid grid(chart, gs);
        BasisSpec basis;
        basis.r0 = 0.5;
        basis.r1 = 1.0;
        Eigen::MatrixXd ser, par;
        auto run = [&](Eigen::MatrixXd& dst) {
            dst = assemble(chart, *lambda, basis, RayFan{30, 24, 0.05}, grid).A;
        };
        set_threads(1);
        const double ts = timed([&] { run(ser); });
        set_threads(0);
        const double tp = timed([&] { run(par); });
        if ((ser - par).lpNorm<Eigen::Infinity>() != 0.0) {
            std::printf("assemble: MISMATCH vs serial reference\n");
            return 1;
        }
        std::printf("%-28s %12.1f %12.1f %8.2f\n", "assemble 720 rays x 75", ts, tp, ts / tp);
    }

    set_threads(0);
    std::printf("all parallel kernels match the serial reference bitwise\n");
    return 0;
}
