#include "twistray/admissibility.hpp"

#include <algorithm>
#include <cmath>

#include "twistray/parallel.hpp"
#include "twistray/rng.hpp"

namespace twistray {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

AdmissibilityReport check_admissible(const Chart& chart, const LambdaField& lambda,
                                     const AdmissibilityOptions& opts) {
    AdmissibilityReport rep;

    // (1) strict convexity of the emitter against the twist, checked on the
    // two antipodal tangent directions per boundary point
    {
        const auto& comp = chart.component(BoundaryId::Emitter);
        double margin = 1e300;
        Witness w;
        for (int m = 0; m < opts.n_boundary; ++m) {
            const double p = kTwoPi * m / opts.n_boundary;
            const Vec2 q = comp.point(p);
            const double psi = normal_angle(chart, BoundaryId::Emitter, q.x, q.y);
            for (double side : {0.5, -0.5}) {
                const double th = reduce_angle(psi + side * 3.14159265358979323846);
                const PhasePoint s{q.x, q.y, th};
                const Vec2 v = chart.velocity(s);
                const Vec2 nu = boundary_normal(chart, BoundaryId::Emitter, q.x, q.y);
                const double sff = second_fundamental_form(chart, BoundaryId::Emitter, q.x, q.y, v);
                const double twist =
                    lambda.value(s) * chart.metric_dot(q.x, q.y, rot90(v), nu);
                const double val = sff - twist;
                if (val < margin) {
                    margin = val;
                    w = {q.x, q.y, th, val};
                }
            }
        }
        rep.emitter_convexity_margin = margin;
        rep.emitter_witness = w;
        rep.emitter_ok = margin > 0.0;
    }

    // (2) reflector curvature: (kappa_lambda)_e + (eta_lambda)_e over fibers
    {
        const auto& comp = chart.component(BoundaryId::Reflector);
        double worst = -1e300;
        Witness w;
        for (int m = 0; m < opts.n_boundary; ++m) {
            const double p = kTwoPi * m / opts.n_boundary;
            const Vec2 q = comp.point(p);
            const double psi = normal_angle(chart, BoundaryId::Reflector, q.x, q.y);
            for (int k = 0; k < opts.n_fiber; ++k) {
                const double th = reduce_angle(psi + (k + 0.5) * kTwoPi / opts.n_fiber);
                const PhasePoint s{q.x, q.y, th};
                const PhasePoint sr{q.x, q.y, reflect_angle(psi, th)};
                const auto a = signed_lambda_curvatures(chart, lambda, BoundaryId::Reflector, s);
                const auto b = signed_lambda_curvatures(chart, lambda, BoundaryId::Reflector, sr);
                const double val = 0.5 * ((a.kappa_lambda + a.eta_lambda) +
                                          (b.kappa_lambda + b.eta_lambda));
                if (val > worst) {
                    worst = val;
                    w = {q.x, q.y, th, val};
                }
            }
        }
        rep.reflector_max_curvature = worst;
        rep.reflector_witness = w;
        rep.reflector_ok = worst <= 0.0;
    }

    // (3) sign of the lambda-curvature on interior samples
    {
        Rng rng = Rng(opts.seed).stream(0xC0);
        double worst = -1e300;
        Witness w;
        const auto& em = chart.component(BoundaryId::Emitter);
        const double R = em.max_radius() * 1.01;
        int found = 0;
        while (found < opts.n_interior) {
            const double x = rng.uniform(-R, R);
            const double y = rng.uniform(-R, R);
            if (!chart.inside(x, y)) continue;
            const double th = rng.uniform(0, kTwoPi);
            const double val = lambda_curvature(chart, lambda, {x, y, th});
            if (val > worst) {
                worst = val;
                w = {x, y, th, val};
            }
            ++found;
        }
        rep.max_lambda_curvature = worst;
        rep.curvature_witness = w;
        rep.curvature_ok = worst <= 0.0;
    }

    // (4) + (5) ray census from the emitter fan and interior points
    {
        const int n = opts.n_rays;
        rep.census_rays = n;
        std::vector<double> taus(n, 0.0), taus_dual(n, 0.0), second_smallest(n, 2.0);
        std::vector<int> trapped(n, 0), tangential(n, 0), refl(n, 0);
        const auto& em = chart.component(BoundaryId::Emitter);
        const double R = em.max_radius() * 1.01;
        Rng base = Rng(opts.seed).stream(0xABC);
        parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
            Rng rng = base.stream(i);
            PhasePoint start;
            if (i % 2 == 0) {
                // emitter fan
                const double p = rng.uniform(0, kTwoPi);
                const Vec2 q = em.point(p);
                const double psi = normal_angle(chart, BoundaryId::Emitter, q.x, q.y);
                start = {q.x, q.y, reduce_angle(psi + rng.uniform(-1.45, 1.45))};
            } else {
                double x, y;
                do {
                    x = rng.uniform(-R, R);
                    y = rng.uniform(-R, R);
                } while (!chart.inside(x, y));
                start = {x, y, rng.uniform(0, kTwoPi)};
            }
            const ExitTimes et = exit_times(chart, lambda, start, opts.trace);
            taus[i] = et.tau;
            taus_dual[i] = et.tau_dual;
            const BrokenRay ray = trace_broken_ray(chart, lambda, start, opts.trace);
            refl[i] = static_cast<int>(ray.events.size());
            trapped[i] =
                (et.status == RayStatus::Trapped || et.status_dual == RayStatus::Trapped) ? 1 : 0;
            tangential[i] = (et.status == RayStatus::Tangential ||
                             et.status_dual == RayStatus::Tangential)
                                ? 1
                                : 0;
            // second-smallest |mu| among the ray's reflections limits a
            if (ray.events.size() >= 2) {
                double s1 = 2.0, s2 = 2.0;  // smallest, second smallest
                for (const auto& ev : ray.events) {
                    const double m = std::abs(ev.normal_component);
                    if (m < s1) {
                        s2 = s1;
                        s1 = m;
                    } else if (m < s2) {
                        s2 = m;
                    }
                }
                second_smallest[i] = s2;
            }
        });
        double a_max = 1.0;
        for (int i = 0; i < n; ++i) {
            rep.max_tau = std::max(rep.max_tau, taus[i]);
            rep.max_tau_dual = std::max(rep.max_tau_dual, taus_dual[i]);
            rep.trapped_count += trapped[i];
            rep.tangential_count += tangential[i];
            rep.max_reflections = std::max(rep.max_reflections, refl[i]);
            a_max = std::min(a_max, second_smallest[i]);
        }
        rep.transversality_a = a_max;
        rep.nontrapping_ok = rep.trapped_count == 0;
        rep.transversal_ok = a_max > 0.0;
    }

    rep.admissible = rep.emitter_ok && rep.reflector_ok && rep.curvature_ok &&
                     rep.nontrapping_ok && rep.transversal_ok;
    return rep;
}

double dual_admissibility_crosscheck(const Chart& chart, const LambdaField& lambda,
                                     int n_samples, std::uint64_t seed) {
    const auto ld = [&] {
        struct D final : LambdaField {
            const LambdaField& b;
            explicit D(const LambdaField& bb) : b(bb) {}
            double value(double x, double y, double t) const override {
                return -b.value(x, y, t + 3.14159265358979323846);
            }
            SMJet jet(double x, double y, double t) const override {
                SMJet j = b.jet(x, y, t + 3.14159265358979323846);
                j.v = -j.v; j.x = -j.x; j.y = -j.y;
                j.th = -j.th; j.xth = -j.xth; j.yth = -j.yth; j.thth = -j.thth;
                return j;
            }
        };
        return D(lambda);
    }();

    Rng rng(seed);
    const auto& comp = chart.component(BoundaryId::Reflector);
    double worst = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const Vec2 q = comp.point(rng.uniform(0, kTwoPi));
        const double psi = normal_angle(chart, BoundaryId::Reflector, q.x, q.y);
        const double th = rng.uniform(0, kTwoPi);
        auto even_sum = [&](const LambdaField& lf, double theta) {
            const PhasePoint s{q.x, q.y, theta};
            const PhasePoint sr{q.x, q.y, reflect_angle(psi, theta)};
            const auto a = signed_lambda_curvatures(chart, lf, BoundaryId::Reflector, s);
            const auto b = signed_lambda_curvatures(chart, lf, BoundaryId::Reflector, sr);
            return 0.5 * (a.kappa_lambda + a.eta_lambda + b.kappa_lambda + b.eta_lambda);
        };
        const double lhs = even_sum(ld, th);
        const double rhs = even_sum(lambda, reduce_angle(th + 3.14159265358979323846));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

int convexity_sign_crosscheck(const Chart& chart, const LambdaField& lambda, int n_samples,
                              std::uint64_t seed) {
    Rng rng(seed);
    const auto& comp = chart.component(BoundaryId::Emitter);
    int disagreements = 0;
    const double delta = 1e-3;
    for (int i = 0; i < n_samples; ++i) {
        const Vec2 q = comp.point(rng.uniform(0, kTwoPi));
        const double psi = normal_angle(chart, BoundaryId::Emitter, q.x, q.y);
        const double side = (i % 2 == 0) ? 0.5 : -0.5;
        const PhasePoint s{q.x, q.y, reduce_angle(psi + side * 3.14159265358979323846)};
        const Vec2 v = chart.velocity(s);
        const Vec2 nu = boundary_normal(chart, BoundaryId::Emitter, q.x, q.y);
        const double margin =
            second_fundamental_form(chart, BoundaryId::Emitter, q.x, q.y, v) -
            lambda.value(s) * chart.metric_dot(q.x, q.y, rot90(v), nu);
        // second difference of rho_E along the free flow
        const auto fwd = integrate_free(chart, lambda, s, delta, delta / 4);
        const auto bwd = integrate_free(chart, lambda, s, -delta, delta / 4);
        const auto& rho = comp.rho();
        const double r0 = rho.value(s.x, s.y);
        const double rp = rho.value(fwd.back().state.x, fwd.back().state.y);
        const double rm = rho.value(bwd.back().state.x, bwd.back().state.y);
        const double d2 = (rp - 2 * r0 + rm) / (delta * delta);
        if ((margin > 0) != (d2 < 0)) ++disagreements;
    }
    return disagreements;
}

}  // namespace twistray
