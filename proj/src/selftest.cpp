#include "twistray/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "twistray/admissibility.hpp"
#include "twistray/errors.hpp"
#include "twistray/inversion.hpp"
#include "twistray/io.hpp"
#include "twistray/jacobi.hpp"
#include "twistray/parallel.hpp"
#include "twistray/pestov.hpp"
#include "twistray/rng.hpp"
#include "twistray/transform.hpp"

namespace twistray {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

Chart flat_annulus() {
    return Chart(zero_field(), BoundaryComponent::circle(0, 0, 1.0, true),
                 BoundaryComponent::circle(0, 0, 0.5, false));
}

Chart curved_annulus(const char* phi = "0.5*(x^2+y^2)") {
    return Chart(ExprField::parse(phi), BoundaryComponent::circle(0, 0, 1.0, true),
                 BoundaryComponent::circle(0, 0, 0.5, false));
}

std::string fmt(double v) { return format_double(v); }

// 1. integrator order on the constant-twist circle
CheckResult check_integrator_order() {
    CheckResult res{"integrator-order", false, ""};
    const Chart c(zero_field(), BoundaryComponent::circle(0, 0, 10.0, true),
                  BoundaryComponent::circle(6, 6, 0.5, false));
    const auto l = lambda_magnetic(constant_field(1.0));
    auto sup_error = [&](double h) {
        TraceOptions opts;
        opts.step = h;
        opts.max_time = kTwoPi;
        const BrokenRay ray = trace_broken_ray(c, *l, {0, 0, 0}, opts);
        double err = 0;
        for (const auto& s : ray.segments[0]) {
            err = std::max(err, std::hypot(s.state.x - std::sin(s.t),
                                           s.state.y - (1.0 - std::cos(s.t))));
        }
        return err;
    };
    const double ratio = sup_error(0.2) / sup_error(0.1);
    TraceOptions opts;
    opts.step = 1e-3;
    opts.max_time = kTwoPi;
    const BrokenRay ray = trace_broken_ray(c, *l, {0, 0, 0}, opts);
    const double endpoint = std::hypot(ray.back().state.x, ray.back().state.y);
    res.pass = ratio >= 12.0 && ratio <= 20.0 && endpoint <= 1e-8;
    res.detail = "halving ratio " + fmt(ratio) + ", endpoint error " + fmt(endpoint) +
                 " at h = 1e-3";
    return res;
}

// 2. dual-flow law on a curved chart with a nonconstant twist
CheckResult check_dual_flow() {
    CheckResult res{"dual-flow-law", false, ""};
    const Chart c = curved_annulus("0.3*sin(x)*cos(y)");
    const auto l = lambda_expr("0.4*sin(x)*sin(y) + 0.2*sin(theta)");
    Rng rng(2026);
    std::vector<double> devs(100);
    parallel_for(devs.size(), [&](std::size_t i) {
        Rng r = rng.stream(i);
        double x, y;
        do {
            x = r.uniform(-0.95, 0.95);
            y = r.uniform(-0.95, 0.95);
        } while (!c.inside(x, y) || std::hypot(x, y) < 0.55);
        devs[i] = check_time_reversal(c, *l, {x, y, r.uniform(0, kTwoPi)}, 0.5);
    });
    const double worst = *std::max_element(devs.begin(), devs.end());
    res.pass = worst <= 1e-6;
    res.detail = "max deviation " + fmt(worst) + " over 100 starts";
    return res;
}

// 3. Jacobi propagation against the finite-difference flow differential
CheckResult check_jacobi_oracle() {
    CheckResult res{"jacobi-oracle", false, ""};
    struct Config {
        Chart chart;
        LambdaPtr lambda;
        std::uint64_t seed;
    };
    std::vector<Config> configs;
    configs.push_back({flat_annulus(), lambda_magnetic(ExprField::parse("0.4 + 0.2*x")), 11});
    configs.push_back({flat_annulus(), lambda_expr("0.5 + 0.2*cos(theta)"), 12});
    configs.push_back({curved_annulus("0.2*sin(x)*cos(y)"), lambda_zero(), 13});

    int tested = 0;
    double worst = 0.0;
    for (const auto& cfg : configs) {
        Rng rng(cfg.seed);
        int found = 0;
        for (int attempt = 0; attempt < 2000 && found < 34; ++attempt) {
            const double a = rng.uniform(0, kTwoPi);
            const PhasePoint start{0.92 * std::cos(a), 0.92 * std::sin(a),
                                   rng.uniform(0, kTwoPi)};
            BrokenRay ray;
            try {
                ray = trace_broken_ray(cfg.chart, *cfg.lambda, start);
            } catch (const Error&) {
                continue;
            }
            if (ray.status != RayStatus::Exited || ray.events.empty() || ray.events.size() > 2) {
                continue;
            }
            bool transversal = true;
            for (const auto& ev : ray.events) {
                if (std::abs(ev.normal_component) < 0.15) transversal = false;
            }
            if (!transversal) continue;

            const JacobiFrame f0{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            const JacobiPath path = propagate_frame(cfg.chart, *cfg.lambda, ray, f0);
            if (path.beta_singular) continue;
            std::vector<double> times;
            for (std::size_t si = 0; si < path.t.size(); ++si) {
                const auto& ts = path.t[si];
                for (std::size_t i = 5; i + 5 < ts.size(); i += ts.size() / 8 + 1) {
                    times.push_back(ts[i]);
                }
            }
            FdJacobi fd;
            try {
                fd = flow_differential_fd(cfg.chart, *cfg.lambda, start, path.initial(), times);
            } catch (const TraceError&) {
                continue;
            }
            double scale = 1.0;
            std::vector<JacobiVector> expected;
            for (double t : times) {
                for (std::size_t si = 0; si < path.t.size(); ++si) {
                    for (std::size_t i = 0; i < path.t[si].size(); ++i) {
                        if (path.t[si][i] == t) expected.push_back(path.vectors[si][i]);
                    }
                }
            }
            for (const auto& jv : fd.values) {
                scale = std::max(scale, std::sqrt(dot(jv.J, jv.J) + dot(jv.DJ, jv.DJ)));
            }
            for (std::size_t k = 0; k < times.size(); ++k) {
                const Vec2 dj = fd.values[k].J - expected[k].J;
                const Vec2 dd = fd.values[k].DJ - expected[k].DJ;
                worst = std::max(worst, std::sqrt(dot(dj, dj) + dot(dd, dd)) / scale);
            }
            ++found;
            ++tested;
        }
    }
    res.pass = tested >= 100 && worst <= 1e-4;
    res.detail = "max relative deviation " + fmt(worst) + " over " + std::to_string(tested) +
                 " broken rays";
    return res;
}

// 4. exact-form annihilation over emitter rays
CheckResult check_gauge_annihilation() {
    CheckResult res{"gauge-annihilation", false, ""};
    const Chart c = curved_annulus("0.2*sin(x+y)");
    const auto l = lambda_expr("0.3 + 0.15*cos(theta)*sin(x)");
    const auto h = std::make_shared<ExprField>(
        Expr::parse("(1 - x^2 - y^2)/2 * (1 + 0.5*sin(2*x)*cos(y))"));
    const Integrand dh = Integrand::exact_form(*h);
    Rng rng(4);
    double worst = 0.0, hsup = 0.0;
    int used = 0;
    for (int i = 0; i < 600 && used < 200; ++i) {
        const double p = rng.uniform(0, kTwoPi);
        const Vec2 q = c.component(BoundaryId::Emitter).point(p);
        const double psi = normal_angle(c, BoundaryId::Emitter, q.x, q.y);
        const PhasePoint start{q.x, q.y, reduce_angle(psi + rng.uniform(-1.45, 1.45))};
        double v;
        try {
            v = broken_transform(c, *l, dh, start);
        } catch (const TraceError&) {
            continue;
        }
        worst = std::max(worst, std::abs(v));
        hsup = std::max(hsup, std::abs(h->value(q.x, q.y)));
        ++used;
    }
    res.pass = used == 200 && worst <= 1e-6 * (1.0 + hsup);
    res.detail = "max |I(dh)| = " + fmt(worst) + " over 200 emitter rays";
    return res;
}

// 5. energy identity, evenness machinery and the boundary reduction
CheckResult check_pestov() {
    CheckResult res{"pestov-identity", false, ""};
    struct Cfg {
        Chart chart;
        LambdaPtr lambda;
    };
    std::vector<Cfg> cfgs;
    cfgs.push_back({flat_annulus(), lambda_zero()});
    cfgs.push_back({curved_annulus(), lambda_expr("0.3 + 0.4*sin(x)*cos(theta)")});
    const char* fns[] = {
        "sin(x)*cos(y) + 0.3*cos(theta)",
        "x^2 - y^2 + 0.5*sin(theta)*x",
        "exp(0.3*x)*sin(theta + y)",
    };
    bool ok = true;
    double worst_res = 0.0, worst_order = 1e9;
    for (const auto& cfg : cfgs) {
        GridSpec s32, s64;
        s32.nx = s32.ny = s32.ntheta = 32;
        s64.nx = s64.ny = s64.ntheta = 64;
        const SMGrid g32(cfg.chart, s32);
        const SMGrid g64(cfg.chart, s64);
        for (const char* fn : fns) {
            const auto u = lambda_expr(fn);
            const PestovReport r32 = pestov_residual(g32, cfg.chart, *cfg.lambda, *u);
            const PestovReport r64 = pestov_residual(g64, cfg.chart, *cfg.lambda, *u);
            worst_res = std::max(worst_res, r64.rel_residual);
            ok = ok && r64.rel_residual <= 2e-2;
            if (r64.rel_residual > 1e-12) {
                const double order = std::log2(r32.rel_residual / r64.rel_residual);
                worst_order = std::min(worst_order, order);
                ok = ok && order >= 1.5;
            }
        }
    }

    // even/odd orthogonality and the reduced boundary identity
    const Chart& cc = cfgs[1].chart;
    const auto lc = lambda_expr("0.25 + 0.15*sin(theta - x)");
    GridSpec s48;
    s48.nx = s48.ny = s48.ntheta = 48;
    const SMGrid g(cc, s48);
    const auto ueven = lambda_expr(
        "(0.5 + 0.3*x) + (0.7 - 0.2*y)*((x*cos(theta)+y*sin(theta))^2/(x^2+y^2))");
    const RingData em = ring_data_analytic(g.ring(BoundaryId::Emitter), cc, *lc, *ueven);
    const RingData re = ring_data_analytic(g.ring(BoundaryId::Reflector), cc, *lc, *ueven);
    const auto rep = boundary_decomposition(g, cc, *lc, em, re);
    ok = ok && rep.orthogonality_defect <= 1e-12;
    const double red_scale = std::max({1.0, std::abs(rep.lhs), std::abs(rep.rhs_reduced)});
    const double red_diff = std::abs(rep.lhs - rep.rhs_reduced) / red_scale;
    ok = ok && red_diff <= 2e-2;

    res.pass = ok;
    res.detail = "max residual " + fmt(worst_res) + " at 64^3, min order " +
                 (worst_order > 1e8 ? std::string("exact") : fmt(worst_order)) +
                 ", orthogonality " + fmt(rep.orthogonality_defect) + ", reduction gap " +
                 fmt(red_diff);
    return res;
}

// 6. curvature and boundary-curvature dual laws
CheckResult check_curvature_identities() {
    CheckResult res{"curvature-dual-laws", false, ""};
    const Chart c = curved_annulus();
    const auto l = lambda_expr("0.4*sin(x)*cos(theta) + 0.2*x*y + 0.1*sin(2*theta + y)");
    const auto ld = dual(l);
    Rng rng(6);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double r = rng.uniform(0.55, 0.95);
        const double a = rng.uniform(0, kTwoPi);
        const double th = rng.uniform(0, kTwoPi);
        const PhasePoint s{r * std::cos(a), r * std::sin(a), th};
        const PhasePoint srev{s.x, s.y, reduce_angle(th + kPi)};
        worst = std::max(worst,
                         std::abs(lambda_curvature(c, *ld, s) - lambda_curvature(c, *l, srev)));
    }
    for (int i = 0; i < 1000; ++i) {
        const Vec2 q = c.component(BoundaryId::Reflector).point(rng.uniform(0, kTwoPi));
        const double th = rng.uniform(0, kTwoPi);
        const double psi = normal_angle(c, BoundaryId::Reflector, q.x, q.y);
        const PhasePoint s{q.x, q.y, th};
        const PhasePoint srev{q.x, q.y, reduce_angle(th + kPi)};
        const PhasePoint srho{q.x, q.y, reflect_angle(psi, th)};
        const auto a1 = signed_lambda_curvatures(c, *ld, BoundaryId::Reflector, s);
        const auto a2 = signed_lambda_curvatures(c, *l, BoundaryId::Reflector, srev);
        worst = std::max(worst, std::abs(a1.kappa_lambda - a2.kappa_lambda));
        worst = std::max(worst, std::abs(a1.eta_lambda - a2.eta_lambda));
        // composition law through a rho-composed twist
        struct Composed final : LambdaField {
            using LambdaField::value;
            using LambdaField::jet;
            const LambdaField& base;
            double psi;
            Composed(const LambdaField& b, double a) : base(b), psi(a) {}
            double value(double x, double y, double t) const override {
                return base.value(x, y, reflect_angle(psi, t));
            }
            SMJet jet(double x, double y, double t) const override {
                SMJet j = base.jet(x, y, reflect_angle(psi, t));
                j.th = -j.th;
                j.xth = -j.xth;
                j.yth = -j.yth;
                return j;
            }
        } lrho{*l, psi};
        const auto b1 = signed_lambda_curvatures(c, lrho, BoundaryId::Reflector, s);
        const auto b2 = signed_lambda_curvatures(c, *l, BoundaryId::Reflector, srho);
        worst = std::max(worst, std::abs(b1.kappa_lambda - b2.kappa_lambda));
        // even-part law
        struct EvenL final : LambdaField {
            using LambdaField::value;
            using LambdaField::jet;
            const LambdaField& base;
            double psi;
            EvenL(const LambdaField& b, double a) : base(b), psi(a) {}
            double value(double x, double y, double t) const override {
                return 0.5 * (base.value(x, y, t) + base.value(x, y, reflect_angle(psi, t)));
            }
            SMJet jet(double x, double y, double t) const override {
                const SMJet j1 = base.jet(x, y, t);
                const SMJet j2 = base.jet(x, y, reflect_angle(psi, t));
                SMJet j;
                j.v = 0.5 * (j1.v + j2.v);
                j.x = 0.5 * (j1.x + j2.x);
                j.y = 0.5 * (j1.y + j2.y);
                j.th = 0.5 * (j1.th - j2.th);
                j.xth = 0.5 * (j1.xth - j2.xth);
                j.yth = 0.5 * (j1.yth - j2.yth);
                j.thth = 0.5 * (j1.thth + j2.thth);
                return j;
            }
        } le{*l, psi};
        const auto c1 = signed_lambda_curvatures(c, le, BoundaryId::Reflector, s);
        const auto c2a = signed_lambda_curvatures(c, *l, BoundaryId::Reflector, s);
        const auto c2b = signed_lambda_curvatures(c, *l, BoundaryId::Reflector, srho);
        worst = std::max(worst,
                         std::abs(c1.kappa_lambda -
                                  0.5 * (c2a.kappa_lambda + c2b.kappa_lambda)));
    }
    res.pass = worst <= 1e-8;
    res.detail = "max identity defect " + fmt(worst) + " over 1000 samples each";
    return res;
}

// 7. admissibility regression on the flat annulus
CheckResult check_admissibility_regression() {
    CheckResult res{"admissibility-regression", false, ""};
    const Chart c = flat_annulus();
    AdmissibilityOptions opts;
    opts.n_rays = 10000;
    const AdmissibilityReport good = check_admissible(c, *lambda_zero(), opts);
    const AdmissibilityReport bad =
        check_admissible(c, *lambda_magnetic(constant_field(0.5)), opts);
    const bool ok = good.admissible && std::abs(good.emitter_convexity_margin - 1.0) <= 1e-9 &&
                    std::abs(good.reflector_max_curvature + 2.0) <= 1e-9 &&
                    good.trapped_count == 0 && good.max_reflections <= 1 && !bad.admissible &&
                    !bad.curvature_ok && std::abs(bad.max_lambda_curvature - 0.25) <= 1e-12;
    res.pass = ok;
    res.detail = "margin " + fmt(good.emitter_convexity_margin) + ", reflector " +
                 fmt(good.reflector_max_curvature) + ", trapped " +
                 std::to_string(good.trapped_count) + ", twist 0.5 rejected with K_lambda = " +
                 fmt(bad.max_lambda_curvature);
    return res;
}

// 8. kernel structure and reconstruction of the discretized transform
CheckResult check_inversion_demo() {
    CheckResult res{"uniqueness-demo", false, ""};
    const Chart c = flat_annulus();
    const auto l = lambda_zero();
    GridSpec gs;
    gs.nx = gs.ny = 96;
    gs.ntheta = 8;
    const SMGrid grid(c, gs);
    BasisSpec basis;
    basis.r0 = 0.5;
    basis.r1 = 1.0;
    const ForwardSystem sys = assemble(c, *l, basis, RayFan{50, 40, 0.05}, grid);
    const KernelReport kr = kernel_analysis(sys);
    const Integrand truth{ExprField::parse("exp(-((sqrt(x^2+y^2) - 0.75)/0.35)^2)"), nullptr,
                          nullptr};
    const Eigen::VectorXd data = synthesize_data(c, *l, sys, truth);
    const Reconstruction rec = reconstruct(sys, data, {});
    const ErrorReport err = reconstruction_errors(c, grid, sys, rec, truth);
    res.pass = sys.A.rows() == 2000 && basis.m0() == 25 && kr.max_gauge_rayleigh_rel <= 1e-5 &&
               kr.margin >= 1e-3 && err.f0_rel <= 1e-2 && err.alpha_rel <= 1e-2;
    res.detail = "N = " + std::to_string(sys.A.rows()) + ", margin " + fmt(kr.margin) +
                 ", gauge rayleigh " + fmt(kr.max_gauge_rayleigh_rel) + ", f0 error " +
                 fmt(err.f0_rel) + ", alpha error " + fmt(err.alpha_rel);
    return res;
}

// 9. transport equation residual and the dual relation
CheckResult check_transport() {
    CheckResult res{"transport-equation", false, ""};
    const Chart c = flat_annulus();
    const auto l = lambda_magnetic(ExprField::parse("0.3 + 0.1*x"));
    const Integrand f{ExprField::parse("0.4 + 0.2*cos(x)*y"), ExprField::parse("0.15*y"),
                      ExprField::parse("0.1 - 0.05*x")};
    Rng rng(9);
    double worst_res = 0.0, worst_defect = 0.0;
    std::vector<double> ratios;
    int used = 0;
    for (int i = 0; i < 2000 && used < 100; ++i) {
        const double r = rng.uniform(0.56, 0.94);
        const double a = rng.uniform(0, kTwoPi);
        const PhasePoint s{r * std::cos(a), r * std::sin(a), rng.uniform(0, kTwoPi)};
        double r1, r2, defect;
        try {
            r2 = transport_residual(c, *l, f, s, 1e-3);
            r1 = transport_residual(c, *l, f, s, 2e-3);
            defect = dual_relation_defect(c, *l, f, s);
        } catch (const Error&) {
            continue;
        }
        worst_res = std::max(worst_res, std::abs(r2));
        worst_defect = std::max(worst_defect, std::abs(defect));
        if (std::abs(r2) > 1e-9) ratios.push_back(std::abs(r1) / std::abs(r2));
        ++used;
    }
    std::sort(ratios.begin(), ratios.end());
    const double median_ratio = ratios.empty() ? 4.0 : ratios[ratios.size() / 2];
    res.pass = used == 100 && worst_res <= 1e-5 && median_ratio >= 3.0 && median_ratio <= 5.0 &&
               worst_defect <= 1e-6;
    res.detail = "max residual " + fmt(worst_res) + " at delta = 1e-3, median Richardson ratio " +
                 fmt(median_ratio) + ", dual defect " + fmt(worst_defect);
    return res;
}

// 10. determinism across reruns and thread counts
CheckResult check_determinism() {
    CheckResult res{"determinism", false, ""};
    const Chart c = flat_annulus();
    const auto l = lambda_magnetic(constant_field(0.3));
    const Integrand f{ExprField::parse("0.5 + 0.2*x"), nullptr, nullptr};

    auto pipeline = [&](int threads) {
        set_threads(threads);
        std::string out;
        // ray fan and sinogram
        std::vector<BrokenRay> rays;
        Rng rng(77);
        for (int i = 0; i < 64; ++i) {
            Rng rr = rng.stream(i);
            const double a = rr.uniform(0, kTwoPi);
            rays.push_back(trace_broken_ray(c, *l, {0.95 * std::cos(a), 0.95 * std::sin(a),
                                                    rr.uniform(0, kTwoPi)}));
        }
        out += rays_csv(rays);
        out += events_csv(rays);
        out += sinogram_csv(sinogram(c, *l, f, 16, 12, 0.1));
        // a small grid report
        GridSpec gs;
        gs.nx = gs.ny = gs.ntheta = 16;
        const SMGrid grid(c, gs);
        const auto u = lambda_expr("sin(x)*cos(theta) + y");
        const PestovReport pr = pestov_residual(grid, c, *l, *u);
        out += fmt(pr.lhs) + '|' + fmt(pr.rhs) + '\n';
        AdmissibilityOptions ao;
        ao.n_rays = 200;
        ao.n_interior = 500;
        ao.n_boundary = 64;
        const AdmissibilityReport ar = check_admissible(c, *l, ao);
        out += fmt(ar.max_tau) + '|' + fmt(ar.emitter_convexity_margin) + '|' +
               fmt(ar.max_lambda_curvature) + '\n';
        set_threads(0);
        return out;
    };

    const std::string serial = pipeline(1);
    const std::string parallel4 = pipeline(4);
    const std::string again = pipeline(4);
    res.pass = serial == parallel4 && parallel4 == again;
    res.detail = res.pass ? "byte-identical across reruns and 1 vs 4 threads"
                          : "outputs differ across thread counts";
    return res;
}

}  // namespace

std::vector<CheckResult> run_acceptance() {
    std::vector<CheckResult> out;
    out.push_back(check_integrator_order());
    out.push_back(check_dual_flow());
    out.push_back(check_jacobi_oracle());
    out.push_back(check_gauge_annihilation());
    out.push_back(check_pestov());
    out.push_back(check_curvature_identities());
    out.push_back(check_admissibility_regression());
    out.push_back(check_inversion_demo());
    out.push_back(check_transport());
    out.push_back(check_determinism());
    return out;
}

}  // namespace twistray
