#include "doctest.h"

#include <cmath>

#include "twistray/chart.hpp"
#include "twistray/errors.hpp"
#include "twistray/lambda.hpp"
#include "twistray/rng.hpp"
#include "twistray/transform.hpp"

using namespace twistray;

namespace {

constexpr double kPi = 3.14159265358979323846;

Chart flat_annulus(double r_in = 0.5, double r_out = 1.0) {
    return Chart(zero_field(), BoundaryComponent::circle(0, 0, r_out, true),
                 BoundaryComponent::circle(0, 0, r_in, false));
}

Chart flat_disk() {
    return Chart(zero_field(), BoundaryComponent::circle(0, 0, 1.0, true),
                 BoundaryComponent::circle(0.52, 0.52, 0.05, false));
}

Chart curved_annulus() {
    return Chart(ExprField::parse("0.2*sin(x+y)"), BoundaryComponent::circle(0, 0, 1.0, true),
                 BoundaryComponent::circle(0, 0, 0.4, false));
}

}  // namespace

TEST_CASE("transform of the constant integrand is the travel time") {
    const Chart c = flat_annulus();
    const Integrand one = Integrand::scalar(constant_field(1.0));
    Rng rng(3);
    for (int i = 0; i < 25; ++i) {
        const double p = rng.uniform(0, 2 * kPi);
        const Vec2 q = c.component(BoundaryId::Emitter).point(p);
        const double psi = normal_angle(c, BoundaryId::Emitter, q.x, q.y);
        const PhasePoint start{q.x, q.y, reduce_angle(psi + rng.uniform(-1.2, 1.2))};
        const BrokenRay ray = trace_broken_ray(c, *lambda_zero(), start);
        if (ray.status != RayStatus::Exited) continue;
        CHECK(broken_transform(c, *lambda_zero(), one, start) ==
              doctest::Approx(ray.total_time).epsilon(1e-12));
    }
}

TEST_CASE("diameter of the flat disk integrates f0 = 1 to 2") {
    const Chart c = flat_disk();
    const Integrand one = Integrand::scalar(constant_field(1.0));
    CHECK(broken_transform(c, *lambda_zero(), one, {1.0, 0.0, kPi}) ==
          doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("gauge annihilation: I(dh) = 0 for h vanishing on the emitter") {
    // h = rho_E * bump; the integral telescopes along broken rays.
    const Chart c = curved_annulus();
    const auto l = lambda_expr("0.3 + 0.15*cos(theta)*sin(x)");
    const auto h = std::make_shared<ExprField>(
        Expr::parse("(1 - x^2 - y^2)/2 * (1 + 0.5*sin(2*x)*cos(y))"));
    const Integrand dh = Integrand::exact_form(*h);
    double hsup = 0.0;
    Rng rng(5);
    double worst = 0.0;
    int used = 0;
    for (int i = 0; i < 300 && used < 200; ++i) {
        const double p = rng.uniform(0, 2 * kPi);
        const Vec2 q = c.component(BoundaryId::Emitter).point(p);
        const double psi = normal_angle(c, BoundaryId::Emitter, q.x, q.y);
        const PhasePoint start{q.x, q.y, reduce_angle(psi + rng.uniform(-1.4, 1.4))};
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
    CHECK(used == 200);
    CHECK(worst <= 1e-6 * (1.0 + hsup));
}

TEST_CASE("primitive basics") {
    const Chart c = flat_disk();
    const Integrand one = Integrand::scalar(constant_field(1.0));
    SUBCASE("outward boundary direction gives u = 0") {
        CHECK(primitive(c, *lambda_zero(), one, {1.0, 0.0, 0.0}) == 0.0);
    }
    SUBCASE("u at the center is the remaining ray length") {
        for (double th : {0.0, 1.0, 2.2, 4.4}) {
            CHECK(primitive(c, *lambda_zero(), one, {0, 0, th}) ==
                  doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("u equals If on inward boundary points") {
        const PhasePoint start{1.0, 0.0, kPi};
        CHECK(primitive(c, *lambda_zero(), one, start) ==
              broken_transform(c, *lambda_zero(), one, start));
    }
}

TEST_CASE("transport residual") {
    const Chart c = flat_disk();
    const auto l = lambda_zero();
    SUBCASE("f = 1: residual vanishes to quadrature accuracy") {
        const Integrand one = Integrand::scalar(constant_field(1.0));
        CHECK(std::abs(transport_residual(c, *l, one, {0.2, 0.1, 0.7}, 1e-3)) <= 1e-6);
    }
    SUBCASE("random smooth integrand: residual <= 1e-5 at delta = 1e-3") {
        const Integrand f{ExprField::parse("0.5 + 0.3*sin(2*x)*cos(y)"),
                          ExprField::parse("0.2*y"), ExprField::parse("0.1*x + 0.05")};
        Rng rng(7);
        double worst = 0.0;
        int used = 0;
        while (used < 100) {
            const double r = rng.uniform(0.05, 0.8);
            const double a = rng.uniform(0, 2 * kPi);
            const PhasePoint s{r * std::cos(a), r * std::sin(a), rng.uniform(0, 2 * kPi)};
            try {
                worst = std::max(worst, std::abs(transport_residual(c, *l, f, s, 1e-3)));
            } catch (const Error&) {
                continue;
            }
            ++used;
        }
        CHECK(worst <= 1e-5);
    }
    SUBCASE("Richardson: residual scales as O(delta^2)") {
        const Integrand f{ExprField::parse("0.5 + 0.3*sin(2*x)*cos(y)"),
                          ExprField::parse("0.2*y"), nullptr};
        const PhasePoint s{0.3, -0.2, 1.9};
        const double r1 = transport_residual(c, *l, f, s, 2e-3);
        const double r2 = transport_residual(c, *l, f, s, 1e-3);
        const double ratio = std::abs(r1) / std::abs(r2);
        CHECK(ratio > 3.0);
        CHECK(ratio < 5.0);
    }
}

TEST_CASE("dual relation") {
    SUBCASE("pure gauge: u(x,v) + u^-(x,-v) = 0") {
        const Chart c = curved_annulus();
        const auto l = lambda_expr("0.25 + 0.1*sin(theta)");
        const auto h = std::make_shared<ExprField>(Expr::parse("(1 - x^2 - y^2)*(0.3 + 0.1*x)"));
        const Integrand dh = Integrand::exact_form(*h);
        Rng rng(11);
        int used = 0;
        while (used < 100) {
            const double r = rng.uniform(0.5, 0.9);
            const double a = rng.uniform(0, 2 * kPi);
            const PhasePoint s{r * std::cos(a), r * std::sin(a), rng.uniform(0, 2 * kPi)};
            double u, ud;
            try {
                u = primitive(c, *l, dh, s);
                ud = dual_primitive(c, *l, dh, {s.x, s.y, reduce_angle(s.theta + kPi)});
            } catch (const TraceError&) {
                continue;
            }
            CHECK(std::abs(u + ud) <= 1e-8);
            ++used;
        }
    }
    SUBCASE("f = 1: u + u^- o r equals the full ray length") {
        const Chart c = flat_disk();
        const auto l = lambda_zero();
        const Integrand one = Integrand::scalar(constant_field(1.0));
        CHECK(std::abs(dual_relation_defect(c, *l, one, {0.2, 0.3, 2.4})) <= 1e-9);
    }
    SUBCASE("random integrand on the annulus: defect <= 1e-6") {
        const Chart c = flat_annulus();
        const auto l = lambda_magnetic(ExprField::parse("0.3 + 0.1*x"));
        const Integrand f{ExprField::parse("0.4 + 0.2*cos(x)*y"), ExprField::parse("0.15*y"),
                          ExprField::parse("0.1 - 0.05*x")};
        Rng rng(13);
        int used = 0;
        while (used < 40) {
            const double r = rng.uniform(0.55, 0.95);
            const double a = rng.uniform(0, 2 * kPi);
            const PhasePoint s{r * std::cos(a), r * std::sin(a), rng.uniform(0, 2 * kPi)};
            double d;
            try {
                d = dual_relation_defect(c, *l, f, s);
            } catch (const TraceError&) {
                continue;
            }
            CHECK(std::abs(d) <= 1e-6);
            ++used;
        }
    }
}

TEST_CASE("quadrature convergence order") {
    SUBCASE("reflection-free rays: order >= 4") {
        const Chart c = flat_disk();
        const Integrand f{ExprField::parse("exp(0.3*x)*cos(1.7*y)"), nullptr, nullptr};
        auto at = [&](double h) {
            TraceOptions opts;
            opts.step = h;
            return broken_transform(c, *lambda_zero(), f, {1.0, 0.0, kPi - 0.4}, opts);
        };
        const double ref = at(1e-4);
        const double e1 = std::abs(at(8e-3) - ref);
        const double e2 = std::abs(at(4e-3) - ref);
        CHECK(e2 < e1 / 12.0);
    }
    SUBCASE("broken rays: order >= 2") {
        const Chart c = flat_annulus();
        const Integrand f{ExprField::parse("exp(0.3*x)*cos(1.7*y)"), nullptr, nullptr};
        auto at = [&](double h) {
            TraceOptions opts;
            opts.step = h;
            return broken_transform(c, *lambda_zero(), f, {0.95, 0.1, kPi + 0.05}, opts);
        };
        const double ref = at(1e-4);
        const double e1 = std::abs(at(8e-3) - ref);
        const double e2 = std::abs(at(4e-3) - ref);
        CHECK(e2 < e1 / 3.5);
    }
}

TEST_CASE("scattering consistency: If(x,v) = I^- f~ at the reversed exit") {
    const Chart c = curved_annulus();
    const auto l = lambda_expr("0.3 + 0.1*cos(theta - x)");
    const Integrand f{ExprField::parse("0.4 + 0.2*sin(x)*y"), ExprField::parse("0.1*y"),
                      ExprField::parse("0.2 - 0.1*x")};
    Rng rng(17);
    int used = 0;
    while (used < 30) {
        const double p = rng.uniform(0, 2 * kPi);
        const Vec2 q = c.component(BoundaryId::Emitter).point(p);
        const double psi = normal_angle(c, BoundaryId::Emitter, q.x, q.y);
        const PhasePoint start{q.x, q.y, reduce_angle(psi + rng.uniform(-1.3, 1.3))};
        double lhs;
        PhasePoint exit;
        try {
            lhs = broken_transform(c, *l, f, start);
            exit = scattering_relation(c, *l, start);
        } catch (const TraceError&) {
            continue;
        }
        // dual transform of f~ from the reversed exit point
        const PhasePoint rev{exit.x, exit.y, reduce_angle(exit.theta + kPi)};
        struct DualLocal final : LambdaField {
            const LambdaField& b;
            explicit DualLocal(const LambdaField& bb) : b(bb) {}
            double value(double x, double y, double t) const override {
                return -b.value(x, y, t + kPi);
            }
            SMJet jet(double x, double y, double t) const override {
                SMJet j = b.jet(x, y, t + kPi);
                j.v = -j.v; j.x = -j.x; j.y = -j.y;
                j.th = -j.th; j.xth = -j.xth; j.yth = -j.yth; j.thth = -j.thth;
                return j;
            }
        } ld{*l};
        // f~ pairs the 1-form with -v: negate the alpha components
        double rhs;
        try {
            const Integrand freversed{f.f0, ExprField::parse("-(0.1*y)"),
                                      ExprField::parse("-(0.2 - 0.1*x)")};
            rhs = broken_transform(c, ld, freversed, rev);
        } catch (const TraceError&) {
            continue;
        }
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6).scale(1.0));
        ++used;
    }
    CHECK(used == 30);
}

TEST_CASE("pure 1-form integrands have zero fiber mean") {
    const Chart c = curved_annulus();
    const Integrand f = Integrand::one_form(ExprField::parse("0.3*x + 0.1"),
                                            ExprField::parse("0.2 - 0.4*y"));
    Rng rng(19);
    for (int i = 0; i < 50; ++i) {
        const double x = rng.uniform(-0.6, 0.6), y = rng.uniform(-0.6, 0.6);
        double mean = 0.0;
        const int n = 64;
        for (int k = 0; k < n; ++k) {
            mean += f.eval(c, {x, y, 2 * kPi * k / n});
        }
        CHECK(std::abs(mean / n) < 1e-14);
    }
}
