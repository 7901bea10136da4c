#include "doctest.h"

#include <cmath>

#include "twistray/chart.hpp"
#include "twistray/errors.hpp"
#include "twistray/rng.hpp"

using namespace twistray;

namespace {

constexpr double kPi = 3.14159265358979323846;

Chart flat_annulus(double r_in = 0.5, double r_out = 1.0) {
    return Chart(zero_field(), BoundaryComponent::circle(0, 0, r_out, true),
                 BoundaryComponent::circle(0, 0, r_in, false));
}

Chart curved_annulus() {
    return Chart(ExprField::parse("0.5*(x^2+y^2)"),
                 BoundaryComponent::circle(0, 0, 1.0, true),
                 BoundaryComponent::circle(0, 0, 0.5, false));
}

}  // namespace

TEST_CASE("gaussian curvature") {
    SUBCASE("flat metric") {
        const Chart c = flat_annulus();
        CHECK(c.gaussian_curvature(0.7, 0.1) == 0.0);
    }
    SUBCASE("K = -e^{-2phi} laplacian(phi) for phi = r^2/2") {
        const Chart c = curved_annulus();
        Rng rng(2);
        for (int i = 0; i < 20; ++i) {
            const double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1);
            const double expected = -2.0 * std::exp(-(x * x + y * y));
            CHECK(c.gaussian_curvature(x, y) == doctest::Approx(expected).epsilon(1e-12));
        }
    }
    SUBCASE("spherical conformal factor has K = 1 at the origin") {
        const Chart c(ExprField::parse("log(2/(1+x^2+y^2))"),
                      BoundaryComponent::circle(0, 0, 1.0, true),
                      BoundaryComponent::circle(0, 0, 0.25, false));
        CHECK(c.gaussian_curvature(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("boundary normals point inward") {
    const Chart c = flat_annulus();
    SUBCASE("outer circle: inward = toward the center") {
        const Vec2 nu = boundary_normal(c, BoundaryId::Emitter, 1.0, 0.0);
        CHECK(nu.x == doctest::Approx(-1.0).epsilon(1e-14));
        CHECK(nu.y == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("inner circle: inward = away from the obstacle") {
        const Vec2 nu = boundary_normal(c, BoundaryId::Reflector, 0.5, 0.0);
        CHECK(nu.x == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(nu.y == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("g-normalization on the curved chart") {
        const Chart cc = curved_annulus();
        const Vec2 nu = boundary_normal(cc, BoundaryId::Emitter, 1.0, 0.0);
        CHECK(nu.x == doctest::Approx(-std::exp(-0.5)).epsilon(1e-13));
        CHECK(nu.y == doctest::Approx(0.0).epsilon(1e-13));
        CHECK(cc.metric_norm(1.0, 0.0, nu) == doctest::Approx(1.0).epsilon(1e-13));
    }
    SUBCASE("off-boundary points are rejected") {
        CHECK_THROWS_AS(boundary_normal(c, BoundaryId::Emitter, 0.9, 0.0), GeometryError);
    }
}

TEST_CASE("second fundamental form on circles is +-1/R") {
    SUBCASE("flat outer circle radius 1 is strictly convex") {
        const Chart c = flat_annulus();
        CHECK(signed_curvature(c, BoundaryId::Emitter, 0.0, 1.0) ==
              doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("flat inner circle radius 0.5 is strictly concave") {
        const Chart c = flat_annulus();
        CHECK(signed_curvature(c, BoundaryId::Reflector, 0.5, 0.0) ==
              doctest::Approx(-2.0).epsilon(1e-8));
    }
    SUBCASE("radius sweep") {
        for (double R : {0.3, 0.7, 1.3, 2.0}) {
            const Chart c = flat_annulus(0.1, R);
            const double p = 1.1;  // arbitrary boundary parameter
            const Vec2 q = c.component(BoundaryId::Emitter).point(p);
            CHECK(signed_curvature(c, BoundaryId::Emitter, q.x, q.y) ==
                  doctest::Approx(1.0 / R).epsilon(1e-8));
        }
    }
    SUBCASE("straight boundary piece has sff = 0") {
        // emitter rho = 1 - y: the zero set is the line y = 1
        const Chart c(zero_field(),
                      BoundaryComponent::from_expr(ExprField::parse("1 - y"), Vec2{0, 0}),
                      BoundaryComponent::circle(0, 0, 0.25, false));
        CHECK(second_fundamental_form(c, BoundaryId::Emitter, 0.3, 1.0, Vec2{1, 0}) ==
              doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("non-tangent vectors are rejected") {
        const Chart c = flat_annulus();
        CHECK_THROWS_AS(second_fundamental_form(c, BoundaryId::Emitter, 1.0, 0.0, Vec2{1, 0}),
                        GeometryError);
    }
}

TEST_CASE("reflection map") {
    const Chart c = flat_annulus();
    SUBCASE("normal incidence flips the direction") {
        // at (0.5, 0) the inward normal is +x; incoming theta = pi reflects to 0
        const PhasePoint out = reflect(c, BoundaryId::Reflector, {0.5, 0.0, kPi});
        CHECK(out.theta == doctest::Approx(0.0).epsilon(1e-14));
    }
    SUBCASE("tangential directions are fixed points") {
        const PhasePoint out = reflect(c, BoundaryId::Reflector, {0.5, 0.0, kPi / 2});
        CHECK(out.theta == doctest::Approx(kPi / 2).epsilon(1e-14));
    }
    SUBCASE("planar mirror law about the x-axis normal") {
        const PhasePoint out = reflect(c, BoundaryId::Reflector, {0.5, 0.0, 3 * kPi / 4});
        CHECK(out.theta == doctest::Approx(kPi / 4).epsilon(1e-13));
    }
}

TEST_CASE("reflection properties on random boundary fibers") {
    const Chart charts[] = {flat_annulus(), curved_annulus()};
    Rng rng(11);
    for (const Chart& c : charts) {
        for (int i = 0; i < 5000; ++i) {
            const BoundaryId id = (i % 2 == 0) ? BoundaryId::Emitter : BoundaryId::Reflector;
            const Vec2 q = c.component(id).point(rng.uniform(0, 2 * kPi));
            const double th = rng.uniform(0, 2 * kPi);
            const PhasePoint in{q.x, q.y, th};
            const PhasePoint out = reflect(c, id, in);
            const Vec2 nu = boundary_normal(c, id, q.x, q.y);
            const Vec2 v = c.velocity(in);
            const Vec2 rv = c.velocity(out);
            // fiber isometry
            CHECK(c.metric_norm(q.x, q.y, rv) == doctest::Approx(1.0).epsilon(1e-12));
            // flips the normal component, keeps the tangential one
            CHECK(c.metric_dot(q.x, q.y, rv, nu) ==
                  doctest::Approx(-c.metric_dot(q.x, q.y, v, nu)).epsilon(1e-12).scale(1.0));
            const Vec2 tau = rot90(nu);
            CHECK(c.metric_dot(q.x, q.y, rv, tau) ==
                  doctest::Approx(c.metric_dot(q.x, q.y, v, tau)).epsilon(1e-12).scale(1.0));
            // involution
            const PhasePoint twice = reflect(c, id, out);
            CHECK(std::abs(std::remainder(twice.theta - th, 2 * kPi)) < 1e-13);
            // i rho i = rho on fibers
            const double psi = normal_angle(c, id, q.x, q.y);
            const double lhs = reduce_angle(reflect_angle(psi, th + kPi / 2) + kPi / 2);
            const double rhs = reflect_angle(psi, th);
            CHECK(std::abs(std::remainder(lhs - rhs, 2 * kPi)) < 1e-12);
        }
    }
}

TEST_CASE("rotate90") {
    const Chart c = curved_annulus();
    const PhasePoint s{0.3, 0.2, 1.1};
    const Vec2 v = c.velocity(s);
    const Vec2 iv = c.ivelocity(s);
    // quarter turn: same norm, orthogonal, positively oriented
    CHECK(c.metric_norm(s.x, s.y, iv) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.metric_dot(s.x, s.y, v, iv) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(v.x * iv.y - v.y * iv.x > 0.0);
    // i(iv) = -v
    const Vec2 iiv = rot90(iv);
    CHECK(iiv.x == doctest::Approx(-v.x));
    CHECK(iiv.y == doctest::Approx(-v.y));
    // flat chart: v = (1,0) -> iv = (0,1)
    CHECK(rot90(Vec2{1, 0}).x == 0.0);
    CHECK(rot90(Vec2{1, 0}).y == 1.0);
}

TEST_CASE("ellipse and generic boundary parametrizations stay on the zero set") {
    const Chart c(zero_field(), BoundaryComponent::ellipse(0, 0, 1.2, 0.9, true),
                  BoundaryComponent::from_expr(
                      ExprField::parse("x^2 + y^2 - 0.2 - 0.05*sin(3*x)"), Vec2{0, 0}));
    for (double p = 0.0; p < 2 * kPi; p += 0.37) {
        for (BoundaryId id : {BoundaryId::Emitter, BoundaryId::Reflector}) {
            const Vec2 q = c.component(id).point(p);
            CHECK(std::abs(c.component(id).rho().value(q.x, q.y)) < 1e-10);
            // dpoint is tangent to the level set
            const Vec2 d = c.component(id).dpoint(p);
            const Jet2 j = c.component(id).rho().jet(q.x, q.y);
            CHECK(std::abs(d.x * j.x + d.y * j.y) < 1e-8);
        }
    }
}

TEST_CASE("domain sanity: defining functions positive inside, gradients alive near zero sets") {
    const Chart c = curved_annulus();
    Rng rng(29);
    for (int i = 0; i < 500; ++i) {
        const double r = rng.uniform(0.52, 0.98);
        const double a = rng.uniform(0, 2 * kPi);
        const double x = r * std::cos(a), y = r * std::sin(a);
        CHECK(c.component(BoundaryId::Emitter).rho().value(x, y) > 0.0);
        CHECK(c.component(BoundaryId::Reflector).rho().value(x, y) > 0.0);
    }
    for (int i = 0; i < 200; ++i) {
        // tube around each zero set
        const double a = rng.uniform(0, 2 * kPi);
        for (BoundaryId id : {BoundaryId::Emitter, BoundaryId::Reflector}) {
            const Vec2 q = c.component(id).point(a);
            const double t = rng.uniform(-0.05, 0.05);
            const Jet2 j = c.component(id).rho().jet(q.x * (1 + t), q.y * (1 + t));
            CHECK(std::hypot(j.x, j.y) > 0.1);
        }
    }
}
