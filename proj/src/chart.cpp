#include "twistray/chart.hpp"

#include <cmath>

#include "twistray/errors.hpp"

namespace twistray {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kOnBoundaryTol = 1e-9;
}  // namespace

double reduce_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    if (t == kTwoPi) t = 0.0;
    return t;
}

BoundaryComponent BoundaryComponent::circle(double cx, double cy, double r, bool emitter) {
    BoundaryComponent c;
    c.rho_ = circle_field(cx, cy, r, emitter);
    c.shape_ = Shape::Circle;
    c.center_ = {cx, cy};
    c.a_ = c.b_ = r;
    return c;
}

BoundaryComponent BoundaryComponent::ellipse(double cx, double cy, double a, double b,
                                             bool emitter) {
    BoundaryComponent c;
    c.rho_ = ellipse_field(cx, cy, a, b, emitter);
    c.shape_ = Shape::Ellipse;
    c.center_ = {cx, cy};
    c.a_ = a;
    c.b_ = b;
    return c;
}

BoundaryComponent BoundaryComponent::from_expr(ScalarFieldPtr rho, Vec2 anchor) {
    BoundaryComponent c;
    c.rho_ = std::move(rho);
    c.shape_ = Shape::Generic;
    c.center_ = anchor;
    c.a_ = c.b_ = 1.0;
    return c;
}

Vec2 BoundaryComponent::point(double p) const {
    const double cp = std::cos(p), sp = std::sin(p);
    switch (shape_) {
        case Shape::Circle: return {center_.x + a_ * cp, center_.y + a_ * sp};
        case Shape::Ellipse: return {center_.x + a_ * cp, center_.y + b_ * sp};
        case Shape::Generic: {
            // radial root of rho along the direction p, bisection then Newton
            double lo = 0.0, hi = 1e-3;
            const double f0 = rho_->value(center_.x, center_.y);
            auto at = [&](double r) {
                return rho_->value(center_.x + r * cp, center_.y + r * sp);
            };
            while (at(hi) * f0 > 0.0 && hi < 1e6) hi *= 2.0;
            if (hi >= 1e6) throw GeometryError("boundary component: no radial zero found");
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (at(mid) * f0 > 0.0) lo = mid; else hi = mid;
                if (hi - lo < 1e-14 * (1.0 + hi)) break;
            }
            const double r = 0.5 * (lo + hi);
            return {center_.x + r * cp, center_.y + r * sp};
        }
    }
    throw GeometryError("corrupt boundary component");
}

Vec2 BoundaryComponent::dpoint(double p) const {
    const double cp = std::cos(p), sp = std::sin(p);
    switch (shape_) {
        case Shape::Circle: return {-a_ * sp, a_ * cp};
        case Shape::Ellipse: return {-a_ * sp, b_ * cp};
        case Shape::Generic: {
            // x(p) = c + r(p) u(p); implicit differentiation of rho(x(p)) = 0
            const Vec2 q = point(p);
            const Vec2 u{cp, sp};
            const double r = std::sqrt(dot(q - center_, q - center_));
            const Jet2 j = rho_->jet(q.x, q.y);
            const Vec2 grad{j.x, j.y};
            const Vec2 du{-sp, cp};
            const double denom = dot(grad, u);
            if (denom == 0.0) throw GeometryError("boundary not star shaped around anchor");
            const double drdp = -r * dot(grad, du) / denom;
            return drdp * u + r * du;
        }
    }
    throw GeometryError("corrupt boundary component");
}

double BoundaryComponent::max_radius() const {
    if (shape_ == Shape::Circle || shape_ == Shape::Ellipse) return std::max(a_, b_);
    double r = 0.0;
    for (int k = 0; k < 64; ++k) {
        const Vec2 q = point(kTwoPi * k / 64.0) - center_;
        r = std::max(r, std::sqrt(dot(q, q)));
    }
    return r;
}

Chart::Chart(ScalarFieldPtr phi, BoundaryComponent emitter, BoundaryComponent reflector)
    : phi_(std::move(phi)), emitter_(std::move(emitter)), reflector_(std::move(reflector)) {
    if (!phi_) throw GeometryError("chart: null conformal factor");
}

double Chart::gaussian_curvature(double x, double y) const {
    const Jet2 p = phi_->jet(x, y);
    return -std::exp(-2.0 * p.v) * (p.xx + p.yy);
}

Vec2 Chart::covariant(double x, double y, Vec2 w, Vec2 V, const double dV[2][2]) const {
    const Jet2 p = phi_->jet(x, y);
    // Gamma^1: [phi_x, phi_y; phi_y, -phi_x], Gamma^2: [-phi_y, phi_x; phi_x, phi_y]
    const double g1 = p.x * w.x * V.x + p.y * (w.x * V.y + w.y * V.x) - p.x * w.y * V.y;
    const double g2 = -p.y * w.x * V.x + p.x * (w.x * V.y + w.y * V.x) + p.y * w.y * V.y;
    return {w.x * dV[0][0] + w.y * dV[0][1] + g1, w.x * dV[1][0] + w.y * dV[1][1] + g2};
}

Vec2 boundary_normal(const Chart& chart, BoundaryId id, double x, double y) {
    const auto& comp = chart.component(id);
    if (std::abs(comp.rho().value(x, y)) > kOnBoundaryTol) {
        throw GeometryError("boundary_normal: point not on the boundary component");
    }
    const Jet2 j = comp.rho().jet(x, y);
    const double n = std::hypot(j.x, j.y);
    if (n < 1e-14) throw GeometryError("boundary_normal: vanishing gradient");
    // g-gradient e^{-2phi} grad rho, g-normalized: e^{-phi} grad rho / |grad rho|
    const double e = std::exp(-chart.phi().value(x, y));
    return {e * j.x / n, e * j.y / n};
}

double normal_angle(const Chart& chart, BoundaryId id, double x, double y) {
    const Vec2 nu = boundary_normal(chart, id, x, y);
    return reduce_angle(std::atan2(nu.y, nu.x));
}

void grad_normal(const Chart& chart, BoundaryId id, double x, double y, double out[2][2]) {
    const Jet2 r = chart.component(id).rho().jet(x, y);
    const Jet2 p = chart.phi().jet(x, y);
    const double gx = r.x, gy = r.y;
    const double n2 = gx * gx + gy * gy;
    const double n = std::sqrt(n2);
    if (n < 1e-14) throw GeometryError("grad_normal: vanishing gradient");
    const double e = std::exp(-p.v);
    // nu^i = e^{-phi} g_i / n with g = grad rho; differentiate analytically.
    const double dgx[2] = {r.xx, r.xy};
    const double dgy[2] = {r.xy, r.yy};
    const double dn[2] = {(gx * r.xx + gy * r.xy) / n, (gx * r.xy + gy * r.yy) / n};
    const double dphi[2] = {p.x, p.y};
    for (int jdx = 0; jdx < 2; ++jdx) {
        out[0][jdx] = e * (-dphi[jdx] * gx / n + dgx[jdx] / n - gx * dn[jdx] / n2);
        out[1][jdx] = e * (-dphi[jdx] * gy / n + dgy[jdx] / n - gy * dn[jdx] / n2);
    }
}

Vec2 covariant_dnu(const Chart& chart, BoundaryId id, double x, double y, Vec2 w) {
    double dnu[2][2];
    grad_normal(chart, id, x, y, dnu);
    const Jet2 r = chart.component(id).rho().jet(x, y);
    const double n = std::hypot(r.x, r.y);
    const double e = std::exp(-chart.phi().value(x, y));
    const Vec2 nu{e * r.x / n, e * r.y / n};
    return chart.covariant(x, y, w, nu, dnu);
}

double second_fundamental_form(const Chart& chart, BoundaryId id, double x, double y, Vec2 v) {
    const Vec2 nu = boundary_normal(chart, id, x, y);
    if (std::abs(chart.metric_dot(x, y, v, nu)) > 1e-8) {
        throw GeometryError("second_fundamental_form: v is not tangent to the boundary");
    }
    const Vec2 dn = covariant_dnu(chart, id, x, y, v);
    return -chart.metric_dot(x, y, dn, v);
}

double signed_curvature(const Chart& chart, BoundaryId id, double x, double y) {
    const Vec2 nu = boundary_normal(chart, id, x, y);
    const Vec2 tau = rot90(nu);  // g-unit tangent
    return second_fundamental_form(chart, id, x, y, tau);
}

double reflect_angle(double psi, double theta) {
    return reduce_angle(2.0 * psi + 3.14159265358979323846 - theta);
}

PhasePoint reflect(const Chart& chart, BoundaryId id, const PhasePoint& s) {
    const double psi = normal_angle(chart, id, s.x, s.y);
    return {s.x, s.y, reflect_angle(psi, s.theta)};
}

Vec2 reflect_vector(const Chart& chart, BoundaryId id, double x, double y, Vec2 v) {
    const Vec2 nu = boundary_normal(chart, id, x, y);
    const double vn = chart.metric_dot(x, y, v, nu);
    return v - 2.0 * vn * nu;  // nu is g-unit
}

}  // namespace twistray
