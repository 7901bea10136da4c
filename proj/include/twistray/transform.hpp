#pragma once

#include <functional>
#include <vector>

#include "twistray/ray.hpp"

namespace twistray {

// Integrand f(x, v) = f0(x) + alpha_1(x) v^1 + alpha_2(x) v^2 with v the
// chart components of the g-unit direction. Pure 1-form integrands have
// zero fiber mean.
struct Integrand {
    ScalarFieldPtr f0;
    ScalarFieldPtr alpha1, alpha2;

    double eval(const Chart& chart, const PhasePoint& s) const {
        double out = f0 ? f0->value(s.x, s.y) : 0.0;
        if (alpha1 || alpha2) {
            const Vec2 v = chart.velocity(s);
            if (alpha1) out += alpha1->value(s.x, s.y) * v.x;
            if (alpha2) out += alpha2->value(s.x, s.y) * v.y;
        }
        return out;
    }

    static Integrand scalar(ScalarFieldPtr f) { return {std::move(f), nullptr, nullptr}; }
    static Integrand one_form(ScalarFieldPtr a1, ScalarFieldPtr a2) {
        return {nullptr, std::move(a1), std::move(a2)};
    }
    // the exact gauge element d h
    static Integrand exact_form(const ScalarField& h);
};

// Quadrature weights over a traced ray's sample grid: one weight per
// sample, panels never straddling reflection events (each segment is
// integrated separately, uniform panels by a Simpson-type rule with a
// quadratic end correction for the trailing partial step).
std::vector<std::vector<double>> quadrature_weights(const BrokenRay& ray);

// Integral of a sampled function along the ray.
double integrate_along(const Chart& chart, const BrokenRay& ray,
                       const std::function<double(const PhasePoint&)>& f);

// Broken ray transform If(x, v) = int_0^tau f(phi_t(x, v)) dt for a ray
// from the emitter. Throws TraceError unless the ray exits.
double broken_transform(const Chart& chart, const LambdaField& lambda, const Integrand& f,
                        const PhasePoint& start, const TraceOptions& opts = {});

// Primitive u(x, v): the same integral from an arbitrary phase point. On
// the reflector with an inward-into-the-obstacle direction the value is
// defined through the reflection condition u = u o rho.
double primitive(const Chart& chart, const LambdaField& lambda, const Integrand& f,
                 const PhasePoint& s, const TraceOptions& opts = {});

// Primitive of the dual system (dual twist, reversed integrand pairing).
double dual_primitive(const Chart& chart, const LambdaField& lambda, const Integrand& f,
                      const PhasePoint& s, const TraceOptions& opts = {});

// Centered-flow residual of the transport law: (u(phi_d) - u(phi_-d))/2d
// + f(x, v); O(d^2) where u is C^2 and the short flow segment stays
// interior.
double transport_residual(const Chart& chart, const LambdaField& lambda, const Integrand& f,
                          const PhasePoint& s, double delta, const TraceOptions& opts = {});

// u(x,v) + u^-(x,-v) - If(entry of the maximal broken ray through (x,v));
// identically zero in the continuum.
double dual_relation_defect(const Chart& chart, const LambdaField& lambda, const Integrand& f,
                            const PhasePoint& s, const TraceOptions& opts = {});

// One sinogram row: emitter arclength, fiber angle relative to the inward
// normal, transform value.
struct SinogramRow {
    double s = 0;      // boundary arclength coordinate
    double chi = 0;    // angle from the inward normal, in (-pi/2, pi/2)
    double value = 0;
    RayStatus status = RayStatus::Exited;
};
std::vector<SinogramRow> sinogram(const Chart& chart, const LambdaField& lambda,
                                  const Integrand& f, int n_points, int n_angles,
                                  double glancing_margin, const TraceOptions& opts = {});

}  // namespace twistray
