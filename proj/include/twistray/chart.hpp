#pragma once

#include <cmath>
#include <memory>
#include <optional>

#include "twistray/fields.hpp"

namespace twistray {

struct Vec2 {
    double x = 0, y = 0;
    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator-() const { return {-x, -y}; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

// Counterclockwise quarter turn of chart components. For a conformal metric
// this is also the metric rotation i, so |iv|_g = |v|_g and i^2 = -1.
inline Vec2 rot90(Vec2 v) { return {-v.y, v.x}; }

// Point of the unit sphere bundle in chart coordinates. The fiber is encoded
// by the angle theta: v = e^{-phi(x,y)} (cos theta, sin theta), which is
// g-unit by construction. theta is kept reduced to [0, 2pi).
struct PhasePoint {
    double x = 0, y = 0, theta = 0;
};

double reduce_angle(double theta);  // into [0, 2pi)

enum class BoundaryId { Emitter, Reflector };

// One closed boundary component, described by a defining function rho
// (positive inside M, zero on the component, gradient nonvanishing on the
// zero set) plus a parametrization p in [0, 2pi) of the zero set used for
// boundary sampling and quadrature.
class BoundaryComponent {
  public:
    // Analytic parametrizations.
    static BoundaryComponent circle(double cx, double cy, double r, bool emitter);
    static BoundaryComponent ellipse(double cx, double cy, double a, double b, bool emitter);
    // Generic defining function; the zero set must be star shaped around the
    // anchor, points are located by radial root finding.
    static BoundaryComponent from_expr(ScalarFieldPtr rho, Vec2 anchor);

    const ScalarField& rho() const { return *rho_; }
    ScalarFieldPtr rho_ptr() const { return rho_; }

    Vec2 point(double p) const;      // point of the zero set
    Vec2 dpoint(double p) const;     // d(point)/dp
    double max_radius() const;       // for bounding boxes

  private:
    ScalarFieldPtr rho_;
    enum class Shape { Circle, Ellipse, Generic } shape_ = Shape::Generic;
    Vec2 center_{};
    double a_ = 1, b_ = 1;
};

// Planar chart with conformal metric g = e^{2 phi} (dx^2 + dy^2) and two
// boundary components: the emitter (outer, where data lives) and the
// reflector (inner obstacle). M = {rho_E >= 0} and {rho_R >= 0}.
class Chart {
  public:
    Chart(ScalarFieldPtr phi, BoundaryComponent emitter, BoundaryComponent reflector);

    const ScalarField& phi() const { return *phi_; }
    ScalarFieldPtr phi_ptr() const { return phi_; }
    const BoundaryComponent& component(BoundaryId id) const {
        return id == BoundaryId::Emitter ? emitter_ : reflector_;
    }

    // Metric helpers. All vectors are chart components.
    double conformal(double x, double y) const { return std::exp(phi_->value(x, y)); }
    double metric_dot(double x, double y, Vec2 a, Vec2 b) const {
        const double e = conformal(x, y);
        return e * e * dot(a, b);
    }
    double metric_norm(double x, double y, Vec2 a) const {
        return conformal(x, y) * std::sqrt(dot(a, a));
    }

    // g-unit velocity of a phase point and its quarter turn.
    Vec2 velocity(const PhasePoint& s) const {
        const double e = std::exp(-phi_->value(s.x, s.y));
        return {e * std::cos(s.theta), e * std::sin(s.theta)};
    }
    Vec2 ivelocity(const PhasePoint& s) const { return rot90(velocity(s)); }

    // Gaussian curvature K = -e^{-2 phi} (phi_xx + phi_yy).
    double gaussian_curvature(double x, double y) const;

    // Covariant derivative of a vector field along direction w, given the
    // chart Jacobian dV of the field at the point: (nabla_w V)^i =
    // w^j dV^i_j + Gamma^i_{jk} w^j V^k for the conformal Christoffels.
    Vec2 covariant(double x, double y, Vec2 w, Vec2 V, const double dV[2][2]) const;

    bool inside(double x, double y) const {
        return emitter_.rho().value(x, y) >= 0.0 && reflector_.rho().value(x, y) >= 0.0;
    }

    // Whether (x, y) lies on the given component within |rho| <= tol.
    bool on_boundary(BoundaryId id, double x, double y, double tol = 1e-9) const {
        return std::abs(component(id).rho().value(x, y)) <= tol;
    }

  private:
    ScalarFieldPtr phi_;
    BoundaryComponent emitter_;
    BoundaryComponent reflector_;
};

// g-unit inward normal at a boundary point: the normalized g-gradient of
// rho. The same formula extends nu off the boundary inside the tube where
// the gradient does not vanish; that extension is what grad_normal
// differentiates. Throws GeometryError off the boundary (tol 1e-9 in rho)
// or when the gradient vanishes.
Vec2 boundary_normal(const Chart& chart, BoundaryId id, double x, double y);

// Chart angle of the inward normal.
double normal_angle(const Chart& chart, BoundaryId id, double x, double y);

// Chart Jacobian d nu^i / d x^j of the extended unit normal field.
void grad_normal(const Chart& chart, BoundaryId id, double x, double y, double out[2][2]);

// Covariant derivative nabla_w nu of the extended normal.
Vec2 covariant_dnu(const Chart& chart, BoundaryId id, double x, double y, Vec2 w);

// Second fundamental form sff(v, v) = -< nabla_v nu, v >_g for a g-unit
// boundary-tangent v. The signed curvature of the component is sff on the
// unit tangent.
double second_fundamental_form(const Chart& chart, BoundaryId id, double x, double y, Vec2 v);
double signed_curvature(const Chart& chart, BoundaryId id, double x, double y);

// Fiberwise reflection v -> v - 2<v,nu>_g nu as an angle map. Exact in the
// angle coordinate: theta' = 2 psi + pi - theta with psi the normal angle.
PhasePoint reflect(const Chart& chart, BoundaryId id, const PhasePoint& s);
double reflect_angle(double normal_angle, double theta);
Vec2 reflect_vector(const Chart& chart, BoundaryId id, double x, double y, Vec2 v);

}  // namespace twistray
