#pragma once

#include <functional>
#include <memory>
#include <string>

#include "twistray/chart.hpp"

namespace twistray {

// Value and partials of a function on SM sampled at one phase point. Second
// order is only needed through the vertical direction (th, xth, yth, thth);
// nothing in the engine uses lambda_xx.
struct SMJet {
    double v = 0, x = 0, y = 0, th = 0, xth = 0, yth = 0, thth = 0;
};

enum class LambdaKind { General, Magnetic, Thermostat };

// Twist function lambda on SM. Immutable; evaluations are pure.
class LambdaField {
  public:
    virtual ~LambdaField() = default;
    virtual double value(double x, double y, double theta) const = 0;
    virtual SMJet jet(double x, double y, double theta) const = 0;
    virtual LambdaKind kind() const { return LambdaKind::General; }

    double value(const PhasePoint& s) const { return value(s.x, s.y, s.theta); }
    SMJet jet(const PhasePoint& s) const { return jet(s.x, s.y, s.theta); }
};

using LambdaPtr = std::shared_ptr<const LambdaField>;

// Constructors matching the config surface.
LambdaPtr lambda_zero();
LambdaPtr lambda_expr(const std::string& source);
LambdaPtr lambda_expr(const Expr& e);
// Magnetic: lambda(x, v) = lt(x), independent of the fiber.
LambdaPtr lambda_magnetic(ScalarFieldPtr lambda_tilde);
// Thermostat: lambda(x, v) = <E(x), iv>_g for a chart vector field E.
// Requires the chart's conformal factor: lambda = e^{phi}(E2 cos - E1 sin).
LambdaPtr lambda_thermostat(ScalarFieldPtr e1, ScalarFieldPtr e2, ScalarFieldPtr phi);

// Value-only twist (plugin fields without analytic partials): the jet is
// filled by centered differences with step 1e-5. Identity checks relying
// on analytic partials degrade to ~1e-5 with this constructor.
LambdaPtr lambda_from_function(std::function<double(double, double, double)> f);

// Dual twist lambda^-(x, v) = -lambda(x, -v); dual(dual(l)) == l pointwise.
LambdaPtr dual(LambdaPtr lambda);

// Vertical derivative V(lambda) = d lambda / d theta.
double vertical_derivative(const LambdaField& lambda, const PhasePoint& s);

// lambda-curvature K_lambda = K + Xperp(lambda) + lambda^2 + F(V(lambda)),
// evaluated through the explicit isothermal frame.
double lambda_curvature(const Chart& chart, const LambdaField& lambda, const PhasePoint& s);

// Signed boundary quantities at a boundary phase point:
//   kappa_lambda = kappa - <nu, lambda iv>_g
//   eta_lambda   = <V(lambda) v, nu>_g
struct SignedCurvatures {
    double kappa_lambda = 0, eta_lambda = 0;
};
SignedCurvatures signed_lambda_curvatures(const Chart& chart, const LambdaField& lambda,
                                          BoundaryId id, const PhasePoint& s);

// Even/odd decomposition of a fiber function q at a boundary base point with
// respect to the reflection: q_e = (q + q o rho)/2, q_o = (q - q o rho)/2.
struct EvenOdd {
    double even = 0, odd = 0;
};
template <class F>
EvenOdd fiber_even_odd(double normal_angle, double theta, F&& q) {
    const double qr = q(reflect_angle(normal_angle, theta));
    const double qv = q(theta);
    return {0.5 * (qv + qr), 0.5 * (qv - qr)};
}

// Frame derivatives of lambda used across the engine (isothermal frame):
//   X(lambda), Xperp(lambda), F(V(lambda)).
double frame_x(const Chart& chart, const SMJet& j, const PhasePoint& s);
double frame_xperp(const Chart& chart, const SMJet& j, const PhasePoint& s);
double frame_f_of_vlambda(const Chart& chart, const SMJet& j, const PhasePoint& s);

}  // namespace twistray
