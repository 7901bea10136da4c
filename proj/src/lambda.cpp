#include "twistray/lambda.hpp"

#include <cmath>

#include "twistray/errors.hpp"

namespace twistray {

namespace {
constexpr double kPi = 3.14159265358979323846;

class ZeroLambda final : public LambdaField {
  public:
    double value(double, double, double) const override { return 0.0; }
    SMJet jet(double, double, double) const override { return {}; }
    LambdaKind kind() const override { return LambdaKind::Magnetic; }
};

class ExprLambda final : public LambdaField {
  public:
    explicit ExprLambda(const Expr& e)
        : f_(e),
          fx_(e.diff(Var::X)),
          fy_(e.diff(Var::Y)),
          fth_(e.diff(Var::Theta)),
          fxth_(fx_.diff(Var::Theta)),
          fyth_(fy_.diff(Var::Theta)),
          fthth_(fth_.diff(Var::Theta)) {}

    double value(double x, double y, double th) const override { return f_.eval(x, y, th); }

    SMJet jet(double x, double y, double th) const override {
        SMJet j;
        j.v = f_.eval(x, y, th);
        j.x = fx_.eval(x, y, th);
        j.y = fy_.eval(x, y, th);
        j.th = fth_.eval(x, y, th);
        j.xth = fxth_.eval(x, y, th);
        j.yth = fyth_.eval(x, y, th);
        j.thth = fthth_.eval(x, y, th);
        return j;
    }

  private:
    Expr f_, fx_, fy_, fth_, fxth_, fyth_, fthth_;
};

class MagneticLambda final : public LambdaField {
  public:
    explicit MagneticLambda(ScalarFieldPtr lt) : lt_(std::move(lt)) {}

    double value(double x, double y, double) const override { return lt_->value(x, y); }

    SMJet jet(double x, double y, double) const override {
        const Jet2 g = lt_->jet(x, y);
        SMJet j;
        j.v = g.v;
        j.x = g.x;
        j.y = g.y;
        return j;
    }

    LambdaKind kind() const override { return LambdaKind::Magnetic; }

  private:
    ScalarFieldPtr lt_;
};

// lambda = <E, iv>_g = e^{phi} (E2 cos th - E1 sin th): a pure first
// harmonic in the fiber, so lambda_thth = -lambda.
class ThermostatLambda final : public LambdaField {
  public:
    ThermostatLambda(ScalarFieldPtr e1, ScalarFieldPtr e2, ScalarFieldPtr phi)
        : e1_(std::move(e1)), e2_(std::move(e2)), phi_(std::move(phi)) {}

    double value(double x, double y, double th) const override {
        const double e = std::exp(phi_->value(x, y));
        return e * (e2_->value(x, y) * std::cos(th) - e1_->value(x, y) * std::sin(th));
    }

    SMJet jet(double x, double y, double th) const override {
        const Jet2 a = e1_->jet(x, y);
        const Jet2 b = e2_->jet(x, y);
        const Jet2 p = phi_->jet(x, y);
        const double e = std::exp(p.v);
        const double c = std::cos(th), s = std::sin(th);
        SMJet j;
        j.v = e * (b.v * c - a.v * s);
        j.x = e * (p.x * (b.v * c - a.v * s) + b.x * c - a.x * s);
        j.y = e * (p.y * (b.v * c - a.v * s) + b.y * c - a.y * s);
        j.th = e * (-b.v * s - a.v * c);
        j.xth = e * (p.x * (-b.v * s - a.v * c) - b.x * s - a.x * c);
        j.yth = e * (p.y * (-b.v * s - a.v * c) - b.y * s - a.y * c);
        j.thth = -j.v;
        return j;
    }

    LambdaKind kind() const override { return LambdaKind::Thermostat; }

  private:
    ScalarFieldPtr e1_, e2_, phi_;
};

class DualLambda final : public LambdaField {
  public:
    explicit DualLambda(LambdaPtr base) : base_(std::move(base)) {}

    double value(double x, double y, double th) const override {
        return -base_->value(x, y, th + kPi);
    }

    SMJet jet(double x, double y, double th) const override {
        SMJet j = base_->jet(x, y, th + kPi);
        j.v = -j.v;
        j.x = -j.x;
        j.y = -j.y;
        j.th = -j.th;
        j.xth = -j.xth;
        j.yth = -j.yth;
        j.thth = -j.thth;
        return j;
    }

    LambdaKind kind() const override { return base_->kind(); }

    LambdaPtr base() const { return base_; }

  private:
    LambdaPtr base_;
};

// finite-difference jet for value-only twist functions
class FnLambda final : public LambdaField {
  public:
    explicit FnLambda(std::function<double(double, double, double)> f) : f_(std::move(f)) {}

    double value(double x, double y, double th) const override { return f_(x, y, th); }

    SMJet jet(double x, double y, double th) const override {
        const double h = 1e-5;
        SMJet j;
        j.v = f_(x, y, th);
        j.x = (f_(x + h, y, th) - f_(x - h, y, th)) / (2 * h);
        j.y = (f_(x, y + h, th) - f_(x, y - h, th)) / (2 * h);
        j.th = (f_(x, y, th + h) - f_(x, y, th - h)) / (2 * h);
        j.thth = (f_(x, y, th + h) - 2 * j.v + f_(x, y, th - h)) / (h * h);
        j.xth = (f_(x + h, y, th + h) - f_(x + h, y, th - h) - f_(x - h, y, th + h) +
                 f_(x - h, y, th - h)) /
                (4 * h * h);
        j.yth = (f_(x, y + h, th + h) - f_(x, y + h, th - h) - f_(x, y - h, th + h) +
                 f_(x, y - h, th - h)) /
                (4 * h * h);
        return j;
    }

  private:
    std::function<double(double, double, double)> f_;
};

}  // namespace

LambdaPtr lambda_zero() { return std::make_shared<ZeroLambda>(); }

LambdaPtr lambda_from_function(std::function<double(double, double, double)> f) {
    return std::make_shared<FnLambda>(std::move(f));
}

LambdaPtr lambda_expr(const std::string& source) {
    return std::make_shared<ExprLambda>(Expr::parse(source));
}

LambdaPtr lambda_expr(const Expr& e) { return std::make_shared<ExprLambda>(e); }

LambdaPtr lambda_magnetic(ScalarFieldPtr lambda_tilde) {
    return std::make_shared<MagneticLambda>(std::move(lambda_tilde));
}

LambdaPtr lambda_thermostat(ScalarFieldPtr e1, ScalarFieldPtr e2, ScalarFieldPtr phi) {
    return std::make_shared<ThermostatLambda>(std::move(e1), std::move(e2), std::move(phi));
}

LambdaPtr dual(LambdaPtr lambda) {
    if (auto d = std::dynamic_pointer_cast<const DualLambda>(lambda)) {
        return d->base();  // (lambda^-)^- = lambda, exactly
    }
    return std::make_shared<DualLambda>(std::move(lambda));
}

double vertical_derivative(const LambdaField& lambda, const PhasePoint& s) {
    return lambda.jet(s).th;
}

double frame_x(const Chart& chart, const SMJet& j, const PhasePoint& s) {
    const Jet2 p = chart.phi().jet(s.x, s.y);
    const double e = std::exp(-p.v);
    const double c = std::cos(s.theta), sn = std::sin(s.theta);
    const double w = -p.x * sn + p.y * c;
    return e * (c * j.x + sn * j.y + w * j.th);
}

double frame_xperp(const Chart& chart, const SMJet& j, const PhasePoint& s) {
    const Jet2 p = chart.phi().jet(s.x, s.y);
    const double e = std::exp(-p.v);
    const double c = std::cos(s.theta), sn = std::sin(s.theta);
    return e * (sn * j.x - c * j.y + (p.x * c + p.y * sn) * j.th);
}

double frame_f_of_vlambda(const Chart& chart, const SMJet& j, const PhasePoint& s) {
    // F(V(l)) = X(l_th) + l * l_thth with X applied to the fiber derivative.
    const Jet2 p = chart.phi().jet(s.x, s.y);
    const double e = std::exp(-p.v);
    const double c = std::cos(s.theta), sn = std::sin(s.theta);
    const double w = -p.x * sn + p.y * c;
    return e * (c * j.xth + sn * j.yth + w * j.thth) + j.v * j.thth;
}

double lambda_curvature(const Chart& chart, const LambdaField& lambda, const PhasePoint& s) {
    const SMJet j = lambda.jet(s);
    const double K = chart.gaussian_curvature(s.x, s.y);
    return K + frame_xperp(chart, j, s) + j.v * j.v + frame_f_of_vlambda(chart, j, s);
}

SignedCurvatures signed_lambda_curvatures(const Chart& chart, const LambdaField& lambda,
                                          BoundaryId id, const PhasePoint& s) {
    const Vec2 nu = boundary_normal(chart, id, s.x, s.y);
    const double kappa = signed_curvature(chart, id, s.x, s.y);
    const SMJet j = lambda.jet(s);
    const Vec2 v = chart.velocity(s);
    const Vec2 iv = rot90(v);
    SignedCurvatures out;
    out.kappa_lambda = kappa - j.v * chart.metric_dot(s.x, s.y, iv, nu);
    out.eta_lambda = j.th * chart.metric_dot(s.x, s.y, v, nu);
    return out;
}

}  // namespace twistray
