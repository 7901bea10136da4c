#include "twistray/fields.hpp"

#include <algorithm>
#include <cmath>

namespace twistray {

ExprField::ExprField(const Expr& f)
    : f_(f),
      fx_(f.diff(Var::X)),
      fy_(f.diff(Var::Y)),
      fxx_(fx_.diff(Var::X)),
      fxy_(fx_.diff(Var::Y)),
      fyy_(fy_.diff(Var::Y)) {}

ScalarFieldPtr ExprField::parse(const std::string& source) {
    return std::make_shared<ExprField>(Expr::parse(source));
}

Jet2 ExprField::jet(double x, double y) const {
    Jet2 j;
    j.v = f_.eval(x, y);
    j.x = fx_.eval(x, y);
    j.y = fy_.eval(x, y);
    j.xx = fxx_.eval(x, y);
    j.xy = fxy_.eval(x, y);
    j.yy = fyy_.eval(x, y);
    return j;
}

namespace {

class ConstantField final : public ScalarField {
  public:
    explicit ConstantField(double c) : c_(c) {}
    double value(double, double) const override { return c_; }
    Jet2 jet(double, double) const override { return Jet2{c_, 0, 0, 0, 0, 0}; }

  private:
    double c_;
};

class CircleField final : public ScalarField {
  public:
    CircleField(double cx, double cy, double r, bool inside)
        : cx_(cx), cy_(cy), s_(inside ? 1.0 : -1.0), inv2r_(0.5 / r), r2_(r * r) {}

    double value(double x, double y) const override {
        const double dx = x - cx_, dy = y - cy_;
        return s_ * (r2_ - dx * dx - dy * dy) * inv2r_;
    }

    Jet2 jet(double x, double y) const override {
        const double dx = x - cx_, dy = y - cy_;
        Jet2 j;
        j.v = s_ * (r2_ - dx * dx - dy * dy) * inv2r_;
        j.x = -2.0 * s_ * dx * inv2r_;
        j.y = -2.0 * s_ * dy * inv2r_;
        j.xx = -2.0 * s_ * inv2r_;
        j.yy = -2.0 * s_ * inv2r_;
        j.xy = 0.0;
        return j;
    }

  private:
    double cx_, cy_, s_, inv2r_, r2_;
};

class EllipseField final : public ScalarField {
  public:
    EllipseField(double cx, double cy, double a, double b, bool inside)
        : cx_(cx), cy_(cy), ia2_(1.0 / (a * a)), ib2_(1.0 / (b * b)),
          s_((inside ? 1.0 : -1.0) * 0.5 * std::min(a, b)) {}

    double value(double x, double y) const override {
        const double dx = x - cx_, dy = y - cy_;
        return s_ * (1.0 - dx * dx * ia2_ - dy * dy * ib2_);
    }

    Jet2 jet(double x, double y) const override {
        const double dx = x - cx_, dy = y - cy_;
        Jet2 j;
        j.v = s_ * (1.0 - dx * dx * ia2_ - dy * dy * ib2_);
        j.x = -2.0 * s_ * dx * ia2_;
        j.y = -2.0 * s_ * dy * ib2_;
        j.xx = -2.0 * s_ * ia2_;
        j.yy = -2.0 * s_ * ib2_;
        j.xy = 0.0;
        return j;
    }

  private:
    double cx_, cy_, ia2_, ib2_, s_;
};

}  // namespace

ScalarFieldPtr zero_field() { return std::make_shared<ConstantField>(0.0); }

ScalarFieldPtr constant_field(double c) { return std::make_shared<ConstantField>(c); }

ScalarFieldPtr circle_field(double cx, double cy, double radius, bool positive_inside) {
    return std::make_shared<CircleField>(cx, cy, radius, positive_inside);
}

ScalarFieldPtr ellipse_field(double cx, double cy, double a, double b, bool positive_inside) {
    return std::make_shared<EllipseField>(cx, cy, a, b, positive_inside);
}

}  // namespace twistray
