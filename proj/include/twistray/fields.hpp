#pragma once

#include <memory>
#include <string>

#include "twistray/expr.hpp"

namespace twistray {

// Value and partials of a chart scalar field at a point, up to order two.
struct Jet2 {
    double v = 0, x = 0, y = 0, xx = 0, xy = 0, yy = 0;
};

// Scalar field on the chart with analytic partials up to order two.
// Immutable after construction; safe to share across workers.
class ScalarField {
  public:
    virtual ~ScalarField() = default;
    virtual double value(double x, double y) const = 0;
    virtual Jet2 jet(double x, double y) const = 0;
};

using ScalarFieldPtr = std::shared_ptr<const ScalarField>;

// Backed by a parsed expression in (x, y); partials are symbolic.
class ExprField : public ScalarField {
  public:
    explicit ExprField(const Expr& f);
    static ScalarFieldPtr parse(const std::string& source);

    double value(double x, double y) const override { return f_.eval(x, y); }
    Jet2 jet(double x, double y) const override;

    const Expr& expr() const { return f_; }

  private:
    Expr f_, fx_, fy_, fxx_, fxy_, fyy_;
};

ScalarFieldPtr zero_field();
ScalarFieldPtr constant_field(double c);

// Defining function of a circle |p - c| = R. With `positive_inside` the field
// is (R^2 - r^2)/(2R): positive inside, gradient of unit length on the zero
// set; otherwise the sign is flipped (positive outside, for obstacles).
ScalarFieldPtr circle_field(double cx, double cy, double radius, bool positive_inside);

// Defining function of the ellipse (x/a)^2 + (y/b)^2 = 1, scaled so the
// gradient has roughly unit length on the zero set.
ScalarFieldPtr ellipse_field(double cx, double cy, double a, double b, bool positive_inside);

}  // namespace twistray
