#pragma once

#include <memory>
#include <string>

namespace twistray {

// Variables of the expression language. Scalar fields on the chart use
// (x, y); fields on the sphere bundle additionally use theta.
enum class Var { X = 0, Y = 1, Theta = 2 };

namespace detail {
struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;
}  // namespace detail

// Immutable arithmetic expression over x, y, theta with exact symbolic
// derivatives. Grammar: numbers, x, y, theta, + - * / ^, parentheses and
// the functions sin, cos, exp, log, sqrt, tanh.
class Expr {
  public:
    Expr();  // the zero expression

    static Expr parse(const std::string& source);
    static Expr constant(double c);
    static Expr variable(Var v);

    double eval(double x, double y, double theta = 0.0) const;
    Expr diff(Var v) const;

    bool is_zero() const;
    bool is_constant(double* value = nullptr) const;
    std::string str() const;

    friend Expr operator+(const Expr&, const Expr&);
    friend Expr operator-(const Expr&, const Expr&);
    friend Expr operator*(const Expr&, const Expr&);
    friend Expr operator/(const Expr&, const Expr&);
    friend Expr operator-(const Expr&);
    friend Expr pow(const Expr&, const Expr&);
    friend Expr sin(const Expr&);
    friend Expr cos(const Expr&);
    friend Expr exp(const Expr&);
    friend Expr log(const Expr&);
    friend Expr sqrt(const Expr&);
    friend Expr tanh(const Expr&);

  private:
    explicit Expr(detail::NodePtr n) : node_(std::move(n)) {}
    detail::NodePtr node_;
};

}  // namespace twistray
