#include "twistray/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "twistray/errors.hpp"

namespace twistray {
namespace detail {

enum class Op {
    Const,
    Variable,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
};

struct ExprNode {
    Op op = Op::Const;
    double value = 0.0;
    Var var = Var::X;
    NodePtr a, b;
};

namespace {

NodePtr make_const(double c) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Const;
    n->value = c;
    return n;
}

NodePtr make_var(Var v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Variable;
    n->var = v;
    return n;
}

bool is_const(const NodePtr& n, double* c = nullptr) {
    if (n->op != Op::Const) return false;
    if (c) *c = n->value;
    return true;
}

bool is_const_value(const NodePtr& n, double v) {
    double c;
    return is_const(n, &c) && c == v;
}

NodePtr make_node(Op op, NodePtr a, NodePtr b = nullptr) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

// Constructors with light algebraic simplification. Keeping derivative
// trees small matters: they are evaluated inside RK4 inner loops.
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr divide(NodePtr a, NodePtr b);
NodePtr neg(NodePtr a);
NodePtr power(NodePtr a, NodePtr b);
NodePtr apply(Op op, NodePtr a);

NodePtr add(NodePtr a, NodePtr b) {
    double ca, cb;
    if (is_const(a, &ca) && is_const(b, &cb)) return make_const(ca + cb);
    if (is_const_value(a, 0.0)) return b;
    if (is_const_value(b, 0.0)) return a;
    return make_node(Op::Add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
    double ca, cb;
    if (is_const(a, &ca) && is_const(b, &cb)) return make_const(ca - cb);
    if (is_const_value(b, 0.0)) return a;
    if (is_const_value(a, 0.0)) return neg(std::move(b));
    return make_node(Op::Sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
    double ca, cb;
    if (is_const(a, &ca) && is_const(b, &cb)) return make_const(ca * cb);
    if (is_const_value(a, 0.0) || is_const_value(b, 0.0)) return make_const(0.0);
    if (is_const_value(a, 1.0)) return b;
    if (is_const_value(b, 1.0)) return a;
    if (is_const_value(a, -1.0)) return neg(std::move(b));
    if (is_const_value(b, -1.0)) return neg(std::move(a));
    return make_node(Op::Mul, std::move(a), std::move(b));
}

NodePtr divide(NodePtr a, NodePtr b) {
    double ca, cb;
    if (is_const(b, &cb) && cb != 0.0) {
        if (is_const(a, &ca)) return make_const(ca / cb);
        return mul(make_const(1.0 / cb), std::move(a));
    }
    if (is_const_value(a, 0.0)) return make_const(0.0);
    return make_node(Op::Div, std::move(a), std::move(b));
}

NodePtr neg(NodePtr a) {
    double ca;
    if (is_const(a, &ca)) return make_const(-ca);
    if (a->op == Op::Neg) return a->a;
    return make_node(Op::Neg, std::move(a));
}

NodePtr power(NodePtr a, NodePtr b) {
    double ca, cb;
    if (is_const_value(b, 0.0)) return make_const(1.0);
    if (is_const_value(b, 1.0)) return a;
    if (is_const(a, &ca) && is_const(b, &cb)) return make_const(std::pow(ca, cb));
    return make_node(Op::Pow, std::move(a), std::move(b));
}

NodePtr apply(Op op, NodePtr a) {
    double ca;
    if (is_const(a, &ca)) {
        switch (op) {
            case Op::Sin: return make_const(std::sin(ca));
            case Op::Cos: return make_const(std::cos(ca));
            case Op::Exp: return make_const(std::exp(ca));
            case Op::Tanh: return make_const(std::tanh(ca));
            case Op::Log:
                if (ca > 0.0) return make_const(std::log(ca));
                break;  // keep symbolic; error surfaces at eval
            case Op::Sqrt:
                if (ca >= 0.0) return make_const(std::sqrt(ca));
                break;
            default: break;
        }
    }
    return make_node(op, std::move(a));
}

double eval_node(const ExprNode& n, double x, double y, double th) {
    switch (n.op) {
        case Op::Const: return n.value;
        case Op::Variable:
            return n.var == Var::X ? x : (n.var == Var::Y ? y : th);
        case Op::Add: return eval_node(*n.a, x, y, th) + eval_node(*n.b, x, y, th);
        case Op::Sub: return eval_node(*n.a, x, y, th) - eval_node(*n.b, x, y, th);
        case Op::Mul: return eval_node(*n.a, x, y, th) * eval_node(*n.b, x, y, th);
        case Op::Div: {
            const double num = eval_node(*n.a, x, y, th);
            const double den = eval_node(*n.b, x, y, th);
            if (den == 0.0) throw EvalError("division by zero");
            return num / den;
        }
        case Op::Pow: {
            const double base = eval_node(*n.a, x, y, th);
            const double e = eval_node(*n.b, x, y, th);
            if (base < 0.0 && e != std::floor(e)) {
                throw EvalError("fractional power of a negative value");
            }
            return std::pow(base, e);
        }
        case Op::Neg: return -eval_node(*n.a, x, y, th);
        case Op::Sin: return std::sin(eval_node(*n.a, x, y, th));
        case Op::Cos: return std::cos(eval_node(*n.a, x, y, th));
        case Op::Exp: return std::exp(eval_node(*n.a, x, y, th));
        case Op::Log: {
            const double v = eval_node(*n.a, x, y, th);
            if (v <= 0.0) throw EvalError("log of a nonpositive value");
            return std::log(v);
        }
        case Op::Sqrt: {
            const double v = eval_node(*n.a, x, y, th);
            if (v < 0.0) throw EvalError("sqrt of a negative value");
            return std::sqrt(v);
        }
        case Op::Tanh: return std::tanh(eval_node(*n.a, x, y, th));
    }
    throw Error("corrupt expression node");
}

NodePtr diff_node(const NodePtr& n, Var v) {
    switch (n->op) {
        case Op::Const: return make_const(0.0);
        case Op::Variable: return make_const(n->var == v ? 1.0 : 0.0);
        case Op::Add: return add(diff_node(n->a, v), diff_node(n->b, v));
        case Op::Sub: return sub(diff_node(n->a, v), diff_node(n->b, v));
        case Op::Mul:
            return add(mul(diff_node(n->a, v), n->b), mul(n->a, diff_node(n->b, v)));
        case Op::Div:
            // (a/b)' = a'/b - a b'/b^2
            return sub(divide(diff_node(n->a, v), n->b),
                       divide(mul(n->a, diff_node(n->b, v)), mul(n->b, n->b)));
        case Op::Pow: {
            double e;
            if (is_const(n->b, &e)) {
                // d a^e = e a^(e-1) a'
                return mul(mul(make_const(e), power(n->a, make_const(e - 1.0))),
                           diff_node(n->a, v));
            }
            // d a^b = a^b (b' log a + b a'/a)
            NodePtr self = make_node(Op::Pow, n->a, n->b);
            NodePtr t1 = mul(diff_node(n->b, v), apply(Op::Log, n->a));
            NodePtr t2 = divide(mul(n->b, diff_node(n->a, v)), n->a);
            return mul(std::move(self), add(std::move(t1), std::move(t2)));
        }
        case Op::Neg: return neg(diff_node(n->a, v));
        case Op::Sin: return mul(apply(Op::Cos, n->a), diff_node(n->a, v));
        case Op::Cos: return neg(mul(apply(Op::Sin, n->a), diff_node(n->a, v)));
        case Op::Exp: return mul(make_node(Op::Exp, n->a), diff_node(n->a, v));
        case Op::Log: return divide(diff_node(n->a, v), n->a);
        case Op::Sqrt:
            return divide(diff_node(n->a, v),
                          mul(make_const(2.0), make_node(Op::Sqrt, n->a)));
        case Op::Tanh: {
            NodePtr t = make_node(Op::Tanh, n->a);
            return mul(sub(make_const(1.0), mul(t, t)), diff_node(n->a, v));
        }
    }
    throw Error("corrupt expression node");
}

void print_node(const ExprNode& n, std::ostream& os) {
    switch (n.op) {
        case Op::Const: os << n.value; return;
        case Op::Variable:
            os << (n.var == Var::X ? "x" : (n.var == Var::Y ? "y" : "theta"));
            return;
        case Op::Add: os << '('; print_node(*n.a, os); os << " + "; print_node(*n.b, os); os << ')'; return;
        case Op::Sub: os << '('; print_node(*n.a, os); os << " - "; print_node(*n.b, os); os << ')'; return;
        case Op::Mul: os << '('; print_node(*n.a, os); os << " * "; print_node(*n.b, os); os << ')'; return;
        case Op::Div: os << '('; print_node(*n.a, os); os << " / "; print_node(*n.b, os); os << ')'; return;
        case Op::Pow: os << '('; print_node(*n.a, os); os << '^'; print_node(*n.b, os); os << ')'; return;
        case Op::Neg: os << "(-"; print_node(*n.a, os); os << ')'; return;
        case Op::Sin: os << "sin("; print_node(*n.a, os); os << ')'; return;
        case Op::Cos: os << "cos("; print_node(*n.a, os); os << ')'; return;
        case Op::Exp: os << "exp("; print_node(*n.a, os); os << ')'; return;
        case Op::Log: os << "log("; print_node(*n.a, os); os << ')'; return;
        case Op::Sqrt: os << "sqrt("; print_node(*n.a, os); os << ')'; return;
        case Op::Tanh: os << "tanh("; print_node(*n.a, os); os << ')'; return;
    }
}

// Recursive-descent parser.
class Parser {
  public:
    explicit Parser(const std::string& src) : src_(src) {}

    NodePtr run() {
        NodePtr e = parse_expr();
        skip_space();
        if (pos_ != src_.size()) throw SyntaxError("unexpected trailing input", pos_);
        return e;
    }

  private:
    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            skip_space();
            if (consume('+')) {
                lhs = add(std::move(lhs), parse_term());
            } else if (consume('-')) {
                lhs = sub(std::move(lhs), parse_term());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            skip_space();
            if (consume('*')) {
                lhs = mul(std::move(lhs), parse_unary());
            } else if (consume('/')) {
                lhs = divide(std::move(lhs), parse_unary());
            } else {
                return lhs;
            }
        }
    }

    NodePtr parse_unary() {
        skip_space();
        if (consume('-')) return neg(parse_unary());
        if (consume('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        skip_space();
        if (consume('^')) {
            // right associative; exponent may carry a sign: x^-2
            return power(std::move(base), parse_unary());
        }
        return base;
    }

    NodePtr parse_primary() {
        skip_space();
        if (pos_ >= src_.size()) throw SyntaxError("unexpected end of input", pos_);
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = parse_expr();
            skip_space();
            if (!consume(')')) throw SyntaxError("expected ')'", pos_);
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        std::size_t consumed = 0;
        double value;
        try {
            value = std::stod(src_.substr(start), &consumed);
        } catch (const std::exception&) {
            throw SyntaxError("malformed number", start);
        }
        pos_ = start + consumed;
        return make_const(value);
    }

    NodePtr parse_ident() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
            ++pos_;
        }
        const std::string name = src_.substr(start, pos_ - start);
        if (name == "x") return make_var(Var::X);
        if (name == "y") return make_var(Var::Y);
        if (name == "theta") return make_var(Var::Theta);
        if (name == "pi") return make_const(3.14159265358979323846);

        Op op;
        if (name == "sin") op = Op::Sin;
        else if (name == "cos") op = Op::Cos;
        else if (name == "exp") op = Op::Exp;
        else if (name == "log") op = Op::Log;
        else if (name == "sqrt") op = Op::Sqrt;
        else if (name == "tanh") op = Op::Tanh;
        else throw SyntaxError("unknown identifier '" + name + "'", start);

        skip_space();
        if (!consume('(')) throw SyntaxError("expected '(' after function name", pos_);
        NodePtr arg = parse_expr();
        skip_space();
        if (!consume(')')) throw SyntaxError("expected ')'", pos_);
        return apply(op, std::move(arg));
    }

    void skip_space() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    const std::string& src_;
    std::size_t pos_ = 0;
};

}  // namespace
}  // namespace detail

using detail::ExprNode;

Expr::Expr() : node_(detail::make_const(0.0)) {}

Expr Expr::parse(const std::string& source) { return Expr(detail::Parser(source).run()); }

Expr Expr::constant(double c) { return Expr(detail::make_const(c)); }

Expr Expr::variable(Var v) { return Expr(detail::make_var(v)); }

double Expr::eval(double x, double y, double theta) const {
    return detail::eval_node(*node_, x, y, theta);
}

Expr Expr::diff(Var v) const { return Expr(detail::diff_node(node_, v)); }

bool Expr::is_zero() const { return detail::is_const_value(node_, 0.0); }

bool Expr::is_constant(double* value) const { return detail::is_const(node_, value); }

std::string Expr::str() const {
    std::ostringstream os;
    detail::print_node(*node_, os);
    return os.str();
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(detail::add(a.node_, b.node_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(detail::sub(a.node_, b.node_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(detail::mul(a.node_, b.node_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(detail::divide(a.node_, b.node_)); }
Expr operator-(const Expr& a) { return Expr(detail::neg(a.node_)); }
Expr pow(const Expr& a, const Expr& b) { return Expr(detail::power(a.node_, b.node_)); }
Expr sin(const Expr& a) { return Expr(detail::apply(detail::Op::Sin, a.node_)); }
Expr cos(const Expr& a) { return Expr(detail::apply(detail::Op::Cos, a.node_)); }
Expr exp(const Expr& a) { return Expr(detail::apply(detail::Op::Exp, a.node_)); }
Expr log(const Expr& a) { return Expr(detail::apply(detail::Op::Log, a.node_)); }
Expr sqrt(const Expr& a) { return Expr(detail::apply(detail::Op::Sqrt, a.node_)); }
Expr tanh(const Expr& a) { return Expr(detail::apply(detail::Op::Tanh, a.node_)); }

}  // namespace twistray
