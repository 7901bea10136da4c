#include <cmath>

#include "twistray/inversion.hpp"

namespace twistray {

namespace {

// shifted Legendre values P_0..P_{n-1} at xi in [-1, 1]
void legendre(int n, double xi, double* out) {
    if (n > 0) out[0] = 1.0;
    if (n > 1) out[1] = xi;
    for (int k = 1; k + 1 < n; ++k) {
        out[k + 1] = ((2 * k + 1) * xi * out[k] - k * out[k - 1]) / (k + 1);
    }
}

void legendre_deriv(int n, const double* p, double* out) {
    if (n > 0) out[0] = 0.0;
    if (n > 1) out[1] = 1.0;
    for (int k = 1; k + 1 < n; ++k) {
        out[k + 1] = out[k - 1] + (2 * k + 1) * p[k];
    }
}

struct Polar {
    double r, alpha, c, s;  // c = cos(alpha), s = sin(alpha)
};

Polar to_polar(const BasisSpec& b, double x, double y) {
    const double dx = x - b.center.x, dy = y - b.center.y;
    const double r = std::hypot(dx, dy);
    const double alpha = std::atan2(dy, dx);
    return {r, alpha, std::cos(alpha), std::sin(alpha)};
}

// angular factor and derivative for the block index a
double angular(int a, double alpha, double* dalpha) {
    if (a == 0) {
        if (dalpha) *dalpha = 0.0;
        return 1.0;
    }
    const int m = (a + 1) / 2;
    if (a % 2 == 1) {
        if (dalpha) *dalpha = -m * std::sin(m * alpha);
        return std::cos(m * alpha);
    }
    if (dalpha) *dalpha = m * std::cos(m * alpha);
    return std::sin(m * alpha);
}

}  // namespace

double BasisSpec::scalar(int p, double x, double y) const {
    const int i = p / angular_count();
    const int a = p % angular_count();
    const Polar q = to_polar(*this, x, y);
    const double xi = (2.0 * q.r - (r0 + r1)) / (r1 - r0);
    double leg[16];
    legendre(n_r, xi, leg);
    return leg[i] * angular(a, q.alpha, nullptr);
}

Vec2 BasisSpec::scalar_grad(int p, double x, double y) const {
    const int i = p / angular_count();
    const int a = p % angular_count();
    const Polar q = to_polar(*this, x, y);
    const double xi = (2.0 * q.r - (r0 + r1)) / (r1 - r0);
    double leg[16], dleg[16];
    legendre(n_r, xi, leg);
    legendre_deriv(n_r, leg, dleg);
    double dang;
    const double ang = angular(a, q.alpha, &dang);
    const double dr = dleg[i] * (2.0 / (r1 - r0)) * ang;
    const double da = leg[i] * dang;
    // chart gradient from polar derivatives
    return {q.c * dr - q.s * da / q.r, q.s * dr + q.c * da / q.r};
}

std::vector<BasisSpec::Potential> BasisSpec::gauge_potentials() const {
    std::vector<Potential> out;
    for (int j = 0; j < n_r; ++j) out.push_back({0, false, j});
    for (int m = 1; m < m_max; ++m) {
        for (int j = 0; j + 1 < n_r; ++j) {
            out.push_back({m, false, j});
            out.push_back({m, true, j});
        }
    }
    return out;
}

double BasisSpec::potential_S(const Potential& g, double x, double y) const {
    const Polar q = to_polar(*this, x, y);
    const double xi = (2.0 * q.r - (r0 + r1)) / (r1 - r0);
    double leg[16];
    legendre(n_r, xi, leg);
    const double vanish = q.r - r1;
    const double radial = (g.m == 0) ? vanish * leg[g.j] : q.r * vanish * leg[g.j];
    const double ang = (g.m == 0) ? 1.0
                                  : (g.is_sin ? std::sin(g.m * q.alpha)
                                              : std::cos(g.m * q.alpha));
    return radial * ang;
}

Vec2 BasisSpec::potential_S_grad(const Potential& g, double x, double y) const {
    const Polar q = to_polar(*this, x, y);
    const double xi = (2.0 * q.r - (r0 + r1)) / (r1 - r0);
    double leg[16], dleg[16];
    legendre(n_r, xi, leg);
    legendre_deriv(n_r, leg, dleg);
    const double dP = dleg[g.j] * (2.0 / (r1 - r0));
    const double vanish = q.r - r1;
    double radial, dradial;
    if (g.m == 0) {
        radial = vanish * leg[g.j];
        dradial = leg[g.j] + vanish * dP;
    } else {
        radial = q.r * vanish * leg[g.j];
        dradial = (2.0 * q.r - r1) * leg[g.j] + q.r * vanish * dP;
    }
    double ang, dang;
    if (g.m == 0) {
        ang = 1.0;
        dang = 0.0;
    } else if (g.is_sin) {
        ang = std::sin(g.m * q.alpha);
        dang = g.m * std::cos(g.m * q.alpha);
    } else {
        ang = std::cos(g.m * q.alpha);
        dang = -g.m * std::sin(g.m * q.alpha);
    }
    const double dr = dradial * ang;
    const double da = radial * dang;
    return {q.c * dr - q.s * da / q.r, q.s * dr + q.c * da / q.r};
}

}  // namespace twistray
