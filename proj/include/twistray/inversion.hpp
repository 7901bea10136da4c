#pragma once

#include <Eigen/Dense>

#include "twistray/smgrid.hpp"
#include "twistray/transform.hpp"

namespace twistray {

// Scalar basis on the annulus: shifted-Legendre radial polynomials times an
// angular Fourier block {1, cos, sin, ..., cos(m_max a), sin(m_max a)};
// dimension m0 = n_r (2 m_max + 1). The 1-form basis puts the same scalar
// family in each chart component (dimension 2 m0).
struct BasisSpec {
    Vec2 center{0, 0};
    double r0 = 0.5, r1 = 1.0;
    int n_r = 5, m_max = 2;

    int angular_count() const { return 2 * m_max + 1; }
    int m0() const { return n_r * angular_count(); }

    // unnormalized evaluations
    double scalar(int p, double x, double y) const;
    Vec2 scalar_grad(int p, double x, double y) const;

    // Gauge potentials: analytic h vanishing on r = r1 (the emitter circle
    // for the standard annulus configs) whose differential lies exactly in
    // the form span. Complete in-span enumeration:
    //   angular mean:    h = (r - r1) P_j,          j <= n_r - 1,
    //   order m < m_max: h = r (r - r1) P_j Theta_m, j <= n_r - 2.
    // For other emitter shapes dh need not be exactly in the span; the
    // projection residual is reported.
    struct Potential {
        int m = 0;       // angular order
        bool is_sin = false;
        int j = 0;       // radial polynomial index
    };
    std::vector<Potential> gauge_potentials() const;
    double potential_S(const Potential& g, double x, double y) const;
    Vec2 potential_S_grad(const Potential& g, double x, double y) const;
};

struct RayFan {
    int n_points = 50, n_angles = 40;
    double glancing_margin = 0.05;  // radians off the tangent directions
};

// Discretized transform: rows are I(basis element) along emitter rays.
struct ForwardSystem {
    BasisSpec basis;
    Eigen::MatrixXd A;               // n_rays_exited x 3 m0
    std::vector<PhasePoint> starts;  // the rays behind the rows
    Eigen::VectorXd scalar_norms;    // L2(M) normalization per scalar element
    Eigen::MatrixXd gram_scalar;     // m0 x m0, dV^2, normalized basis
    Eigen::MatrixXd gram_form;       // 2 m0 x 2 m0, 1-form L2, normalized
    Eigen::MatrixXd gauge;           // 3 m0 x n_g coefficient vectors
    Eigen::VectorXd gauge_residual;  // relative span-projection residuals

    int columns() const { return 3 * basis.m0(); }
};

ForwardSystem assemble(const Chart& chart, const LambdaField& lambda, const BasisSpec& basis,
                       const RayFan& fan, const SMGrid& quad_grid,
                       const TraceOptions& opts = {});

// Transform value of one basis column along one traced ray, same quadrature
// code path as the matrix rows.
double basis_column_value(const Chart& chart, const ForwardSystem& sys, int column,
                          const BrokenRay& ray);

struct KernelReport {
    Eigen::VectorXd singular_values;  // of A restricted to the gauge complement
    double sigma_max = 0, sigma_min = 0;
    double margin = 0;                     // sigma_min / sigma_max on the complement
    double max_gauge_rayleigh = 0;         // max ||A g|| / ||g|| over gauge directions
    double max_gauge_rayleigh_rel = 0;     // relative to sigma_max
    double max_gauge_residual = 0;         // span-projection quality
};
KernelReport kernel_analysis(const ForwardSystem& sys);

struct Regularization {
    enum class Kind { TruncatedSvd, Tikhonov } kind = Kind::TruncatedSvd;
    double value = 1e-4;  // relative sigma cutoff, or Tikhonov weight
};

struct Reconstruction {
    Eigen::VectorXd coef;                  // raw least-squares coefficients
    Eigen::VectorXd coef_gauge_normalized; // alpha block minus its best gauge fit
    int rank = 0;
};
Reconstruction reconstruct(const ForwardSystem& sys, const Eigen::VectorXd& data,
                           const Regularization& reg = {});

// Relative L2(M) errors of a reconstruction against analytic truth; the
// 1-form error is computed after gauge-normalizing both sides.
struct ErrorReport {
    double f0_rel = 0;
    double alpha_rel = 0;
};
ErrorReport reconstruction_errors(const Chart& chart, const SMGrid& quad_grid,
                                  const ForwardSystem& sys, const Reconstruction& rec,
                                  const Integrand& truth);

// Synthetic data: the transform of an integrand over the system's rays.
Eigen::VectorXd synthesize_data(const Chart& chart, const LambdaField& lambda,
                                const ForwardSystem& sys, const Integrand& f,
                                const TraceOptions& opts = {});

}  // namespace twistray
