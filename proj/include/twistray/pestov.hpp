#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "twistray/smgrid.hpp"
#include "twistray/transform.hpp"

namespace twistray {

// Smooth test functions on SM travel as LambdaField objects (value plus
// the partials the frame operators need).
using SMFunction = LambdaField;
using SMFunctionPtr = LambdaPtr;

using GridFn = std::vector<double>;

enum class FrameVec { X, V, Xperp, F };

// Sample an analytic SM function on the grid (all nodes of the box).
GridFn sample(const SMGrid& grid, const SMFunction& u);

// Apply a frame vector field to a sampled function: centered second-order
// stencils in x, y (one-sided second order where a neighbour is outside),
// centered periodic fourth-order stencil in theta. Values are meaningful
// at inside nodes.
GridFn apply_field(const SMGrid& grid, const Chart& chart, const LambdaField& lambda,
                   FrameVec which, const GridFn& u);

// L^2 norms over body nodes of the six commutator residuals:
//   [X,V]-Xperp, [Xperp,V]+X, [X,Xperp]+KV,
//   [V,F]+Xperp-V(lambda)V, [V,Xperp]-F+lambda V, [F,Xperp]-lambda F+(K+Xperp(lambda)+lambda^2)V
struct StructureReport {
    double xv = 0, xperpv = 0, xxperp = 0, vf = 0, vxperp = 0, fxperp = 0;
    double max() const;
};
StructureReport structure_residuals(const SMGrid& grid, const Chart& chart,
                                    const LambdaField& lambda, const GridFn& u);

// Integration-by-parts defects for sampled u, w:
//   (Xu,w) + (u,Xw) + (<v,nu> u, w)_b,  (Xperp u,w) + (u,Xperp w) + (<v_perp,nu> u, w)_b,
//   (Vu,w) + (u,Vw).
// The boundary pairings need boundary traces; for compactly supported u, w
// the boundary terms vanish and the plain sums are returned.
struct IbpReport {
    double x = 0, xperp = 0, v = 0;
};
IbpReport integration_by_parts_compact(const SMGrid& grid, const Chart& chart,
                                       const GridFn& u, const GridFn& w);

// Vertical Fourier decomposition: per cell DFT along the fiber.
struct VerticalModes {
    int nth = 0;
    int cells = 0;
    std::vector<std::complex<double>> c;  // [cell * nth + (k + nth/2)]
    std::complex<double> coef(int cell, int k) const { return c[cell * nth + (k + nth / 2)]; }
};
VerticalModes vertical_fourier(const SMGrid& grid, const GridFn& u);
double mode_norm2(const SMGrid& grid, const VerticalModes& m, int k);
double parseval_defect(const SMGrid& grid, const GridFn& u, const VerticalModes& m);

// The energy identity report: all five terms by grid quadrature plus both
// sides and the relative residual. u analytic.
struct PestovReport {
    double pu2 = 0, ptu2 = 0, curvature = 0, fu2 = 0, boundary = 0;
    double lhs = 0, rhs = 0;
    double rel_residual = 0;
    int nx = 0, ny = 0, ntheta = 0;
};
PestovReport pestov_residual(const SMGrid& grid, const Chart& chart, const LambdaField& lambda,
                             const SMFunction& u);

// Boundary data of a function on the rings: value plus the three frame
// derivatives entering the tangential operator. Built either from an
// analytic function or from a traced primitive (value by tracing, Fu from
// the transport law, Xperp/V by one-sided finite differences).
struct RingData {
    // arrays indexed [m * n_th + k]
    std::vector<double> u, vu, fu, xperpu;
};
RingData ring_data_analytic(const SMGrid::Ring& ring, const Chart& chart,
                            const LambdaField& lambda, const SMFunction& u);
RingData ring_data_primitive(const SMGrid::Ring& ring, const Chart& chart,
                             const LambdaField& lambda, const Integrand& f,
                             const TraceOptions& opts = {});

// Even/odd reduction of the boundary pairing, per ring (each boundary
// component is a closed torus in its own right, so the identities hold
// component by component):
//   lhs      = (nabla_{T,lambda} u, Vu) over the ring
//   rhs_full = the even/odd decomposition with the tangential operator
//   rhs_reduced = -(((kappa_lambda)_e + (eta_lambda)_e) Vu, Vu) (valid when
//                 u o rho = u on the ring; evenness_defect reports how far
//                 that holds)
struct RingReduction {
    double lhs = 0;
    double rhs_full = 0;
    double rhs_reduced = 0;
    double evenness_defect = 0;
};
struct BoundaryReductionReport {
    RingReduction emitter, reflector;
    double lhs = 0, rhs_full = 0, rhs_reduced = 0;       // totals over both rings
    double orthogonality_defect = 0;  // (u_e, w_o) + (u_o, w_e) for probe arrays
};
BoundaryReductionReport boundary_decomposition(const SMGrid& grid, const Chart& chart,
                                               const LambdaField& lambda, const RingData& em,
                                               const RingData& re);

}  // namespace twistray
