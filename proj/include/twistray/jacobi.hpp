#pragma once

#include <vector>

#include "twistray/ray.hpp"

namespace twistray {

// Coefficients of the flow differential in the moving frame {F, Xperp, V}
// along a lambda-geodesic: dphi_t(xi) = a F + b Xperp + c V. They obey the
// linear system
//   a' = -lambda b,  b' = -c,  c' = c V(lambda) + (K_lambda - F(V(lambda))) b.
struct JacobiFrame {
    double a = 0, b = 0, c = 0;
};

// The same object in chart form: the variation field J and its covariant
// derivative DJ = D_t J, both in chart components.
struct JacobiVector {
    Vec2 J{}, DJ{};
};

// Frame <-> vector dictionary at a phase point:
//   J  = a v - b iv,   DJ = (a lambda + c) iv.
// The signs were frozen against the finite-difference flow differential.
JacobiVector frame_to_vector(const Chart& chart, const LambdaField& lambda, const PhasePoint& s,
                             const JacobiFrame& f);
JacobiFrame vector_to_frame(const Chart& chart, const LambdaField& lambda, const PhasePoint& s,
                            const JacobiVector& jv);

// Jump of (J, DJ) across a reflection event:
//   J+  = rho J-,
//   DJ+ = rho DJ- - Phi_{v-}(J-) - (beta + 1) <J-,nu>/<v-,nu> rho(D_t I-),
// where I = gamma' (so D_t I- = lambda iv-) and Phi is built from the
// derivative of the extended unit normal. beta carries the jump of lambda
// across the reflection.
JacobiVector reflect_jacobi(const Chart& chart, const LambdaField& lambda,
                            const ReflectionEvent& ev, const JacobiVector& in, double beta);

// beta at an event: lambda(out)/lambda(in) when |lambda(in)| >= 1e-8;
// 1 when both values are below that; otherwise the event admits no bounded
// beta and `singular` is set (callers fall back to the FD oracle).
struct BetaValue {
    double value = 1.0;
    bool singular = false;
};
BetaValue beta_at_event(const Chart& chart, const LambdaField& lambda, const ReflectionEvent& ev);

// Full propagation along a traced broken ray: frames co-integrated on the
// ray's sample grid (joint RK4), with the reflection jump applied at
// events. Aligned with the ray's samples, segment by segment.
struct JacobiPath {
    std::vector<std::vector<double>> t;            // per segment
    std::vector<std::vector<JacobiFrame>> frames;  // per segment
    std::vector<std::vector<JacobiVector>> vectors;
    bool beta_singular = false;  // some event had no bounded beta

    JacobiVector initial() const { return vectors.front().front(); }
    JacobiVector final() const { return vectors.back().back(); }
};
JacobiPath propagate_frame(const Chart& chart, const LambdaField& lambda, const BrokenRay& ray,
                           const JacobiFrame& initial);
JacobiPath propagate_vector(const Chart& chart, const LambdaField& lambda, const BrokenRay& ray,
                            const JacobiVector& initial);

// Independent oracle: realize J(t) = d/ds gamma_s(t) by central differences
// of two traced broken rays with perturbed initial data. The perturbation
// is the phase-space direction with initial value (J0, DJ0). Throws
// TraceError when a perturbed ray changes its reflection count.
struct FdJacobi {
    std::vector<double> t;
    std::vector<JacobiVector> values;
};
FdJacobi flow_differential_fd(const Chart& chart, const LambdaField& lambda,
                              const PhasePoint& start, const JacobiVector& initial,
                              const std::vector<double>& times, double s = 1e-5,
                              const TraceOptions& opts = {});

// Growth diagnostics on a propagated path: the smallest C with
// E(t) <= e^{Ct} E(0) segment-wise (E = |J|^2 + |DJ|^2), per-reflection
// jump factors, and the (A, B) pair for the broken bound
// E(t) <= A e^{Bt} (E(0) + 1 + sup|lambda|^2).
struct GrowthReport {
    double segment_C = 0;           // exponential rate within segments
    double max_jump_factor = 1;     // max E(t+)/E(t-) across events
    double A = 1, B = 0;            // fitted broken-bound constants
    int violations = 0;             // samples exceeding the fitted bound
};
GrowthReport growth_bound_check(const Chart& chart, const LambdaField& lambda,
                                const BrokenRay& ray, const JacobiPath& path,
                                double lambda_sup);

}  // namespace twistray
