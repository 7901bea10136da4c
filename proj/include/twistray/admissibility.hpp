#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "twistray/ray.hpp"

namespace twistray {

struct AdmissibilityOptions {
    int n_boundary = 256;       // boundary base points per component
    int n_fiber = 64;           // fiber samples per boundary point
    int n_interior = 20000;     // interior SM samples for the curvature sign
    int n_rays = 10000;         // ray census size
    std::uint64_t seed = 1;
    TraceOptions trace{};
};

// Witness of an extremal value.
struct Witness {
    double x = 0, y = 0, theta = 0;
    double value = 0;
};

// One report per condition of the admissible-system definition:
// (1) emitter strictly convex against the twist,
// (2) reflector curvature (kappa_lambda + eta_lambda, even parts) <= 0,
// (3) K_lambda <= 0 on SM,
// (4) nontrapping (census),
// (5) at most one near-tangential reflection per ray.
struct AdmissibilityReport {
    // min over emitter tangent fibers of sff(v,v) - <lambda iv, nu>
    double emitter_convexity_margin = 0;
    Witness emitter_witness;
    // max over reflector fibers of (kappa_lambda)_e + (eta_lambda)_e
    double reflector_max_curvature = 0;
    Witness reflector_witness;
    // max over interior SM samples of K_lambda
    double max_lambda_curvature = 0;
    Witness curvature_witness;
    // ray census
    double max_tau = 0, max_tau_dual = 0;
    int trapped_count = 0;
    int tangential_count = 0;
    int census_rays = 0;
    int max_reflections = 0;
    // largest a consistent with condition (5) on the sampled rays (capped
    // at 1; every sampled ray had at most one reflection with |mu| < a)
    double transversality_a = 1.0;

    bool emitter_ok = false, reflector_ok = false, curvature_ok = false, nontrapping_ok = false,
         transversal_ok = false;
    bool admissible = false;
};

AdmissibilityReport check_admissible(const Chart& chart, const LambdaField& lambda,
                                     const AdmissibilityOptions& opts = {});

// Both sides of the dual crosscheck on sampled reflector fibers:
// (kappa_{lambda^-})_e(x,v) + (eta_{lambda^-})_e(x,v) versus
// (kappa_lambda)_e(x,-v) + (eta_lambda)_e(x,-v); returns the max
// discrepancy.
double dual_admissibility_crosscheck(const Chart& chart, const LambdaField& lambda,
                                     int n_samples = 2000, std::uint64_t seed = 1);

// Dynamical convexity probe: for tangential starts on the emitter the
// second derivative of rho_E along the ray at t = 0 must have the opposite
// sign of the convexity margin. Returns the number of sign disagreements.
int convexity_sign_crosscheck(const Chart& chart, const LambdaField& lambda, int n_samples = 100,
                              std::uint64_t seed = 1);

}  // namespace twistray
