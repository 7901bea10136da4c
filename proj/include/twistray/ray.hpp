#pragma once

#include <array>
#include <optional>
#include <vector>

#include "twistray/chart.hpp"
#include "twistray/lambda.hpp"

namespace twistray {

struct TraceOptions {
    double step = 1e-3;            // fixed RK4 step in arc length
    double max_time = 100.0;       // beyond this the ray counts as trapped
    int max_reflections = 64;      // likewise
    double tan_eps = 1e-6;         // |<v,nu>| below this flags a tangential hit
    double bisect_tol = 1e-12;     // event refinement tolerance in t
};

enum class RayStatus { Exited, Trapped, Tangential };

struct RaySample {
    double t;
    PhasePoint state;
};

// One reflection at the obstacle.
struct ReflectionEvent {
    double t = 0;
    double x = 0, y = 0;
    double theta_in = 0, theta_out = 0;
    double normal_component = 0;  // <v_in, nu>_g at incidence
};

// A traced broken ray: sampled lambda-geodesic segments joined by the
// reflection law, terminated on the emitter (or by budget/tangency).
struct BrokenRay {
    std::vector<std::vector<RaySample>> segments;
    std::vector<ReflectionEvent> events;
    RayStatus status = RayStatus::Trapped;
    PhasePoint exit{};      // valid when status == Exited
    double total_time = 0;  // travel time when exited, else integration time reached

    const RaySample& front() const { return segments.front().front(); }
    const RaySample& back() const { return segments.back().back(); }
};

// Right-hand side of the flow ODE in chart coordinates:
//   x' = e^{-phi} cos th, y' = e^{-phi} sin th,
//   th' = e^{-phi}(-phi_x sin th + phi_y cos th) + lambda.
// lambda = 0 reduces to the geodesic spray.
std::array<double, 3> generator(const Chart& chart, const LambdaField& lambda,
                                const PhasePoint& s);

// One classical RK4 step of size h (h may be negative).
PhasePoint rk4_step(const Chart& chart, const LambdaField& lambda, const PhasePoint& s, double h);

// Integrate the flow for time T (sign allowed) ignoring boundaries,
// sampling every TraceOptions::step. Used by reversibility and convexity
// probes that need the flow on the extended plane.
std::vector<RaySample> integrate_free(const Chart& chart, const LambdaField& lambda,
                                      const PhasePoint& start, double T, double h);

// Trace the broken ray from `start` until it exits through the emitter.
// Boundary crossings are detected by sign change of the defining functions
// along each step and refined by bisection; transversal hits on the
// reflector apply the reflection law and continue.
BrokenRay trace_broken_ray(const Chart& chart, const LambdaField& lambda, const PhasePoint& start,
                           const TraceOptions& opts = {});

// Forward and dual travel times from one phase point (dual = trace under
// the dual twist from the same point). Throws nothing: statuses are
// reported in the result.
struct ExitTimes {
    double tau = 0, tau_dual = 0;
    RayStatus status = RayStatus::Exited, status_dual = RayStatus::Exited;
};
ExitTimes exit_times(const Chart& chart, const LambdaField& lambda, const PhasePoint& s,
                     const TraceOptions& opts = {});

// Exit phase point of the broken ray from an inward emitter point. Throws
// TraceError on tangential/trapped rays.
PhasePoint scattering_relation(const Chart& chart, const LambdaField& lambda,
                               const PhasePoint& start, const TraceOptions& opts = {});

// Max deviation over [0, T] between the dual ray from (x,-v) and the
// time-reversed ray from (x,v): chart distance plus angle mismatch of the
// reversed velocity. Both integrations stop early at the first boundary
// hit; the comparison runs over the common time range.
double check_time_reversal(const Chart& chart, const LambdaField& lambda, const PhasePoint& s,
                           double T, double h = 1e-3);

// Dense evaluation of a traced ray at an arbitrary interior time by cubic
// Hermite interpolation of the recorded samples (state derivatives come
// from the generator). t must lie within the traced range.
PhasePoint dense_eval(const Chart& chart, const LambdaField& lambda, const BrokenRay& ray,
                      double t);

}  // namespace twistray
