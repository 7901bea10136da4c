#include "twistray/ray.hpp"

#include <cmath>

#include "twistray/errors.hpp"

namespace twistray {

namespace {
constexpr double kPi = 3.14159265358979323846;

// rho values at a state, one slot per boundary component.
struct RhoPair {
    double e, r;
};

RhoPair rho_at(const Chart& chart, const PhasePoint& s) {
    return {chart.component(BoundaryId::Emitter).rho().value(s.x, s.y),
            chart.component(BoundaryId::Reflector).rho().value(s.x, s.y)};
}

double rho_of(const RhoPair& p, BoundaryId id) { return id == BoundaryId::Emitter ? p.e : p.r; }

// Normal of the extended field, no on-boundary check: event refinement
// already guarantees |rho| <= 1e-10 at the point.
Vec2 unit_normal(const Chart& chart, BoundaryId id, double x, double y) {
    const Jet2 j = chart.component(id).rho().jet(x, y);
    const double n = std::hypot(j.x, j.y);
    const double e = std::exp(-chart.phi().value(x, y));
    return {e * j.x / n, e * j.y / n};
}

// Non-owning dual twist: lambda^-(x,v) = -lambda(x,-v).
class DualRef final : public LambdaField {
  public:
    explicit DualRef(const LambdaField& base) : base_(base) {}
    double value(double x, double y, double th) const override {
        return -base_.value(x, y, th + kPi);
    }
    SMJet jet(double x, double y, double th) const override {
        SMJet j = base_.jet(x, y, th + kPi);
        j.v = -j.v; j.x = -j.x; j.y = -j.y;
        j.th = -j.th; j.xth = -j.xth; j.yth = -j.yth; j.thth = -j.thth;
        return j;
    }
    LambdaKind kind() const override { return base_.kind(); }

  private:
    const LambdaField& base_;
};

}  // namespace

std::array<double, 3> generator(const Chart& chart, const LambdaField& lambda,
                                const PhasePoint& s) {
    const Jet2 p = chart.phi().jet(s.x, s.y);
    const double e = std::exp(-p.v);
    const double c = std::cos(s.theta), sn = std::sin(s.theta);
    return {e * c, e * sn, e * (-p.x * sn + p.y * c) + lambda.value(s.x, s.y, s.theta)};
}

PhasePoint rk4_step(const Chart& chart, const LambdaField& lambda, const PhasePoint& s, double h) {
    const auto k1 = generator(chart, lambda, s);
    const PhasePoint s2{s.x + 0.5 * h * k1[0], s.y + 0.5 * h * k1[1], s.theta + 0.5 * h * k1[2]};
    const auto k2 = generator(chart, lambda, s2);
    const PhasePoint s3{s.x + 0.5 * h * k2[0], s.y + 0.5 * h * k2[1], s.theta + 0.5 * h * k2[2]};
    const auto k3 = generator(chart, lambda, s3);
    const PhasePoint s4{s.x + h * k3[0], s.y + h * k3[1], s.theta + h * k3[2]};
    const auto k4 = generator(chart, lambda, s4);
    const double w = h / 6.0;
    return {s.x + w * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            s.y + w * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
            s.theta + w * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])};
}

std::vector<RaySample> integrate_free(const Chart& chart, const LambdaField& lambda,
                                      const PhasePoint& start, double T, double h) {
    std::vector<RaySample> out;
    const double dir = T >= 0 ? 1.0 : -1.0;
    const double absT = std::abs(T);
    const std::size_t n = static_cast<std::size_t>(std::ceil(absT / h - 1e-12));
    out.reserve(n + 1);
    out.push_back({0.0, start});
    PhasePoint s = start;
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double hs = std::min(h, absT - t);
        if (hs <= 0.0) break;
        s = rk4_step(chart, lambda, s, dir * hs);
        t += hs;
        out.push_back({dir * t, s});
    }
    return out;
}

BrokenRay trace_broken_ray(const Chart& chart, const LambdaField& lambda, const PhasePoint& start0,
                           const TraceOptions& opts) {
    if (opts.step <= 0.0) throw Error("trace_broken_ray: step must be positive");
    PhasePoint start{start0.x, start0.y, reduce_angle(start0.theta)};
    {
        const RhoPair r0 = rho_at(chart, start);
        if (r0.e < -1e-9 || r0.r < -1e-9) {
            throw Error("trace_broken_ray: start outside the domain");
        }
    }

    BrokenRay ray;
    ray.segments.emplace_back();
    ray.segments.back().push_back({0.0, start});

    // Immediate exit: started on the emitter pointing outward.
    {
        const RhoPair r0 = rho_at(chart, start);
        if (std::abs(r0.e) <= 1e-9) {
            const Vec2 nu = boundary_normal(chart, BoundaryId::Emitter, start.x, start.y);
            const double mu = chart.metric_dot(start.x, start.y, chart.velocity(start), nu);
            if (mu < 0.0) {
                ray.status = RayStatus::Exited;
                ray.exit = start;
                ray.total_time = 0.0;
                return ray;
            }
        }
    }

    PhasePoint s = start;
    double t = 0.0;
    RhoPair rho_prev = rho_at(chart, s);
    // Set right after a boundary start or a reflection: the touched
    // component reads rho ~ 0 there and must not immediately re-trigger.
    std::optional<BoundaryId> grace;
    if (std::abs(rho_prev.e) <= 1e-9) grace = BoundaryId::Emitter;
    if (std::abs(rho_prev.r) <= 1e-9) grace = BoundaryId::Reflector;

    while (t < opts.max_time) {
        const double hs = std::min(opts.step, opts.max_time - t);
        const PhasePoint snext = rk4_step(chart, lambda, s, hs);
        const RhoPair rho_next = rho_at(chart, snext);

        // Locate the earliest crossing among components that went negative.
        struct Hit {
            BoundaryId id;
            double frac;
        };
        std::optional<Hit> hit;
        for (BoundaryId id : {BoundaryId::Emitter, BoundaryId::Reflector}) {
            if (rho_of(rho_next, id) >= 0.0) {
                if (grace == id && rho_of(rho_next, id) > 1e-12) grace.reset();
                continue;
            }
            // Bracket [a, 1] with rho(a) > 0. When the step starts on the
            // component (rho ~ 0), probe forward for a positive sample; if
            // rho never becomes positive the ray is leaving tangentially and
            // the crossing is effectively at the step start.
            double a = 0.0;
            double fa = rho_of(rho_prev, id);
            if (fa <= 0.0 || grace == id) {
                bool found = false;
                for (int m = 1; m <= 40; ++m) {
                    const double frac = std::ldexp(1.0, -m);
                    const PhasePoint probe = rk4_step(chart, lambda, s, hs * frac);
                    const double fp = rho_of(rho_at(chart, probe), id);
                    if (fp > 0.0) {
                        a = frac;
                        fa = fp;
                        found = true;
                        break;
                    }
                }
                if (!found) {
                    if (!hit || 0.0 < hit->frac) hit = Hit{id, 0.0};
                    continue;
                }
            }
            double b = 1.0;
            while ((b - a) * hs > opts.bisect_tol) {
                const double m = 0.5 * (a + b);
                const PhasePoint mid = rk4_step(chart, lambda, s, hs * m);
                if (rho_of(rho_at(chart, mid), id) > 0.0) a = m; else b = m;
            }
            const double frac = 0.5 * (a + b);
            if (!hit || frac < hit->frac) hit = Hit{id, frac};
        }

        if (!hit) {
            t += hs;
            s = snext;
            rho_prev = rho_next;
            ray.segments.back().push_back({t, s});
            continue;
        }

        const double te = t + hit->frac * hs;
        PhasePoint se = hit->frac > 0.0 ? rk4_step(chart, lambda, s, hit->frac * hs) : s;
        se.theta = reduce_angle(se.theta);
        ray.segments.back().push_back({te, se});

        const Vec2 nu = unit_normal(chart, hit->id, se.x, se.y);
        const double mu = chart.metric_dot(se.x, se.y, chart.velocity(se), nu);

        if (hit->id == BoundaryId::Emitter) {
            ray.status = RayStatus::Exited;
            ray.exit = se;
            ray.total_time = te;
            return ray;
        }

        // A zero-length re-hit right after a reflection means the outgoing
        // ray still grazes into the obstacle; no transversal continuation
        // exists there.
        if (std::abs(mu) < opts.tan_eps || hit->frac == 0.0) {
            ray.status = RayStatus::Tangential;
            ray.total_time = te;
            return ray;
        }

        if (static_cast<int>(ray.events.size()) >= opts.max_reflections) {
            ray.status = RayStatus::Trapped;
            ray.total_time = te;
            return ray;
        }

        const double psi = std::atan2(nu.y, nu.x);
        const double theta_out = reflect_angle(psi, se.theta);
        ray.events.push_back({te, se.x, se.y, se.theta, theta_out, mu});

        s = {se.x, se.y, theta_out};
        t = te;
        rho_prev = rho_at(chart, s);
        grace = BoundaryId::Reflector;
        ray.segments.emplace_back();
        ray.segments.back().push_back({t, s});
    }

    ray.status = RayStatus::Trapped;
    ray.total_time = opts.max_time;
    return ray;
}

ExitTimes exit_times(const Chart& chart, const LambdaField& lambda, const PhasePoint& s,
                     const TraceOptions& opts) {
    ExitTimes out;
    const BrokenRay fwd = trace_broken_ray(chart, lambda, s, opts);
    out.tau = fwd.total_time;
    out.status = fwd.status;
    const DualRef ld(lambda);
    const BrokenRay dual_ray = trace_broken_ray(chart, ld, s, opts);
    out.tau_dual = dual_ray.total_time;
    out.status_dual = dual_ray.status;
    return out;
}

PhasePoint scattering_relation(const Chart& chart, const LambdaField& lambda,
                               const PhasePoint& start, const TraceOptions& opts) {
    const BrokenRay ray = trace_broken_ray(chart, lambda, start, opts);
    if (ray.status != RayStatus::Exited) {
        throw TraceError(ray.status == RayStatus::Trapped
                             ? "scattering_relation: ray trapped"
                             : "scattering_relation: tangential reflection");
    }
    return ray.exit;
}

double check_time_reversal(const Chart& chart, const LambdaField& lambda, const PhasePoint& s,
                           double T, double h) {
    const DualRef ld(lambda);
    const PhasePoint rev{s.x, s.y, reduce_angle(s.theta + kPi)};

    // Stop both integrations at the first boundary hit.
    auto limited = [&](const LambdaField& lf, const PhasePoint& p0, double dir) {
        std::vector<RaySample> out;
        out.push_back({0.0, p0});
        PhasePoint q = p0;
        double t = 0.0;
        while (t < T) {
            const double hs = std::min(h, T - t);
            const PhasePoint qn = rk4_step(chart, lf, q, dir * hs);
            if (!chart.inside(qn.x, qn.y)) break;
            t += hs;
            q = qn;
            out.push_back({dir * t, q});
        }
        return out;
    };

    const auto fwd = limited(ld, rev, +1.0);     // dual ray from (x, -v)
    const auto bwd = limited(lambda, s, -1.0);   // base ray run backward

    const std::size_t n = std::min(fwd.size(), bwd.size());
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const PhasePoint& a = fwd[i].state;
        const PhasePoint& b = bwd[i].state;
        const double dxy = std::hypot(a.x - b.x, a.y - b.y);
        // velocities should be opposite: theta_dual = theta + pi
        double dth = reduce_angle(a.theta) - reduce_angle(b.theta + kPi);
        dth = std::abs(std::remainder(dth, 2.0 * kPi));
        dev = std::max(dev, dxy + dth);
    }
    return dev;
}

PhasePoint dense_eval(const Chart& chart, const LambdaField& lambda, const BrokenRay& ray,
                      double t) {
    for (const auto& seg : ray.segments) {
        if (seg.size() < 2) continue;
        if (t < seg.front().t - 1e-12 || t > seg.back().t + 1e-12) continue;
        // locate the bracketing samples
        std::size_t lo = 0, hi = seg.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (seg[mid].t <= t) lo = mid; else hi = mid;
        }
        const RaySample& A = seg[lo];
        const RaySample& B = seg[hi];
        const double dt = B.t - A.t;
        if (dt <= 0.0) return A.state;
        const double u = (t - A.t) / dt;
        const auto da = generator(chart, lambda, A.state);
        const auto db = generator(chart, lambda, B.state);
        auto hermite = [&](double pa, double pb, double ma, double mb) {
            const double u2 = u * u, u3 = u2 * u;
            return (2 * u3 - 3 * u2 + 1) * pa + (u3 - 2 * u2 + u) * dt * ma +
                   (-2 * u3 + 3 * u2) * pb + (u3 - u2) * dt * mb;
        };
        return {hermite(A.state.x, B.state.x, da[0], db[0]),
                hermite(A.state.y, B.state.y, da[1], db[1]),
                hermite(A.state.theta, B.state.theta, da[2], db[2])};
    }
    throw Error("dense_eval: time outside the traced range");
}

}  // namespace twistray
