#include "twistray/jacobi.hpp"

#include <cmath>

#include "twistray/errors.hpp"

namespace twistray {

namespace {

// ODE state (x, y, theta, a, b, c): ray and frame co-integrated so the
// frame coefficients see the exact RK4 stage states. The c equation uses
// K_lambda - F(V(lambda)) = K + Xperp(lambda) + lambda^2, so no second
// vertical derivatives are needed here.
struct JointState {
    PhasePoint s;
    JacobiFrame f;
};

JointState joint_rhs(const Chart& chart, const LambdaField& lambda, const JointState& u) {
    const Jet2 p = chart.phi().jet(u.s.x, u.s.y);
    const double e = std::exp(-p.v);
    const double cth = std::cos(u.s.theta), sth = std::sin(u.s.theta);
    const SMJet lj = lambda.jet(u.s.x, u.s.y, u.s.theta);

    JointState d;
    d.s.x = e * cth;
    d.s.y = e * sth;
    d.s.theta = e * (-p.x * sth + p.y * cth) + lj.v;

    const double K = -std::exp(-2.0 * p.v) * (p.xx + p.yy);
    const double xperp_l = e * (sth * lj.x - cth * lj.y + (p.x * cth + p.y * sth) * lj.th);
    d.f.a = -lj.v * u.f.b;
    d.f.b = -u.f.c;
    d.f.c = u.f.c * lj.th + (K + xperp_l + lj.v * lj.v) * u.f.b;
    return d;
}

JointState joint_rk4(const Chart& chart, const LambdaField& lambda, const JointState& u,
                     double h) {
    auto axpy = [](const JointState& base, double w, const JointState& k) {
        JointState r = base;
        r.s.x += w * k.s.x;
        r.s.y += w * k.s.y;
        r.s.theta += w * k.s.theta;
        r.f.a += w * k.f.a;
        r.f.b += w * k.f.b;
        r.f.c += w * k.f.c;
        return r;
    };
    const JointState k1 = joint_rhs(chart, lambda, u);
    const JointState k2 = joint_rhs(chart, lambda, axpy(u, 0.5 * h, k1));
    const JointState k3 = joint_rhs(chart, lambda, axpy(u, 0.5 * h, k2));
    const JointState k4 = joint_rhs(chart, lambda, axpy(u, h, k3));
    JointState r = axpy(u, h / 6.0, k1);
    r = axpy(r, h / 3.0, k2);
    r = axpy(r, h / 3.0, k3);
    r = axpy(r, h / 6.0, k4);
    return r;
}

Vec2 rho_vec(const Chart& chart, double x, double y, Vec2 nu, Vec2 w) {
    return w - 2.0 * chart.metric_dot(x, y, w, nu) * nu;
}

}  // namespace

JacobiVector frame_to_vector(const Chart& chart, const LambdaField& lambda, const PhasePoint& s,
                             const JacobiFrame& f) {
    const Vec2 v = chart.velocity(s);
    const Vec2 iv = rot90(v);
    const double lam = lambda.value(s.x, s.y, s.theta);
    JacobiVector jv;
    jv.J = f.a * v - f.b * iv;
    jv.DJ = (f.a * lam + f.c) * iv;
    return jv;
}

JacobiFrame vector_to_frame(const Chart& chart, const LambdaField& lambda, const PhasePoint& s,
                            const JacobiVector& jv) {
    const Vec2 v = chart.velocity(s);
    const Vec2 iv = rot90(v);
    const double lam = lambda.value(s.x, s.y, s.theta);
    JacobiFrame f;
    f.a = chart.metric_dot(s.x, s.y, jv.J, v);
    f.b = -chart.metric_dot(s.x, s.y, jv.J, iv);
    f.c = chart.metric_dot(s.x, s.y, jv.DJ, iv) - f.a * lam;
    return f;
}

BetaValue beta_at_event(const Chart& chart, const LambdaField& lambda,
                        const ReflectionEvent& ev) {
    (void)chart;
    const double lin = lambda.value(ev.x, ev.y, ev.theta_in);
    const double lout = lambda.value(ev.x, ev.y, ev.theta_out);
    BetaValue b;
    if (std::abs(lin) >= 1e-8) {
        b.value = lout / lin;
    } else if (std::abs(lout) < 1e-8) {
        b.value = 1.0;
    } else {
        b.singular = true;
    }
    return b;
}

JacobiVector reflect_jacobi(const Chart& chart, const LambdaField& lambda,
                            const ReflectionEvent& ev, const JacobiVector& in, double beta) {
    const PhasePoint sin_{ev.x, ev.y, ev.theta_in};
    const Vec2 zeta = chart.velocity(sin_);  // incoming g-unit velocity
    const Vec2 nu = boundary_normal(chart, BoundaryId::Reflector, ev.x, ev.y);
    const double zn = chart.metric_dot(ev.x, ev.y, zeta, nu);
    if (std::abs(zn) < 1e-14) throw TraceError("reflect_jacobi: tangential event");

    // Phi_zeta(J) = 2(<nabla_{w} nu, zeta> nu + <nu, zeta> nabla_{w} nu),
    // w = J - (<J,nu>/<zeta,nu>) zeta (tangent to the boundary).
    const double Jn = chart.metric_dot(ev.x, ev.y, in.J, nu);
    const Vec2 w = in.J - (Jn / zn) * zeta;
    const Vec2 dnu = covariant_dnu(chart, BoundaryId::Reflector, ev.x, ev.y, w);
    const Vec2 phi = 2.0 * (chart.metric_dot(ev.x, ev.y, dnu, zeta) * nu + zn * dnu);

    // D_t I- = lambda i gamma'- for the tangential field I = gamma'.
    const Vec2 dtI = lambda.value(ev.x, ev.y, ev.theta_in) * rot90(zeta);

    JacobiVector out;
    out.J = rho_vec(chart, ev.x, ev.y, nu, in.J);
    out.DJ = rho_vec(chart, ev.x, ev.y, nu, in.DJ) - phi -
             (beta + 1.0) * (Jn / zn) * rho_vec(chart, ev.x, ev.y, nu, dtI);
    return out;
}

JacobiPath propagate_frame(const Chart& chart, const LambdaField& lambda, const BrokenRay& ray,
                           const JacobiFrame& initial) {
    JacobiPath path;
    JacobiFrame f = initial;
    for (std::size_t si = 0; si < ray.segments.size(); ++si) {
        const auto& seg = ray.segments[si];
        path.t.emplace_back();
        path.frames.emplace_back();
        path.vectors.emplace_back();
        JointState u{seg.front().state, f};
        path.t.back().push_back(seg.front().t);
        path.frames.back().push_back(u.f);
        path.vectors.back().push_back(frame_to_vector(chart, lambda, u.s, u.f));
        for (std::size_t i = 1; i < seg.size(); ++i) {
            const double h = seg[i].t - seg[i - 1].t;
            u = joint_rk4(chart, lambda, u, h);
            // keep the base point on the recorded trajectory; the joint
            // state reproduces it up to roundoff anyway
            u.s = seg[i].state;
            path.t.back().push_back(seg[i].t);
            path.frames.back().push_back(u.f);
            path.vectors.back().push_back(frame_to_vector(chart, lambda, u.s, u.f));
        }
        if (si + 1 < ray.segments.size()) {
            const ReflectionEvent& ev = ray.events[si];
            const BetaValue beta = beta_at_event(chart, lambda, ev);
            if (beta.singular) path.beta_singular = true;
            const JacobiVector before = frame_to_vector(chart, lambda, u.s, u.f);
            const JacobiVector after =
                reflect_jacobi(chart, lambda, ev, before, beta.value);
            const PhasePoint& out_state = ray.segments[si + 1].front().state;
            f = vector_to_frame(chart, lambda, out_state, after);
        }
    }
    return path;
}

JacobiPath propagate_vector(const Chart& chart, const LambdaField& lambda, const BrokenRay& ray,
                            const JacobiVector& initial) {
    const JacobiFrame f =
        vector_to_frame(chart, lambda, ray.segments.front().front().state, initial);
    return propagate_frame(chart, lambda, ray, f);
}

FdJacobi flow_differential_fd(const Chart& chart, const LambdaField& lambda,
                              const PhasePoint& start, const JacobiVector& initial,
                              const std::vector<double>& times, double s,
                              const TraceOptions& opts) {
    if (s <= 0.0) throw Error("flow_differential_fd: step must be positive");

    // Translate (J0, DJ0) into the chart perturbation (dx, dy, dtheta):
    // D_s v = dv + Gamma(dx, v) with dv = -(grad phi . dx) v + dtheta iv.
    const Vec2 v = chart.velocity(start);
    const Vec2 iv = rot90(v);
    const Jet2 p = chart.phi().jet(start.x, start.y);
    const Vec2 dx = initial.J;
    const double zero_jac[2][2] = {{0, 0}, {0, 0}};
    // pure Christoffel part: dV = 0
    const Vec2 gamma_term = chart.covariant(start.x, start.y, dx, v, zero_jac);
    const Vec2 rhs = initial.DJ + (p.x * dx.x + p.y * dx.y) * v - gamma_term;
    const double dtheta = chart.metric_dot(start.x, start.y, rhs, iv);

    auto perturbed = [&](double sign) {
        const PhasePoint q{start.x + sign * s * dx.x, start.y + sign * s * dx.y,
                           start.theta + sign * s * dtheta};
        return trace_broken_ray(chart, lambda, q, opts);
    };
    const BrokenRay plus = perturbed(+1.0);
    const BrokenRay minus = perturbed(-1.0);
    if (plus.events.size() != minus.events.size()) {
        throw TraceError("flow_differential_fd: perturbed rays change reflection count");
    }

    FdJacobi out;
    out.t = times;
    out.values.reserve(times.size());
    for (double t : times) {
        if (t > std::min(plus.total_time, minus.total_time)) {
            throw TraceError("flow_differential_fd: time beyond a perturbed ray");
        }
        const PhasePoint a = dense_eval(chart, lambda, plus, t);
        const PhasePoint b = dense_eval(chart, lambda, minus, t);
        JacobiVector jv;
        jv.J = {(a.x - b.x) / (2 * s), (a.y - b.y) / (2 * s)};
        const Vec2 va = chart.velocity(a);
        const Vec2 vb = chart.velocity(b);
        const Vec2 dv{(va.x - vb.x) / (2 * s), (va.y - vb.y) / (2 * s)};
        const Vec2 vm = 0.5 * (va + vb);
        jv.DJ = dv + chart.covariant(0.5 * (a.x + b.x), 0.5 * (a.y + b.y), jv.J, vm, zero_jac);
        out.values.push_back(jv);
    }
    return out;
}

GrowthReport growth_bound_check(const Chart& chart, const LambdaField& lambda,
                                const BrokenRay& ray, const JacobiPath& path,
                                double lambda_sup) {
    (void)lambda;
    GrowthReport rep;
    auto energy = [&](const PhasePoint& s, const JacobiVector& jv) {
        const double nj = chart.metric_dot(s.x, s.y, jv.J, jv.J);
        const double nd = chart.metric_dot(s.x, s.y, jv.DJ, jv.DJ);
        return nj + nd;
    };

    // exponential rate within segments
    double segment_C = 0.0;
    for (std::size_t si = 0; si < path.t.size(); ++si) {
        const auto& ts = path.t[si];
        if (ts.empty()) continue;
        const double e0 = energy(ray.segments[si][0].state, path.vectors[si][0]);
        for (std::size_t i = 1; i < ts.size(); ++i) {
            const double dt = ts[i] - ts[0];
            if (dt <= 0.0 || e0 <= 0.0) continue;
            const double e = energy(ray.segments[si][i].state, path.vectors[si][i]);
            if (e > e0) segment_C = std::max(segment_C, std::log(e / e0) / dt);
        }
    }
    rep.segment_C = segment_C;

    for (std::size_t si = 0; si + 1 < path.t.size(); ++si) {
        const double before =
            energy(ray.segments[si].back().state, path.vectors[si].back());
        const double after =
            energy(ray.segments[si + 1].front().state, path.vectors[si + 1].front());
        if (before > 0.0) rep.max_jump_factor = std::max(rep.max_jump_factor, after / before);
    }

    // smallest A for the broken bound with B = segment rate
    rep.B = segment_C;
    const double e0 = energy(ray.segments[0][0].state, path.vectors[0][0]);
    const double floor_term = e0 + 1.0 + lambda_sup * lambda_sup;
    double A = 0.0;
    for (std::size_t si = 0; si < path.t.size(); ++si) {
        for (std::size_t i = 0; i < path.t[si].size(); ++i) {
            const double e = energy(ray.segments[si][i].state, path.vectors[si][i]);
            A = std::max(A, e / (std::exp(rep.B * path.t[si][i]) * floor_term));
        }
    }
    rep.A = std::max(A, 1e-300);
    for (std::size_t si = 0; si < path.t.size(); ++si) {
        for (std::size_t i = 0; i < path.t[si].size(); ++i) {
            const double e = energy(ray.segments[si][i].state, path.vectors[si][i]);
            const double bound = rep.A * std::exp(rep.B * path.t[si][i]) * floor_term;
            if (e > bound * (1.0 + 1e-12)) ++rep.violations;
        }
    }
    return rep;
}

}  // namespace twistray
