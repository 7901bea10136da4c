#include "twistray/transform.hpp"

#include <cmath>

#include "twistray/errors.hpp"
#include "twistray/parallel.hpp"

namespace twistray {

namespace {
constexpr double kPi = 3.14159265358979323846;

// d/dx or d/dy of a wrapped field. Only the value is analytic; the jet
// falls back to centered differences (third partials of the potential are
// outside the parser's contract and nothing downstream needs them).
class PartialField final : public ScalarField {
  public:
    PartialField(ScalarFieldPtr base, int which) : base_(std::move(base)), which_(which) {}

    double value(double x, double y) const override {
        const Jet2 j = base_->jet(x, y);
        return which_ == 0 ? j.x : j.y;
    }

    Jet2 jet(double x, double y) const override {
        const double h = 1e-5;
        Jet2 out;
        out.v = value(x, y);
        out.x = (value(x + h, y) - value(x - h, y)) / (2 * h);
        out.y = (value(x, y + h) - value(x, y - h)) / (2 * h);
        out.xx = (value(x + h, y) - 2 * out.v + value(x - h, y)) / (h * h);
        out.yy = (value(x, y + h) - 2 * out.v + value(x, y - h)) / (h * h);
        out.xy = (value(x + h, y + h) - value(x + h, y - h) - value(x - h, y + h) +
                  value(x - h, y - h)) /
                 (4 * h * h);
        return out;
    }

  private:
    ScalarFieldPtr base_;
    int which_;
};

class NegatedField final : public ScalarField {
  public:
    explicit NegatedField(ScalarFieldPtr base) : base_(std::move(base)) {}
    double value(double x, double y) const override { return -base_->value(x, y); }
    Jet2 jet(double x, double y) const override {
        Jet2 j = base_->jet(x, y);
        j.v = -j.v; j.x = -j.x; j.y = -j.y;
        j.xx = -j.xx; j.xy = -j.xy; j.yy = -j.yy;
        return j;
    }

  private:
    ScalarFieldPtr base_;
};

ScalarFieldPtr negate(const ScalarFieldPtr& f) {
    return f ? std::make_shared<NegatedField>(f) : nullptr;
}

// f~(x, v) = f(x, -v): the scalar part stays, the 1-form part flips.
Integrand reversed(const Integrand& f) {
    return {f.f0, negate(f.alpha1), negate(f.alpha2)};
}

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

  private:
    const LambdaField& base_;
};

}  // namespace

Integrand Integrand::exact_form(const ScalarField& h) {
    // callers keep the potential alive through the shared_ptr overloads;
    // here we copy the jet lazily via a shim that re-evaluates
    struct Shim final : ScalarField {
        const ScalarField& h;
        explicit Shim(const ScalarField& hh) : h(hh) {}
        double value(double x, double y) const override { return h.value(x, y); }
        Jet2 jet(double x, double y) const override { return h.jet(x, y); }
    };
    auto shim = std::make_shared<Shim>(h);
    return Integrand::one_form(std::make_shared<PartialField>(shim, 0),
                               std::make_shared<PartialField>(shim, 1));
}

std::vector<std::vector<double>> quadrature_weights(const BrokenRay& ray) {
    std::vector<std::vector<double>> weights;
    weights.reserve(ray.segments.size());
    for (const auto& seg : ray.segments) {
        std::vector<double> w(seg.size(), 0.0);
        const std::size_t m = seg.size();
        if (m == 2) {
            const double h = seg[1].t - seg[0].t;
            w[0] = w[1] = 0.5 * h;
        } else if (m >= 3) {
            std::size_t i = 0;
            // pairs of intervals, three-point quadratic rule (non-uniform safe)
            while (i + 2 <= m - 1) {
                const double h1 = seg[i + 1].t - seg[i].t;
                const double h2 = seg[i + 2].t - seg[i + 1].t;
                const double H = h1 + h2;
                w[i] += H * (2.0 * h1 - h2) / (6.0 * h1);
                w[i + 1] += H * H * H / (6.0 * h1 * h2);
                w[i + 2] += H * (2.0 * h2 - h1) / (6.0 * h2);
                i += 2;
            }
            if (i == m - 2) {
                // trailing single interval: quadratic through the last three
                // samples, integrated over the final interval only
                const double h1 = seg[m - 2].t - seg[m - 3].t;
                const double h2 = seg[m - 1].t - seg[m - 2].t;
                w[m - 3] += -h2 * h2 * h2 / (6.0 * h1 * (h1 + h2));
                w[m - 2] += h2 * h2 / (6.0 * h1) + 0.5 * h2;
                w[m - 1] += h2 * (2.0 * h2 + 3.0 * h1) / (6.0 * (h1 + h2));
            }
        }
        weights.push_back(std::move(w));
    }
    return weights;
}

double integrate_along(const Chart& chart, const BrokenRay& ray,
                       const std::function<double(const PhasePoint&)>& f) {
    (void)chart;
    const auto weights = quadrature_weights(ray);
    double total = 0.0;
    for (std::size_t si = 0; si < ray.segments.size(); ++si) {
        const auto& seg = ray.segments[si];
        double acc = 0.0;
        for (std::size_t i = 0; i < seg.size(); ++i) {
            const double w = weights[si][i];
            if (w != 0.0) acc += w * f(seg[i].state);
        }
        total += acc;
    }
    return total;
}

double broken_transform(const Chart& chart, const LambdaField& lambda, const Integrand& f,
                        const PhasePoint& start, const TraceOptions& opts) {
    const BrokenRay ray = trace_broken_ray(chart, lambda, start, opts);
    if (ray.status != RayStatus::Exited) {
        throw TraceError(ray.status == RayStatus::Trapped ? "broken_transform: ray trapped"
                                                          : "broken_transform: tangential ray");
    }
    return integrate_along(chart, ray,
                           [&](const PhasePoint& s) { return f.eval(chart, s); });
}

double primitive(const Chart& chart, const LambdaField& lambda, const Integrand& f,
                 const PhasePoint& s0, const TraceOptions& opts) {
    PhasePoint s = s0;
    // reflector fiber pointing into the obstacle: define through u o rho
    if (chart.on_boundary(BoundaryId::Reflector, s.x, s.y)) {
        const Vec2 nu = boundary_normal(chart, BoundaryId::Reflector, s.x, s.y);
        if (chart.metric_dot(s.x, s.y, chart.velocity(s), nu) < 0.0) {
            s = reflect(chart, BoundaryId::Reflector, s);
        }
    }
    return broken_transform(chart, lambda, f, s, opts);
}

double dual_primitive(const Chart& chart, const LambdaField& lambda, const Integrand& f,
                      const PhasePoint& s, const TraceOptions& opts) {
    const DualRef ld(lambda);
    const Integrand ft = reversed(f);
    PhasePoint q = s;
    if (chart.on_boundary(BoundaryId::Reflector, q.x, q.y)) {
        const Vec2 nu = boundary_normal(chart, BoundaryId::Reflector, q.x, q.y);
        if (chart.metric_dot(q.x, q.y, chart.velocity(q), nu) < 0.0) {
            q = reflect(chart, BoundaryId::Reflector, q);
        }
    }
    return broken_transform(chart, ld, ft, q, opts);
}

double transport_residual(const Chart& chart, const LambdaField& lambda, const Integrand& f,
                          const PhasePoint& s, double delta, const TraceOptions& opts) {
    if (delta <= 0.0) throw Error("transport_residual: delta must be positive");
    const double h_sub = delta / 8.0;
    const auto fwd = integrate_free(chart, lambda, s, delta, h_sub);
    const auto bwd = integrate_free(chart, lambda, s, -delta, h_sub);
    const PhasePoint sp = fwd.back().state;
    const PhasePoint sm = bwd.back().state;
    if (!chart.inside(sp.x, sp.y) || !chart.inside(sm.x, sm.y)) {
        throw Error("transport_residual: flow segment leaves the domain");
    }
    const double up = primitive(chart, lambda, f, sp, opts);
    const double um = primitive(chart, lambda, f, sm, opts);
    return (up - um) / (2.0 * delta) + f.eval(chart, s);
}

double dual_relation_defect(const Chart& chart, const LambdaField& lambda, const Integrand& f,
                            const PhasePoint& s, const TraceOptions& opts) {
    const double u = primitive(chart, lambda, f, s, opts);
    const PhasePoint rev{s.x, s.y, reduce_angle(s.theta + kPi)};
    const double u_dual = dual_primitive(chart, lambda, f, rev, opts);

    // entry point of the maximal broken ray: exit of the dual ray, reversed
    const DualRef ld(lambda);
    const BrokenRay back = trace_broken_ray(chart, ld, rev, opts);
    if (back.status != RayStatus::Exited) {
        throw TraceError("dual_relation_defect: dual ray does not exit");
    }
    const PhasePoint entry{back.exit.x, back.exit.y, reduce_angle(back.exit.theta + kPi)};
    const double full = broken_transform(chart, lambda, f, entry, opts);
    return u + u_dual - full;
}

std::vector<SinogramRow> sinogram(const Chart& chart, const LambdaField& lambda,
                                  const Integrand& f, int n_points, int n_angles,
                                  double glancing_margin, const TraceOptions& opts) {
    const auto& comp = chart.component(BoundaryId::Emitter);

    // cumulative g-arclength along the emitter at the sample parameters
    std::vector<double> arc(n_points, 0.0);
    {
        const int fine = 32;
        double acc = 0.0;
        for (int i = 0; i < n_points; ++i) {
            arc[i] = acc;
            const double p0 = 2 * kPi * i / n_points;
            const double dp = 2 * kPi / n_points / fine;
            for (int k = 0; k < fine; ++k) {
                const double p = p0 + (k + 0.5) * dp;
                const Vec2 d = comp.dpoint(p);
                const Vec2 q = comp.point(p);
                acc += chart.metric_norm(q.x, q.y, d) * dp;
            }
        }
    }

    std::vector<SinogramRow> rows(static_cast<std::size_t>(n_points) * n_angles);
    parallel_for(rows.size(), [&](std::size_t idx) {
        const int i = static_cast<int>(idx) / n_angles;
        const int j = static_cast<int>(idx) % n_angles;
        const double p = 2 * kPi * i / n_points;
        const Vec2 q = comp.point(p);
        const double psi = normal_angle(chart, BoundaryId::Emitter, q.x, q.y);
        const double chi = -kPi / 2 + glancing_margin +
                           (kPi - 2 * glancing_margin) * (j + 0.5) / n_angles;
        SinogramRow row;
        row.s = arc[i];
        row.chi = chi;
        const PhasePoint start{q.x, q.y, reduce_angle(psi + chi)};
        try {
            row.value = broken_transform(chart, lambda, f, start, opts);
            row.status = RayStatus::Exited;
        } catch (const TraceError&) {
            row.value = std::nan("");
            row.status = RayStatus::Trapped;
        }
        rows[idx] = row;
    });
    return rows;
}

}  // namespace twistray
