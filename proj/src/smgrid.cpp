#include "twistray/smgrid.hpp"

#include <cmath>

#include "twistray/errors.hpp"
#include "twistray/parallel.hpp"

namespace twistray {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Poly {
    std::vector<Vec2> v;
};

// Clip a convex polygon against the half plane {n . (p - p0) >= 0}.
Poly clip_halfplane(const Poly& poly, Vec2 p0, Vec2 n) {
    Poly out;
    const std::size_t m = poly.v.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2 a = poly.v[i];
        const Vec2 b = poly.v[(i + 1) % m];
        const double da = dot(n, a - p0);
        const double db = dot(n, b - p0);
        if (da >= 0.0) out.v.push_back(a);
        if ((da >= 0.0) != (db >= 0.0)) {
            const double t = da / (da - db);
            out.v.push_back(a + t * (b - a));
        }
    }
    return out;
}

double poly_area_centroid(const Poly& poly, Vec2* centroid) {
    const std::size_t m = poly.v.size();
    if (m < 3) {
        *centroid = m ? poly.v[0] : Vec2{0, 0};
        return 0.0;
    }
    double area2 = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2 a = poly.v[i];
        const Vec2 b = poly.v[(i + 1) % m];
        const double cross = a.x * b.y - a.y * b.x;
        area2 += cross;
        cx += (a.x + b.x) * cross;
        cy += (a.y + b.y) * cross;
    }
    const double area = 0.5 * area2;
    if (std::abs(area) < 1e-300) {
        *centroid = poly.v[0];
        return 0.0;
    }
    *centroid = {cx / (3.0 * area2), cy / (3.0 * area2)};
    return area;
}

}  // namespace

SMGrid::SMGrid(const Chart& chart, const GridSpec& spec)
    : nx_(spec.nx), ny_(spec.ny), nth_(spec.ntheta) {
    if (nx_ < 8 || ny_ < 8 || nth_ < 8) throw ConfigError("grid sizes must be >= 8");
    if (nth_ % 2 != 0) throw ConfigError("ntheta must be even");

    double x0 = spec.x0, x1 = spec.x1, y0 = spec.y0, y1 = spec.y1;
    if (x0 >= x1 || y0 >= y1) {
        // padded bounding box of the emitter
        double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
        const auto& comp = chart.component(BoundaryId::Emitter);
        for (int k = 0; k < 256; ++k) {
            const Vec2 q = comp.point(kTwoPi * k / 256.0);
            lo_x = std::min(lo_x, q.x);
            hi_x = std::max(hi_x, q.x);
            lo_y = std::min(lo_y, q.y);
            hi_y = std::max(hi_y, q.y);
        }
        const double pad = 0.02 * std::max(hi_x - lo_x, hi_y - lo_y);
        x0 = lo_x - pad;
        x1 = hi_x + pad;
        y0 = lo_y - pad;
        y1 = hi_y + pad;
    }
    x0_ = x0;
    y0_ = y0;
    dx_ = (x1 - x0) / nx_;
    dy_ = (y1 - y0) / ny_;
    dth_ = kTwoPi / nth_;

    const int nc = nx_ * ny_;
    frac_.assign(nc, 0.0);
    w2_.assign(nc, 0.0);
    wa_.assign(nc, 0.0);
    qpoint_.assign(nc, Vec2{});
    inside_.assign(nc, 0);
    body_.assign(nc, 0);

    const double diag = 0.5 * std::hypot(dx_, dy_);
    const ScalarField& rho_e = chart.component(BoundaryId::Emitter).rho();
    const ScalarField& rho_r = chart.component(BoundaryId::Reflector).rho();

    parallel_for(static_cast<std::size_t>(nc), [&](std::size_t c) {
        const int i = static_cast<int>(c) % nx_;
        const int j = static_cast<int>(c) / nx_;
        const Vec2 ctr{x_of(i), y_of(j)};

        Poly poly;
        poly.v = {{ctr.x - 0.5 * dx_, ctr.y - 0.5 * dy_},
                  {ctr.x + 0.5 * dx_, ctr.y - 0.5 * dy_},
                  {ctr.x + 0.5 * dx_, ctr.y + 0.5 * dy_},
                  {ctr.x - 0.5 * dx_, ctr.y + 0.5 * dy_}};
        bool empty = false;
        for (const ScalarField* rho : {&rho_e, &rho_r}) {
            const Jet2 jr = rho->jet(ctr.x, ctr.y);
            const double gn = std::hypot(jr.x, jr.y);
            if (jr.v >= 0.0 && jr.v > 1.5 * diag * gn) continue;  // fully inside this constraint
            if (jr.v < 0.0 && -jr.v > 1.5 * diag * gn) {
                empty = true;
                break;
            }
            // linearized cut: rho(p) ~ jr.v + grad . (p - ctr)
            if (gn < 1e-14) continue;
            const Vec2 n{jr.x, jr.y};
            const Vec2 p0 = ctr - (jr.v / (gn * gn)) * n;
            poly = clip_halfplane(poly, p0, n);
            if (poly.v.size() < 3) {
                empty = true;
                break;
            }
        }

        if (empty) {
            frac_[c] = 0.0;
            qpoint_[c] = ctr;
        } else {
            Vec2 centroid;
            const double area = poly_area_centroid(poly, &centroid);
            frac_[c] = std::clamp(area / (dx_ * dy_), 0.0, 1.0);
            qpoint_[c] = frac_[c] > 0.0 ? centroid : ctr;
        }
        wa_[c] = frac_[c] * dx_ * dy_;
        const double e = std::exp(2.0 * chart.phi().value(qpoint_[c].x, qpoint_[c].y));
        w2_[c] = wa_[c] * e;
        inside_[c] = (rho_e.value(ctr.x, ctr.y) >= 0.0 && rho_r.value(ctr.x, ctr.y) >= 0.0) ? 1 : 0;
    });

    // body = inside with the full 2-ring of inside neighbours
    for (int j = 0; j < ny_; ++j) {
        for (int i = 0; i < nx_; ++i) {
            if (!inside_[cell(i, j)]) continue;
            bool ok = true;
            for (int dj = -2; dj <= 2 && ok; ++dj) {
                for (int di = -2; di <= 2 && ok; ++di) {
                    const int ii = i + di, jj = j + dj;
                    if (ii < 0 || jj < 0 || ii >= nx_ || jj >= ny_ || !inside_[cell(ii, jj)]) {
                        ok = false;
                    }
                }
            }
            body_[cell(i, j)] = ok ? 1 : 0;
        }
    }

    // boundary rings
    const int ns = spec.n_boundary > 0 ? spec.n_boundary : 2 * std::max(nx_, ny_);
    for (BoundaryId id : {BoundaryId::Emitter, BoundaryId::Reflector}) {
        Ring ring;
        ring.id = id;
        ring.n_s = ns;
        ring.n_th = nth_;
        ring.dp = kTwoPi / ns;
        ring.dth = dth_;
        ring.point.resize(ns);
        ring.dpoint.resize(ns);
        ring.psi.resize(ns);
        ring.ws.resize(ns);
        ring.kappa.resize(ns);
        const auto& comp = chart.component(id);
        for (int m = 0; m < ns; ++m) {
            const double p = ring.dp * m;
            const Vec2 q = comp.point(p);
            const Vec2 d = comp.dpoint(p);
            ring.point[m] = q;
            ring.dpoint[m] = d;
            ring.psi[m] = normal_angle(chart, id, q.x, q.y);
            ring.ws[m] = chart.metric_norm(q.x, q.y, d) * ring.dp;
            ring.kappa[m] = signed_curvature(chart, id, q.x, q.y);
        }
        (id == BoundaryId::Emitter ? emitter_ : reflector_) = std::move(ring);
    }
}

double SMGrid::integrate(const std::vector<double>& u) const {
    if (u.size() != size()) throw Error("SMGrid::integrate: size mismatch");
    std::vector<double> per_cell(cell_count(), 0.0);
    parallel_for(static_cast<std::size_t>(cell_count()), [&](std::size_t c) {
        if (w2_[c] == 0.0) return;
        double acc = 0.0;
        const std::size_t base = c * nth_;
        for (int k = 0; k < nth_; ++k) acc += u[base + k];
        per_cell[c] = acc * dth_ * w2_[c];
    });
    return pairwise_sum(per_cell);
}

double SMGrid::integrate2(const std::vector<double>& f) const {
    if (f.size() != static_cast<std::size_t>(cell_count())) {
        throw Error("SMGrid::integrate2: size mismatch");
    }
    std::vector<double> terms(cell_count());
    for (int c = 0; c < cell_count(); ++c) terms[c] = f[c] * w2_[c];
    return pairwise_sum(terms);
}

double SMGrid::boundary_measure() const {
    double total = 0.0;
    for (const Ring* r : {&emitter_, &reflector_}) {
        for (int m = 0; m < r->n_s; ++m) total += r->ws[m] * r->dth * r->n_th;
    }
    return total;
}

}  // namespace twistray
