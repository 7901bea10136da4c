#include "twistray/inversion.hpp"

#include <cmath>

#include "twistray/errors.hpp"
#include "twistray/parallel.hpp"

namespace twistray {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// scalar basis values at one chart point, normalized
void basis_values(const ForwardSystem& sys, double x, double y, std::vector<double>& out) {
    const int m0 = sys.basis.m0();
    out.resize(m0);
    for (int p = 0; p < m0; ++p) {
        out[p] = sys.basis.scalar(p, x, y) / sys.scalar_norms[p];
    }
}

}  // namespace

ForwardSystem assemble(const Chart& chart, const LambdaField& lambda, const BasisSpec& basis,
                       const RayFan& fan, const SMGrid& quad_grid, const TraceOptions& opts) {
    ForwardSystem sys;
    sys.basis = basis;
    const int m0 = basis.m0();
    const int cols = 3 * m0;

    // normalization and Gram matrices by grid quadrature
    {
        const int nc = quad_grid.cell_count();
        Eigen::MatrixXd vals(nc, m0);
        for (int c = 0; c < nc; ++c) {
            const Vec2 q = quad_grid.qpoint(c);
            for (int p = 0; p < m0; ++p) vals(c, p) = basis.scalar(p, q.x, q.y);
        }
        Eigen::VectorXd w2(nc), wa(nc);
        for (int c = 0; c < nc; ++c) {
            w2[c] = quad_grid.weight2(c);
            wa[c] = quad_grid.weight_area(c);
        }
        Eigen::MatrixXd gram = vals.transpose() * w2.asDiagonal() * vals;
        sys.scalar_norms = gram.diagonal().array().sqrt();
        Eigen::MatrixXd D = sys.scalar_norms.asDiagonal().inverse();
        sys.gram_scalar = D * gram * D;
        // 1-form Gram: the conformal factors cancel, plain dx dy quadrature
        Eigen::MatrixXd gram_a = vals.transpose() * wa.asDiagonal() * vals;
        Eigen::MatrixXd gram_a_n = D * gram_a * D;
        sys.gram_form = Eigen::MatrixXd::Zero(2 * m0, 2 * m0);
        sys.gram_form.topLeftCorner(m0, m0) = gram_a_n;
        sys.gram_form.bottomRightCorner(m0, m0) = gram_a_n;
    }

    // emitter ray fan
    const auto& comp = chart.component(BoundaryId::Emitter);
    const int n_total = fan.n_points * fan.n_angles;
    std::vector<PhasePoint> starts(n_total);
    std::vector<BrokenRay> rays(n_total);
    std::vector<std::uint8_t> ok(n_total, 0);
    parallel_for(static_cast<std::size_t>(n_total), [&](std::size_t t) {
        const int i = static_cast<int>(t) / fan.n_angles;
        const int j = static_cast<int>(t) % fan.n_angles;
        const double p = kTwoPi * i / fan.n_points;
        const Vec2 q = comp.point(p);
        const double psi = normal_angle(chart, BoundaryId::Emitter, q.x, q.y);
        const double half = kTwoPi / 4.0 - fan.glancing_margin;
        const double chi = -half + 2.0 * half * (j + 0.5) / fan.n_angles;
        starts[t] = {q.x, q.y, reduce_angle(psi + chi)};
        rays[t] = trace_broken_ray(chart, lambda, starts[t], opts);
        ok[t] = rays[t].status == RayStatus::Exited ? 1 : 0;
    });

    int n_exit = 0;
    for (int t = 0; t < n_total; ++t) n_exit += ok[t];
    if (n_exit < 3 * cols) {
        throw Error("assemble: too few exiting rays (" + std::to_string(n_exit) + " for " +
                    std::to_string(cols) + " columns)");
    }

    std::vector<int> row_of(n_total, -1);
    {
        int r = 0;
        for (int t = 0; t < n_total; ++t) {
            if (ok[t]) row_of[t] = r++;
        }
    }
    sys.A.resize(n_exit, cols);
    sys.starts.resize(n_exit);

    parallel_for(static_cast<std::size_t>(n_total), [&](std::size_t t) {
        if (!ok[t]) return;
        const int r = row_of[t];
        sys.starts[r] = starts[t];
        const BrokenRay& ray = rays[t];
        const auto weights = quadrature_weights(ray);
        Eigen::VectorXd row = Eigen::VectorXd::Zero(cols);
        std::vector<double> vals;
        for (std::size_t si = 0; si < ray.segments.size(); ++si) {
            const auto& seg = ray.segments[si];
            for (std::size_t i = 0; i < seg.size(); ++i) {
                const double w = weights[si][i];
                if (w == 0.0) continue;
                const PhasePoint& s = seg[i].state;
                basis_values(sys, s.x, s.y, vals);
                const Vec2 v = chart.velocity(s);
                for (int p = 0; p < m0; ++p) {
                    const double bv = vals[p];
                    row[p] += w * bv;                    // f0 column block
                    row[m0 + p] += w * bv * v.x;         // alpha_1 block
                    row[2 * m0 + p] += w * bv * v.y;     // alpha_2 block
                }
            }
        }
        sys.A.row(r) = row;
    });

    // gauge subspace: project each analytic dh onto the form basis
    {
        const auto pots = basis.gauge_potentials();
        const int ng = static_cast<int>(pots.size());
        sys.gauge = Eigen::MatrixXd::Zero(cols, ng);
        sys.gauge_residual.resize(ng);
        const int nc = quad_grid.cell_count();
        for (int g = 0; g < ng; ++g) {
            // dh at quadrature points; the potentials vanish on the emitter
            Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * m0);
            double dh_norm2 = 0.0;
            std::vector<double> vals;
            for (int c = 0; c < nc; ++c) {
                const double w = quad_grid.weight_area(c);
                if (w == 0.0) continue;
                const Vec2 q = quad_grid.qpoint(c);
                const Vec2 dh = basis.potential_S_grad(pots[g], q.x, q.y);
                basis_values(sys, q.x, q.y, vals);
                for (int p = 0; p < m0; ++p) {
                    b[p] += w * dh.x * vals[p];
                    b[m0 + p] += w * dh.y * vals[p];
                }
                dh_norm2 += w * (dh.x * dh.x + dh.y * dh.y);
            }
            const Eigen::VectorXd gcoef = sys.gram_form.ldlt().solve(b);
            // pointwise residual of the projection (no cancellation)
            double res2 = 0.0;
            for (int c = 0; c < nc; ++c) {
                const double w = quad_grid.weight_area(c);
                if (w == 0.0) continue;
                const Vec2 q = quad_grid.qpoint(c);
                const Vec2 dh = basis.potential_S_grad(pots[g], q.x, q.y);
                basis_values(sys, q.x, q.y, vals);
                double px = 0.0, py = 0.0;
                for (int p = 0; p < m0; ++p) {
                    px += gcoef[p] * vals[p];
                    py += gcoef[m0 + p] * vals[p];
                }
                res2 += w * ((dh.x - px) * (dh.x - px) + (dh.y - py) * (dh.y - py));
            }
            sys.gauge_residual[g] = std::sqrt(res2 / std::max(dh_norm2, 1e-300));
            sys.gauge.col(g).segment(m0, 2 * m0) = gcoef;
        }
    }

    return sys;
}

double basis_column_value(const Chart& chart, const ForwardSystem& sys, int column,
                          const BrokenRay& ray) {
    const int m0 = sys.basis.m0();
    const auto weights = quadrature_weights(ray);
    double acc = 0.0;
    std::vector<double> vals;
    for (std::size_t si = 0; si < ray.segments.size(); ++si) {
        const auto& seg = ray.segments[si];
        for (std::size_t i = 0; i < seg.size(); ++i) {
            const double w = weights[si][i];
            if (w == 0.0) continue;
            const PhasePoint& s = seg[i].state;
            basis_values(sys, s.x, s.y, vals);
            const Vec2 v = chart.velocity(s);
            if (column < m0) {
                acc += w * vals[column];
            } else if (column < 2 * m0) {
                acc += w * vals[column - m0] * v.x;
            } else {
                acc += w * vals[column - 2 * m0] * v.y;
            }
        }
    }
    return acc;
}

KernelReport kernel_analysis(const ForwardSystem& sys) {
    KernelReport rep;
    const int cols = sys.columns();
    const int ng = static_cast<int>(sys.gauge.cols());

    // orthonormal basis of the gauge complement via full QR
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(sys.gauge);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(cols, cols);
    const Eigen::MatrixXd W = Q.rightCols(cols - ng);

    Eigen::BDCSVD<Eigen::MatrixXd> svd(sys.A * W);
    rep.singular_values = svd.singularValues();
    rep.sigma_max = rep.singular_values.maxCoeff();
    rep.sigma_min = rep.singular_values.minCoeff();
    rep.margin = rep.sigma_min / rep.sigma_max;

    for (int g = 0; g < ng; ++g) {
        const double gn = sys.gauge.col(g).norm();
        if (gn == 0.0) continue;
        const double q = (sys.A * sys.gauge.col(g)).norm() / gn;
        rep.max_gauge_rayleigh = std::max(rep.max_gauge_rayleigh, q);
    }
    rep.max_gauge_rayleigh_rel = rep.max_gauge_rayleigh / rep.sigma_max;
    rep.max_gauge_residual = sys.gauge_residual.size() ? sys.gauge_residual.maxCoeff() : 0.0;
    return rep;
}

Reconstruction reconstruct(const ForwardSystem& sys, const Eigen::VectorXd& data,
                           const Regularization& reg) {
    if (reg.value <= 0.0) throw Error("reconstruct: regularization parameter must be positive");
    if (data.size() != sys.A.rows()) throw Error("reconstruct: data size mismatch");
    Reconstruction rec;

    if (reg.kind == Regularization::Kind::TruncatedSvd) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(sys.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double cutoff = reg.value * sv.maxCoeff();
        Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i) {
            if (sv[i] >= cutoff) {
                inv[i] = 1.0 / sv[i];
                ++rank;
            }
        }
        rec.rank = rank;
        rec.coef = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * data;
    } else {
        const int cols = sys.columns();
        const Eigen::MatrixXd N = sys.A.transpose() * sys.A +
                                  reg.value * reg.value * Eigen::MatrixXd::Identity(cols, cols);
        rec.coef = N.ldlt().solve(sys.A.transpose() * data);
        rec.rank = cols;
    }

    // gauge normalization of the alpha block: subtract the L2-best gauge fit
    rec.coef_gauge_normalized = rec.coef;
    const int m0 = sys.basis.m0();
    const int ng = static_cast<int>(sys.gauge.cols());
    if (ng > 0) {
        const Eigen::MatrixXd G = sys.gauge.block(m0, 0, 2 * m0, ng);
        const Eigen::VectorXd alpha = rec.coef.segment(m0, 2 * m0);
        const Eigen::MatrixXd M = G.transpose() * sys.gram_form * G;
        const Eigen::VectorXd rhs = G.transpose() * sys.gram_form * alpha;
        const Eigen::VectorXd fit = M.ldlt().solve(rhs);
        rec.coef_gauge_normalized.segment(m0, 2 * m0) = alpha - G * fit;
    }
    return rec;
}

ErrorReport reconstruction_errors(const Chart& chart, const SMGrid& quad_grid,
                                  const ForwardSystem& sys, const Reconstruction& rec,
                                  const Integrand& truth) {
    (void)chart;
    const int m0 = sys.basis.m0();
    const int nc = quad_grid.cell_count();

    // gauge-normalize the truth the same way (project onto the basis first)
    Eigen::VectorXd truth_alpha = Eigen::VectorXd::Zero(2 * m0);
    {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * m0);
        std::vector<double> vals;
        for (int c = 0; c < nc; ++c) {
            const double w = quad_grid.weight_area(c);
            if (w == 0.0) continue;
            const Vec2 q = quad_grid.qpoint(c);
            const double a1 = truth.alpha1 ? truth.alpha1->value(q.x, q.y) : 0.0;
            const double a2 = truth.alpha2 ? truth.alpha2->value(q.x, q.y) : 0.0;
            basis_values(sys, q.x, q.y, vals);
            for (int p = 0; p < m0; ++p) {
                b[p] += w * a1 * vals[p];
                b[m0 + p] += w * a2 * vals[p];
            }
        }
        truth_alpha = sys.gram_form.ldlt().solve(b);
    }
    Eigen::VectorXd truth_alpha_gn = truth_alpha;
    const int ng = static_cast<int>(sys.gauge.cols());
    if (ng > 0) {
        const Eigen::MatrixXd G = sys.gauge.block(m0, 0, 2 * m0, ng);
        const Eigen::MatrixXd M = G.transpose() * sys.gram_form * G;
        const Eigen::VectorXd fit =
            M.ldlt().solve(G.transpose() * sys.gram_form * truth_alpha);
        truth_alpha_gn = truth_alpha - G * fit;
    }

    ErrorReport rep;
    // f0: pointwise comparison against the analytic truth
    {
        std::vector<double> num(nc, 0.0), den(nc, 0.0);
        std::vector<double> vals;
        for (int c = 0; c < nc; ++c) {
            const double w = quad_grid.weight2(c);
            if (w == 0.0) continue;
            const Vec2 q = quad_grid.qpoint(c);
            basis_values(sys, q.x, q.y, vals);
            double f_rec = 0.0;
            for (int p = 0; p < m0; ++p) f_rec += rec.coef[p] * vals[p];
            const double f_true = truth.f0 ? truth.f0->value(q.x, q.y) : 0.0;
            num[c] = w * (f_rec - f_true) * (f_rec - f_true);
            den[c] = w * f_true * f_true;
        }
        const double n2 = pairwise_sum(num);
        const double d2 = pairwise_sum(den);
        rep.f0_rel = std::sqrt(n2 / std::max(d2, 1e-300));
    }
    // alpha: coefficient-space L2 with the form Gram, gauge-normalized
    {
        const Eigen::VectorXd diff =
            rec.coef_gauge_normalized.segment(m0, 2 * m0) - truth_alpha_gn;
        const double n2 = diff.dot(sys.gram_form * diff);
        const double d2 = truth_alpha_gn.dot(sys.gram_form * truth_alpha_gn);
        rep.alpha_rel = d2 > 1e-14 ? std::sqrt(n2 / d2) : std::sqrt(n2);
    }
    return rep;
}

Eigen::VectorXd synthesize_data(const Chart& chart, const LambdaField& lambda,
                                const ForwardSystem& sys, const Integrand& f,
                                const TraceOptions& opts) {
    Eigen::VectorXd data(sys.A.rows());
    parallel_for(static_cast<std::size_t>(sys.starts.size()), [&](std::size_t r) {
        data[static_cast<Eigen::Index>(r)] = broken_transform(chart, lambda, f, sys.starts[r], opts);
    });
    return data;
}

}  // namespace twistray
