// twistray: trace twisted broken rays, evaluate their transforms and the
// associated energy identities, and run the discretized uniqueness
// experiment. See README.md for the configuration format.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "twistray/admissibility.hpp"
#include "twistray/config.hpp"
#include "twistray/errors.hpp"
#include "twistray/inversion.hpp"
#include "twistray/io.hpp"
#include "twistray/jacobi.hpp"
#include "twistray/parallel.hpp"
#include "twistray/pestov.hpp"
#include "twistray/rng.hpp"
#include "twistray/selftest.hpp"
#include "twistray/transform.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace twistray;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Cli {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::vector<int> grids;
};

// exit codes: 0 ok, 2 config error, 3 numerical-status failure
constexpr int kOk = 0, kConfigError = 2, kNumericalError = 3;

void error_json(const std::string& kind, const std::string& message) {
    ordered_json e;
    e["error"] = kind;
    e["message"] = message;
    std::cerr << e.dump() << "\n";
}

RunConfig load(const Cli& cli) {
    RunConfig cfg = parse_config_file(cli.config_path);
    if (!cli.out_dir.empty()) cfg.output_dir = cli.out_dir;
    if (cli.seed_set) cfg.seed = cli.seed;
    fs::create_directories(cfg.output_dir);
    return cfg;
}

std::string path_in(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
}

// The deterministic emitter fan used by trace/jacobi.
std::vector<PhasePoint> emitter_fan(const RunConfig& cfg) {
    std::vector<PhasePoint> starts;
    const auto& comp = cfg.chart->component(BoundaryId::Emitter);
    for (int i = 0; i < cfg.ray_boundary_count; ++i) {
        const double p = kTwoPi * i / cfg.ray_boundary_count;
        const Vec2 q = comp.point(p);
        const double psi = normal_angle(*cfg.chart, BoundaryId::Emitter, q.x, q.y);
        for (int j = 0; j < cfg.ray_fiber_count; ++j) {
            const double half = kTwoPi / 4.0 - cfg.glancing_margin;
            const double chi = -half + 2.0 * half * (j + 0.5) / cfg.ray_fiber_count;
            starts.push_back({q.x, q.y, reduce_angle(psi + chi)});
        }
    }
    return starts;
}

int cmd_trace(const Cli& cli) {
    const RunConfig cfg = load(cli);
    const auto starts = emitter_fan(cfg);
    std::vector<BrokenRay> rays(starts.size());
    parallel_for(starts.size(), [&](std::size_t i) {
        rays[i] = trace_broken_ray(*cfg.chart, *cfg.lambda, starts[i], cfg.trace);
    });
    write_text_file(path_in(cfg, "rays.csv"), rays_csv(rays));
    write_text_file(path_in(cfg, "events.csv"), events_csv(rays));
    // the SVG keeps a readable subset
    std::vector<BrokenRay> shown;
    for (std::size_t i = 0; i < rays.size(); i += std::max<std::size_t>(1, rays.size() / 24)) {
        shown.push_back(rays[i]);
    }
    write_text_file(path_in(cfg, "rays.svg"), rays_svg(*cfg.chart, shown));

    int exited = 0, trapped = 0, tangential = 0;
    double max_exit_rho = 0.0;
    for (const auto& r : rays) {
        if (r.status == RayStatus::Exited) {
            ++exited;
            max_exit_rho = std::max(max_exit_rho,
                                    std::abs(cfg.chart->component(BoundaryId::Emitter)
                                                 .rho()
                                                 .value(r.exit.x, r.exit.y)));
        } else if (r.status == RayStatus::Trapped) {
            ++trapped;
        } else {
            ++tangential;
        }
    }
    ordered_json rep;
    rep["rays"] = rays.size();
    rep["exited"] = exited;
    rep["trapped"] = trapped;
    rep["tangential"] = tangential;
    rep["max_exit_rho"] = max_exit_rho;
    write_text_file(path_in(cfg, "trace_report.json"), rep.dump(2) + "\n");
    std::cout << rep.dump(2) << "\n";
    return trapped + tangential > static_cast<int>(rays.size()) / 2 ? kNumericalError : kOk;
}

int cmd_jacobi(const Cli& cli) {
    const RunConfig cfg = load(cli);
    const auto starts = emitter_fan(cfg);
    const std::size_t count = std::min<std::size_t>(starts.size(), 24);
    std::vector<JacobiPath> paths;
    double worst = 0.0;
    int compared = 0;
    Rng rng(cfg.seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t pick = i * (starts.size() / count);
        BrokenRay ray = trace_broken_ray(*cfg.chart, *cfg.lambda, starts[pick], cfg.trace);
        if (ray.status != RayStatus::Exited) continue;
        const JacobiFrame f0{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        JacobiPath path = propagate_frame(*cfg.chart, *cfg.lambda, ray, f0);
        // The oracle restarts from an interior sample of the first segment
        // (a perturbed boundary start would leave the domain) and compares
        // at interior sample times further down the ray.
        const std::size_t anchor = std::min<std::size_t>(50, ray.segments[0].size() / 4);
        if (!path.beta_singular && anchor > 0) {
            const double t0 = path.t[0][anchor];
            std::vector<double> times, shifted;
            for (std::size_t si = 0; si < path.t.size(); ++si) {
                const auto& ts = path.t[si];
                for (std::size_t k = 5; k + 5 < ts.size(); k += ts.size() / 6 + 1) {
                    if (ts[k] > t0 + 0.01) {
                        times.push_back(ts[k]);
                        shifted.push_back(ts[k] - t0);
                    }
                }
            }
            try {
                const FdJacobi fd =
                    flow_differential_fd(*cfg.chart, *cfg.lambda, ray.segments[0][anchor].state,
                                         path.vectors[0][anchor], shifted, 1e-5, cfg.trace);
                double scale = 1.0;
                for (const auto& jv : fd.values) {
                    scale = std::max(scale, std::sqrt(dot(jv.J, jv.J) + dot(jv.DJ, jv.DJ)));
                }
                for (std::size_t fi = 0; fi < times.size(); ++fi) {
                    for (std::size_t si = 0; si < path.t.size(); ++si) {
                        for (std::size_t k = 0; k < path.t[si].size(); ++k) {
                            if (path.t[si][k] == times[fi]) {
                                const Vec2 dj = fd.values[fi].J - path.vectors[si][k].J;
                                const Vec2 dd = fd.values[fi].DJ - path.vectors[si][k].DJ;
                                worst = std::max(
                                    worst, std::sqrt(dot(dj, dj) + dot(dd, dd)) / scale);
                            }
                        }
                    }
                }
                ++compared;
            } catch (const Error&) {
                // reflection count changed under the perturbation (near
                // glancing): skip the oracle for this ray
            }
        }
        paths.push_back(std::move(path));
    }
    write_text_file(path_in(cfg, "jacobi.csv"), jacobi_csv(paths));
    ordered_json rep;
    rep["rays"] = paths.size();
    rep["oracle_compared"] = compared;
    rep["max_relative_deviation"] = worst;
    write_text_file(path_in(cfg, "jacobi_report.json"), rep.dump(2) + "\n");
    std::cout << rep.dump(2) << "\n";
    return paths.empty() ? kNumericalError : kOk;
}

int cmd_transform(const Cli& cli) {
    const RunConfig cfg = load(cli);
    if (!cfg.integrand) {
        error_json("config", "transform needs an 'integrand' section");
        return kConfigError;
    }
    const auto rows = sinogram(*cfg.chart, *cfg.lambda, *cfg.integrand, cfg.ray_boundary_count,
                               cfg.ray_fiber_count, cfg.glancing_margin, cfg.trace);
    write_text_file(path_in(cfg, "sinogram.csv"), sinogram_csv(rows));
    int failed = 0;
    for (const auto& r : rows) failed += r.status == RayStatus::Exited ? 0 : 1;
    ordered_json rep;
    rep["rows"] = rows.size();
    rep["failed_rays"] = failed;
    std::cout << rep.dump(2) << "\n";
    return failed > static_cast<int>(rows.size()) / 2 ? kNumericalError : kOk;
}

int cmd_pestov(const Cli& cli) {
    const RunConfig cfg = load(cli);
    std::vector<std::string> fns = cfg.pestov_test_functions;
    if (fns.empty()) {
        fns = {"sin(x)*cos(y) + 0.3*cos(theta)", "x^2 - y^2 + 0.5*sin(theta)*x",
               "exp(0.3*x)*sin(theta + y)"};
    }
    std::vector<int> sizes = cli.grids;
    if (sizes.empty()) sizes = {cfg.grid.nx / 2, cfg.grid.nx};

    ordered_json rep;
    rep["grids"] = sizes;
    rep["functions"] = ordered_json::array();
    bool order_ok = true;
    for (const auto& fn : fns) {
        const auto u = lambda_expr(fn);
        ordered_json jf;
        jf["u"] = fn;
        jf["runs"] = ordered_json::array();
        std::vector<double> residuals;
        for (int n : sizes) {
            GridSpec gs = cfg.grid;
            gs.nx = gs.ny = gs.ntheta = n;
            const SMGrid grid(*cfg.chart, gs);
            const PestovReport r = pestov_residual(grid, *cfg.chart, *cfg.lambda, *u);
            ordered_json jr;
            jr["n"] = n;
            jr["Pu2"] = r.pu2;
            jr["Ptu2"] = r.ptu2;
            jr["curvature_term"] = r.curvature;
            jr["Fu2"] = r.fu2;
            jr["boundary_term"] = r.boundary;
            jr["lhs"] = r.lhs;
            jr["rhs"] = r.rhs;
            jr["rel_residual"] = r.rel_residual;
            jf["runs"].push_back(jr);
            residuals.push_back(r.rel_residual);
        }
        if (residuals.size() >= 2 && residuals.back() > 1e-12) {
            const double order =
                std::log2(residuals[residuals.size() - 2] / residuals.back());
            jf["order"] = order;
            order_ok = order_ok && order >= 1.5;
        } else {
            jf["order"] = "exact";
        }
        rep["functions"].push_back(jf);
    }
    write_text_file(path_in(cfg, "pestov_report.json"), rep.dump(2) + "\n");
    std::cout << rep.dump(2) << "\n";
    return order_ok ? kOk : kNumericalError;
}

int cmd_admissible(const Cli& cli) {
    const RunConfig cfg = load(cli);
    AdmissibilityOptions opts;
    opts.n_rays = cfg.ray_census;
    opts.seed = cfg.seed;
    opts.trace = cfg.trace;
    const AdmissibilityReport r = check_admissible(*cfg.chart, *cfg.lambda, opts);
    const double dual_gap = dual_admissibility_crosscheck(*cfg.chart, *cfg.lambda, 1000, cfg.seed);
    const int convexity_flips = convexity_sign_crosscheck(*cfg.chart, *cfg.lambda, 100, cfg.seed);

    ordered_json rep;
    rep["admissible"] = r.admissible;
    rep["emitter_convexity"] = {{"margin", r.emitter_convexity_margin},
                                {"ok", r.emitter_ok},
                                {"witness", {r.emitter_witness.x, r.emitter_witness.y,
                                             r.emitter_witness.theta}}};
    rep["reflector_curvature"] = {{"max", r.reflector_max_curvature},
                                  {"ok", r.reflector_ok},
                                  {"witness", {r.reflector_witness.x, r.reflector_witness.y,
                                               r.reflector_witness.theta}}};
    rep["lambda_curvature"] = {{"max", r.max_lambda_curvature},
                               {"ok", r.curvature_ok},
                               {"witness", {r.curvature_witness.x, r.curvature_witness.y,
                                            r.curvature_witness.theta}}};
    rep["nontrapping"] = {{"max_tau", r.max_tau},
                          {"max_tau_dual", r.max_tau_dual},
                          {"trapped", r.trapped_count},
                          {"tangential", r.tangential_count},
                          {"rays", r.census_rays},
                          {"ok", r.nontrapping_ok}};
    rep["transversality"] = {{"a", r.transversality_a},
                             {"max_reflections", r.max_reflections},
                             {"ok", r.transversal_ok}};
    rep["dual_crosscheck_gap"] = dual_gap;
    rep["convexity_sign_disagreements"] = convexity_flips;
    write_text_file(path_in(cfg, "admissibility.json"), rep.dump(2) + "\n");
    std::cout << rep.dump(2) << "\n";
    return kOk;
}

int cmd_invert(const Cli& cli) {
    const RunConfig cfg = load(cli);
    GridSpec gs = cfg.grid;
    gs.ntheta = 8;  // only the 2D quadrature is used here
    const SMGrid grid(*cfg.chart, gs);
    RayFan fan = cfg.fan;
    fan.glancing_margin = cfg.glancing_margin;
    const ForwardSystem sys = assemble(*cfg.chart, *cfg.lambda, cfg.basis, fan, grid, cfg.trace);
    const KernelReport kr = kernel_analysis(sys);

    // Eigen stores column-major; the file format is row-major
    {
        std::vector<double> rowmajor(static_cast<std::size_t>(sys.A.rows()) * sys.A.cols());
        for (int r = 0; r < sys.A.rows(); ++r) {
            for (int c = 0; c < sys.A.cols(); ++c) {
                rowmajor[static_cast<std::size_t>(r) * sys.A.cols() + c] = sys.A(r, c);
            }
        }
        write_matrix_file(path_in(cfg, "matrix.bin"), rowmajor.data(), sys.A.rows(),
                          sys.A.cols());
    }

    std::string sv_csv = "index,sigma\n";
    for (int i = 0; i < kr.singular_values.size(); ++i) {
        sv_csv += std::to_string(i) + ',' + format_double(kr.singular_values[i]) + '\n';
    }
    write_text_file(path_in(cfg, "singular_values.csv"), sv_csv);

    ordered_json rep;
    rep["rays"] = sys.A.rows();
    rep["columns"] = sys.A.cols();
    rep["m0"] = sys.basis.m0();
    rep["gauge_dimension"] = sys.gauge.cols();
    rep["gauge_max_projection_residual"] = kr.max_gauge_residual;
    rep["gauge_max_rayleigh_rel"] = kr.max_gauge_rayleigh_rel;
    rep["complement_sigma_max"] = kr.sigma_max;
    rep["complement_sigma_min"] = kr.sigma_min;
    rep["complement_margin"] = kr.margin;

    if (cfg.integrand) {
        const Eigen::VectorXd data =
            synthesize_data(*cfg.chart, *cfg.lambda, sys, *cfg.integrand, cfg.trace);
        const Reconstruction rec = reconstruct(sys, data, cfg.regularization);
        const ErrorReport err = reconstruction_errors(*cfg.chart, grid, sys, rec, *cfg.integrand);
        rep["reconstruction"] = {{"rank", rec.rank},
                                 {"f0_rel_error", err.f0_rel},
                                 {"alpha_rel_error_gauge_normalized", err.alpha_rel}};
        std::string coef_csv = "index,coef,coef_gauge_normalized\n";
        for (int i = 0; i < rec.coef.size(); ++i) {
            coef_csv += std::to_string(i) + ',' + format_double(rec.coef[i]) + ',' +
                        format_double(rec.coef_gauge_normalized[i]) + '\n';
        }
        write_text_file(path_in(cfg, "reconstruction.csv"), coef_csv);
    }
    write_text_file(path_in(cfg, "inversion_report.json"), rep.dump(2) + "\n");
    std::cout << rep.dump(2) << "\n";
    return kOk;
}

int cmd_selftest() {
    const auto results = run_acceptance();
    bool all = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  (" << r.detail << ")\n";
        all = all && r.pass;
    }
    std::cout << (all ? "selftest: all criteria passed\n" : "selftest: FAILURES present\n");
    return all ? kOk : kNumericalError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"twisted broken-ray tracing and transform toolkit"};
    app.require_subcommand(1);

    Cli cli;
    app.add_option("--threads", cli.threads, "worker threads (0 = library default)");

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        sub->fallthrough();  // accept --threads after the subcommand name
        auto* opt = sub->add_option("--config", cli.config_path, "JSON configuration file");
        if (needs_config) opt->required();
        sub->add_option("--out", cli.out_dir, "output directory (overrides config)");
        sub->add_option("--seed", cli.seed, "seed override")->each([&](const std::string&) {
            cli.seed_set = true;
        });
    };

    auto* trace = app.add_subcommand("trace", "trace the emitter ray fan");
    add_common(trace, true);
    auto* jacobi = app.add_subcommand("jacobi", "propagate variation fields with the FD oracle");
    add_common(jacobi, true);
    auto* transform = app.add_subcommand("transform", "sinogram of the configured integrand");
    add_common(transform, true);
    auto* pestov = app.add_subcommand("pestov", "energy identity report");
    add_common(pestov, true);
    pestov->add_option("--grids", cli.grids, "grid sizes for the convergence study");
    auto* admissible = app.add_subcommand("admissible", "admissibility report");
    add_common(admissible, true);
    auto* invert = app.add_subcommand("invert", "assemble, analyze and invert the transform");
    add_common(invert, true);
    auto* selftest = app.add_subcommand("selftest", "run the acceptance suite");
    add_common(selftest, false);

    CLI11_PARSE(app, argc, argv);
    set_threads(cli.threads);

    try {
        if (trace->parsed()) return cmd_trace(cli);
        if (jacobi->parsed()) return cmd_jacobi(cli);
        if (transform->parsed()) return cmd_transform(cli);
        if (pestov->parsed()) return cmd_pestov(cli);
        if (admissible->parsed()) return cmd_admissible(cli);
        if (invert->parsed()) return cmd_invert(cli);
        if (selftest->parsed()) return cmd_selftest();
    } catch (const ConfigError& e) {
        error_json("config", e.what());
        return kConfigError;
    } catch (const SyntaxError& e) {
        error_json("config", e.what());
        return kConfigError;
    } catch (const TraceError& e) {
        error_json("numerical", e.what());
        return kNumericalError;
    } catch (const Error& e) {
        error_json("error", e.what());
        return kNumericalError;
    }
    return kOk;
}
