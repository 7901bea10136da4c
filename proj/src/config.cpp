#include "twistray/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "twistray/errors.hpp"

namespace twistray {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, std::set<std::string> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : obj.items()) {
        if (!allowed.count(item.key())) {
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

double positive(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    const double d = v.get<double>();
    if (d <= 0.0) throw ConfigError(where + ": must be positive");
    return d;
}

Vec2 vec2_of(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2) throw ConfigError(where + ": expected [x, y]");
    return {v[0].get<double>(), v[1].get<double>()};
}

BoundaryComponent parse_component(const json& j, const std::string& where, bool emitter) {
    check_keys(j, where, {"type", "center", "radius", "a", "b", "rho", "anchor"});
    const std::string type = j.value("type", "circle");
    if (type == "circle") {
        const Vec2 c = j.contains("center") ? vec2_of(j["center"], where) : Vec2{0, 0};
        const double r = positive(j.at("radius"), where + ".radius");
        return BoundaryComponent::circle(c.x, c.y, r, emitter);
    }
    if (type == "ellipse") {
        const Vec2 c = j.contains("center") ? vec2_of(j["center"], where) : Vec2{0, 0};
        const double a = positive(j.at("a"), where + ".a");
        const double b = positive(j.at("b"), where + ".b");
        return BoundaryComponent::ellipse(c.x, c.y, a, b, emitter);
    }
    if (type == "expr") {
        if (!j.contains("rho")) throw ConfigError(where + ": expr component needs 'rho'");
        const Vec2 anchor = j.contains("anchor") ? vec2_of(j["anchor"], where) : Vec2{0, 0};
        try {
            return BoundaryComponent::from_expr(ExprField::parse(j["rho"].get<std::string>()),
                                                anchor);
        } catch (const SyntaxError& e) {
            throw ConfigError(where + ".rho: " + e.what());
        }
    }
    throw ConfigError(where + ": unknown component type '" + type + "'");
}

ScalarFieldPtr parse_field(const json& j, const std::string& where) {
    if (!j.is_string()) throw ConfigError(where + ": expected an expression string");
    try {
        return ExprField::parse(j.get<std::string>());
    } catch (const SyntaxError& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace

RunConfig parse_config_text(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    check_keys(root, "config",
               {"chart", "lambda", "integrator", "grid", "rays", "integrand", "inversion",
                "pestov", "output"});

    RunConfig cfg;

    // chart
    if (!root.contains("chart")) throw ConfigError("config: missing 'chart'");
    {
        const json& jc = root["chart"];
        check_keys(jc, "chart", {"phi", "domain"});
        ScalarFieldPtr phi =
            jc.contains("phi") ? parse_field(jc["phi"], "chart.phi") : zero_field();
        if (!jc.contains("domain")) throw ConfigError("chart: missing 'domain'");
        const json& jd = jc["domain"];
        check_keys(jd, "chart.domain", {"emitter", "reflector"});
        if (!jd.contains("emitter") || !jd.contains("reflector")) {
            throw ConfigError("chart.domain: needs 'emitter' and 'reflector'");
        }
        cfg.chart = std::make_shared<Chart>(
            phi, parse_component(jd["emitter"], "chart.domain.emitter", true),
            parse_component(jd["reflector"], "chart.domain.reflector", false));
    }

    // lambda
    if (!root.contains("lambda")) throw ConfigError("config: missing 'lambda'");
    {
        const json& jl = root["lambda"];
        check_keys(jl, "lambda", {"kind", "expr", "lambda_tilde", "E"});
        const std::string kind = jl.value("kind", "expr");
        if (kind == "expr") {
            if (!jl.contains("expr")) throw ConfigError("lambda: expr kind needs 'expr'");
            try {
                cfg.lambda = lambda_expr(jl["expr"].get<std::string>());
            } catch (const SyntaxError& e) {
                throw ConfigError(std::string("lambda.expr: ") + e.what());
            }
        } else if (kind == "magnetic") {
            if (!jl.contains("lambda_tilde")) {
                throw ConfigError("lambda: magnetic kind needs 'lambda_tilde'");
            }
            cfg.lambda = lambda_magnetic(parse_field(jl["lambda_tilde"], "lambda.lambda_tilde"));
        } else if (kind == "thermostat") {
            if (!jl.contains("E") || !jl["E"].is_array() || jl["E"].size() != 2) {
                throw ConfigError("lambda: thermostat kind needs E = [e1, e2]");
            }
            cfg.lambda = lambda_thermostat(parse_field(jl["E"][0], "lambda.E[0]"),
                                           parse_field(jl["E"][1], "lambda.E[1]"),
                                           cfg.chart->phi_ptr());
        } else {
            throw ConfigError("lambda: unknown kind '" + kind + "'");
        }
    }

    // integrator
    if (root.contains("integrator")) {
        const json& ji = root["integrator"];
        check_keys(ji, "integrator",
                   {"step", "rho_tol", "tan_eps", "max_time", "max_reflections"});
        if (ji.contains("step")) cfg.trace.step = positive(ji["step"], "integrator.step");
        if (ji.contains("rho_tol")) {
            cfg.trace.bisect_tol = positive(ji["rho_tol"], "integrator.rho_tol");
        }
        if (ji.contains("tan_eps")) cfg.trace.tan_eps = positive(ji["tan_eps"], "integrator.tan_eps");
        if (ji.contains("max_time")) {
            cfg.trace.max_time = positive(ji["max_time"], "integrator.max_time");
        }
        if (ji.contains("max_reflections")) {
            const int m = ji["max_reflections"].get<int>();
            if (m <= 0) throw ConfigError("integrator.max_reflections: must be positive");
            cfg.trace.max_reflections = m;
        }
    }

    // grid
    if (root.contains("grid")) {
        const json& jg = root["grid"];
        check_keys(jg, "grid", {"nx", "ny", "ntheta", "n_boundary", "box"});
        cfg.grid.nx = jg.value("nx", 64);
        cfg.grid.ny = jg.value("ny", 64);
        cfg.grid.ntheta = jg.value("ntheta", 64);
        cfg.grid.n_boundary = jg.value("n_boundary", 0);
        if (cfg.grid.nx < 8 || cfg.grid.ny < 8 || cfg.grid.ntheta < 8) {
            throw ConfigError("grid: sizes must be >= 8");
        }
        if (jg.contains("box")) {
            const json& b = jg["box"];
            if (!b.is_array() || b.size() != 4) throw ConfigError("grid.box: expected 4 numbers");
            cfg.grid.x0 = b[0].get<double>();
            cfg.grid.x1 = b[1].get<double>();
            cfg.grid.y0 = b[2].get<double>();
            cfg.grid.y1 = b[3].get<double>();
        }
    } else {
        cfg.grid.nx = cfg.grid.ny = cfg.grid.ntheta = 64;
    }

    // rays
    if (root.contains("rays")) {
        const json& jr = root["rays"];
        check_keys(jr, "rays",
                   {"boundary_count", "fiber_count", "count", "seed", "glancing_margin"});
        cfg.ray_boundary_count = jr.value("boundary_count", 50);
        cfg.ray_fiber_count = jr.value("fiber_count", 40);
        cfg.ray_census = jr.value("count", 10000);
        cfg.seed = jr.value("seed", 1);
        if (jr.contains("glancing_margin")) {
            cfg.glancing_margin = positive(jr["glancing_margin"], "rays.glancing_margin");
        }
        if (cfg.ray_boundary_count <= 0 || cfg.ray_fiber_count <= 0 || cfg.ray_census <= 0) {
            throw ConfigError("rays: counts must be positive");
        }
    }

    // integrand
    if (root.contains("integrand")) {
        const json& jf = root["integrand"];
        check_keys(jf, "integrand", {"f0", "alpha"});
        Integrand f;
        if (jf.contains("f0")) f.f0 = parse_field(jf["f0"], "integrand.f0");
        if (jf.contains("alpha")) {
            const json& a = jf["alpha"];
            if (!a.is_array() || a.size() != 2) {
                throw ConfigError("integrand.alpha: expected [a1, a2]");
            }
            f.alpha1 = parse_field(a[0], "integrand.alpha[0]");
            f.alpha2 = parse_field(a[1], "integrand.alpha[1]");
        }
        cfg.integrand = f;
    }

    // inversion
    cfg.fan.n_points = 50;
    cfg.fan.n_angles = 40;
    cfg.fan.glancing_margin = cfg.glancing_margin;
    if (root.contains("inversion")) {
        const json& jv = root["inversion"];
        check_keys(jv, "inversion",
                   {"n_r", "m_max", "r0", "r1", "center", "n_points", "n_angles",
                    "regularization"});
        cfg.basis.n_r = jv.value("n_r", 5);
        cfg.basis.m_max = jv.value("m_max", 2);
        if (cfg.basis.n_r < 2 || cfg.basis.n_r > 12 || cfg.basis.m_max < 1) {
            throw ConfigError("inversion: need 2 <= n_r <= 12 and m_max >= 1");
        }
        if (jv.contains("r0")) cfg.basis.r0 = positive(jv["r0"], "inversion.r0");
        if (jv.contains("r1")) cfg.basis.r1 = positive(jv["r1"], "inversion.r1");
        if (jv.contains("center")) cfg.basis.center = vec2_of(jv["center"], "inversion.center");
        cfg.fan.n_points = jv.value("n_points", 50);
        cfg.fan.n_angles = jv.value("n_angles", 40);
        if (jv.contains("regularization")) {
            const json& jr = jv["regularization"];
            check_keys(jr, "inversion.regularization", {"kind", "value"});
            const std::string kind = jr.value("kind", "tsvd");
            if (kind == "tsvd") {
                cfg.regularization.kind = Regularization::Kind::TruncatedSvd;
            } else if (kind == "tikhonov") {
                cfg.regularization.kind = Regularization::Kind::Tikhonov;
            } else {
                throw ConfigError("inversion.regularization.kind: 'tsvd' or 'tikhonov'");
            }
            if (jr.contains("value")) {
                cfg.regularization.value = positive(jr["value"], "inversion.regularization.value");
            }
        }
    }

    // pestov
    if (root.contains("pestov")) {
        const json& jp = root["pestov"];
        check_keys(jp, "pestov", {"test_functions"});
        if (jp.contains("test_functions")) {
            for (const auto& t : jp["test_functions"]) {
                cfg.pestov_test_functions.push_back(t.get<std::string>());
            }
        }
    }

    if (root.contains("output")) {
        cfg.output_dir = root["output"].get<std::string>();
    }

    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

}  // namespace twistray
