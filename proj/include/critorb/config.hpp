#pragma once

#include "critorb/descent.hpp"
#include "critorb/expr.hpp"
#include "critorb/presets.hpp"

#include <json.hpp>

#include <fstream>

namespace critorb {

// Parsed run configuration: a validated model plus solver knobs. Parsing
// failures throw PreconditionError with the failing JSON pointer or the
// parser's position message.
struct RunConfig {
    LagrangianModel model;
    BoundarySpec boundary = BoundarySpec::periodic();
    bool has_boundary_circles = false;
    double k = 0.5;
    std::vector<double> k_grid;
    unsigned seed = 1;
    std::string out_dir = ".";
    FlowConfig flow;
    int nodes = 128;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::string& path);
};

namespace detail_config {

using nlohmann::json;

inline ScalarField scalar_expr(const SurfaceModel& s, const std::string& text) {
    Expr e = Expr::parse(text);
    if (s.kind == SurfaceKind::FlatTorus) {
        const double Lx = s.Lx, Ly = s.Ly;
        return [e, Lx, Ly](const ChartPoint& q) {
            const double x = q.x() - std::floor(q.x() / Lx) * Lx;
            const double y = q.y() - std::floor(q.y() / Ly) * Ly;
            return e.eval(x, y);
        };
    }
    return [e](const ChartPoint& q) { return e.eval(q.x(), q.y()); };
}

inline CircleSpec circle_from_json(const json& j, const std::string& where) {
    const std::string kind = j.value("kind", "");
    if (kind == "horizontal") return CircleSpec::horizontal(j.at("y").get<double>());
    if (kind == "vertical") return CircleSpec::vertical(j.at("x").get<double>());
    if (kind == "point")
        return CircleSpec::point(
            ChartPoint(j.at("x").get<double>(), j.at("y").get<double>()));
    if (kind == "round")
        return CircleSpec::round(
            ChartPoint(j.at("cx").get<double>(), j.at("cy").get<double>()),
            j.at("r").get<double>());
    throw PreconditionError(where + ": circle kind must be horizontal|vertical|point|round");
}

inline SurfaceModel surface_from_json(const json& j) {
    const std::string kind = j.value("kind", "flat-torus");
    if (kind == "flat-torus")
        return SurfaceModel::flat_torus(j.value("Lx", 1.0), j.value("Ly", 1.0));
    if (kind == "hyperbolic") {
        HyperbolicBox b;
        if (j.contains("box")) {
            const auto& a = j.at("box");
            if (!a.is_array() || a.size() != 4)
                throw PreconditionError("/surface/box: expected [xmin,xmax,ymin,ymax]");
            b.xmin = a[0].get<double>();
            b.xmax = a[1].get<double>();
            b.ymin = a[2].get<double>();
            b.ymax = a[3].get<double>();
        }
        if (b.ymin <= 0)
            throw PreconditionError("/surface/box: ymin must be positive (half-plane)");
        return SurfaceModel::hyperbolic(b);
    }
    if (kind == "sphere") return SurfaceModel::sphere(j.value("radius", 1.0));
    throw PreconditionError("/surface/kind: must be flat-torus|hyperbolic|sphere");
}

}  // namespace detail_config

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
    using nlohmann::json;
    RunConfig cfg;

    if (j.contains("preset")) {
        cfg.model = presets::by_name(j.at("preset").get<std::string>());
    } else {
        if (!j.contains("surface"))
            throw PreconditionError("config needs either /preset or /surface");
        cfg.model.surface = detail_config::surface_from_json(j.at("surface"));
        cfg.model.name = j.value("name", "custom");
    }

    if (j.contains("lagrangian")) {
        const auto& l = j.at("lagrangian");
        const auto& s = cfg.model.surface;
        if (l.contains("V")) {
            cfg.model.V = detail_config::scalar_expr(s, l.at("V").get<std::string>());
            cfg.model.grad_V = nullptr;  // numeric fallback
        }
        if (l.contains("sigma_density"))
            cfg.model.sigma_density =
                detail_config::scalar_expr(s, l.at("sigma_density").get<std::string>());
        if (l.contains("theta")) {
            const auto& th = l.at("theta");
            if (!th.is_array() || th.size() != 2)
                throw PreconditionError("/lagrangian/theta: expected [expr_x, expr_y]");
            auto tx = detail_config::scalar_expr(s, th[0].get<std::string>());
            auto ty = detail_config::scalar_expr(s, th[1].get<std::string>());
            cfg.model.theta_global = true;
            cfg.model.theta = [tx, ty](const ChartPoint& q) {
                return Vec2(tx(q), ty(q));
            };
            cfg.model.theta_jac = nullptr;  // numeric fallback
            if (!l.contains("sigma_density")) {
                // derive the density from d theta
                auto theta = cfg.model.theta;
                auto surf = s;
                cfg.model.sigma_density = [theta, surf](const ChartPoint& q) {
                    const Mat2 J = numeric_jacobian(theta, q);
                    return (J(1, 0) - J(0, 1)) / sq(surf.conformal_factor(q));
                };
            }
        }
        if (l.contains("bounds")) {
            cfg.model.bound_a = l.at("bounds").value("a", cfg.model.bound_a);
            cfg.model.bound_b = l.at("bounds").value("b", cfg.model.bound_b);
            if (cfg.model.bound_a <= 0)
                throw PreconditionError("/lagrangian/bounds/a must be positive");
        }
    }

    if (j.contains("boundary")) {
        const auto& b = j.at("boundary");
        const std::string kind = b.value("kind", "periodic");
        if (kind == "periodic") {
            cfg.boundary = BoundarySpec::periodic();
        } else if (kind == "conormal") {
            cfg.boundary = BoundarySpec::conormal(
                detail_config::circle_from_json(b.at("Q0"), "/boundary/Q0"),
                detail_config::circle_from_json(b.at("Q1"), "/boundary/Q1"));
            cfg.has_boundary_circles = true;
        } else {
            throw PreconditionError("/boundary/kind: must be periodic|conormal");
        }
    }

    if (j.contains("k")) cfg.k = j.at("k").get<double>();
    if (j.contains("k_grid")) {
        const auto& g = j.at("k_grid");
        if (g.is_array()) {
            for (const auto& v : g) cfg.k_grid.push_back(v.get<double>());
        } else {
            throw PreconditionError("/k_grid: expected an array of energies");
        }
    }
    cfg.seed = j.value("seed", 1u);
    cfg.out_dir = j.value("out", ".");
    cfg.nodes = j.value("nodes", 128);
    if (cfg.nodes < 16) throw PreconditionError("/nodes: need at least 16");

    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        cfg.flow.tol = t.value("grad", cfg.flow.tol);
        cfg.flow.max_iters = t.value("max_iters", cfg.flow.max_iters);
        cfg.flow.step = t.value("step", cfg.flow.step);
        cfg.flow.T_floor = t.value("T_floor", cfg.flow.T_floor);
        if (t.value("metric", std::string("H1")) == "L2") cfg.flow.metric = GradMetric::L2;
    }
    return cfg;
}

inline RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw PreconditionError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(is);
    } catch (const nlohmann::json::parse_error& ex) {
        throw PreconditionError(std::string("config parse error: ") + ex.what());
    }
    try {
        return from_json(j);
    } catch (const nlohmann::json::exception& ex) {
        throw PreconditionError(std::string("config error: ") + ex.what());
    }
}

// Parse "lo:hi:n" into an increasing grid.
inline std::vector<double> parse_k_grid(const std::string& text) {
    std::vector<double> out;
    double lo, hi;
    int n;
    char c1, c2;
    std::istringstream is(text);
    if (!(is >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || !(hi > lo))
        throw PreconditionError("--k-grid expects lo:hi:n with hi>lo, n>=1");
    for (int i = 0; i < n; ++i)
        out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1.0));
    return out;
}

}  // namespace critorb
