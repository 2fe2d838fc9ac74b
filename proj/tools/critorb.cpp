// critorb: config-driven runner for orbit search on model surfaces.
//
// Subcommands: presets, action-eval, shoot, minimize, mountain-pass, sweep,
// mane, taimanov, chain-check. Each run writes CSV artifacts plus one JSON
// summary into --out. Exit codes: 0 success, 1 config error, 2 numerical
// failure.

#include "critorb/config.hpp"
#include "critorb/families.hpp"
#include "critorb/minimax.hpp"
#include "critorb/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

using namespace critorb;
using nlohmann::json;

namespace {

struct CommonArgs {
    std::string config_file;
    std::string preset;
    std::string out_dir = ".";
    double k = std::numeric_limits<double>::quiet_NaN();
    std::string k_grid;
    unsigned seed = 1;

    void attach(CLI::App* app) {
        app->add_option("--config", config_file, "JSON run configuration");
        app->add_option("--preset", preset, "named preset model");
        app->add_option("--out", out_dir, "output directory");
        app->add_option("--k", k, "energy value");
        app->add_option("--k-grid", k_grid, "energy grid lo:hi:n");
        app->add_option("--seed", seed, "RNG seed");
    }

    RunConfig load() const {
        RunConfig cfg;
        if (!config_file.empty()) {
            cfg = RunConfig::from_file(config_file);
        } else if (!preset.empty()) {
            cfg.model = presets::by_name(preset);
        } else {
            throw PreconditionError("provide --config or --preset");
        }
        if (!std::isnan(k)) cfg.k = k;
        if (!k_grid.empty()) cfg.k_grid = parse_k_grid(k_grid);
        cfg.seed = seed;
        if (out_dir != ".") cfg.out_dir = out_dir;
        return cfg;
    }
};

void write_summary(const RunConfig& cfg, const std::string& command, json results) {
    std::filesystem::create_directories(cfg.out_dir);
    json j;
    j["command"] = command;
    j["model"] = cfg.model.name;
    j["k"] = cfg.k;
    j["seed"] = cfg.seed;
    j["results"] = std::move(results);
    std::ofstream os(cfg.out_dir + "/summary.json");
    os << j.dump(2) << "\n";
}

json certificate_json(const OrbitCertificate& c) {
    return json{{"closure_residual", c.closure_residual},
                {"energy_drift", c.energy_drift},
                {"conormal_residual_0", c.conormal_residual_0},
                {"conormal_residual_1", c.conormal_residual_1},
                {"clipped", c.clipped}};
}

json report_json(const CriticalPointReport& rep) {
    return json{{"status", to_string(rep.status)},
                {"value", rep.value},
                {"eta_norm", rep.eta_norm},
                {"T", rep.path.T},
                {"hessian_index", rep.hessian_negative_count},
                {"winding", {rep.homotopy.winding.x(), rep.homotopy.winding.y()}},
                {"reason", rep.reason},
                {"certificate", certificate_json(rep.certificate)}};
}

// Reference evaluation path per preset for action-eval.
DiscretePath reference_path(const LagrangianModel& m, int nodes) {
    switch (m.surface.kind) {
        case SurfaceKind::FlatTorus:
            if (m.name == "torus-psi-cutoff") return psi_example_path_a(m.surface, nodes);
            return circle_loop(m.surface, ChartPoint(0.5, 0.5), 0.2, nodes, 1.0, false);
        case SurfaceKind::HyperbolicHalfPlane:
            return hyperbolic_circle_loop(m.surface, 0.0, 1.0, 1.0, nodes,
                                          2 * M_PI * std::sinh(1.0), true);
        case SurfaceKind::RoundSphere:
            return circle_loop(m.surface, ChartPoint(0, 0), std::tan(M_PI / 8), nodes,
                               2 * M_PI * std::sin(M_PI / 4), false);
    }
    throw PreconditionError("no reference path for this surface");
}

DiscretePath default_minimize_seed(const RunConfig& cfg, double k) {
    const auto& m = cfg.model;
    if (cfg.has_boundary_circles) {
        const ChartPoint a = cfg.boundary.Q0.at(0.37, m.surface);
        const ChartPoint b = cfg.boundary.Q1.project(m.surface, a);
        DiscretePath p;
        p.surface_tag = m.surface.kind;
        p.T = 1.0;
        p.boundary = cfg.boundary;
        for (int i = 0; i <= cfg.nodes; ++i) {
            const double t = double(i) / cfg.nodes;
            p.nodes.push_back(ChartPoint(a.xy + t * (b.xy - a.xy)));
        }
        return p;
    }
    switch (m.surface.kind) {
        case SurfaceKind::FlatTorus:
            return lattice_loop(m.surface, 1, 0, ChartPoint(0.0, 0.35), cfg.nodes,
                                1.0 / std::sqrt(std::max(0.1, 2 * k)));
        case SurfaceKind::HyperbolicHalfPlane: {
            const double r = std::atanh(std::min(0.95, std::sqrt(2 * k)));
            return hyperbolic_circle_loop(m.surface, 0.0, 4.0, r, cfg.nodes,
                                          2 * M_PI * std::sinh(r) / std::sqrt(2 * k), true);
        }
        case SurfaceKind::RoundSphere:
            return circle_loop(m.surface, ChartPoint(0, 0),
                               std::tan(0.5 * std::atan(std::sqrt(2 * k))), cfg.nodes,
                               2 * M_PI / std::sqrt(1 + 2 * k), true);
    }
    throw PreconditionError("no default seed");
}

int run_action_eval(const CommonArgs& args, const std::string& path_file) {
    RunConfig cfg = args.load();
    DiscretePath p;
    double k = cfg.k;
    if (!path_file.empty()) {
        std::ifstream is(path_file);
        if (!is) throw PreconditionError("cannot open path file: " + path_file);
        auto [loaded, kk] = read_path_csv(is);
        p = loaded;
        p.surface_tag = cfg.model.surface.kind;
    } else {
        p = reference_path(cfg.model, cfg.nodes);
    }
    const double a = action(cfg.model, p, k);
    std::cout << std::setprecision(12) << a << "\n";
    write_summary(cfg, "action-eval",
                  json{{"action", a}, {"length", length(cfg.model.surface, p)},
                       {"kinetic", kinetic(cfg.model.surface, p)}, {"T", p.T}});
    return 0;
}

int run_shoot(const CommonArgs& args, std::vector<double> q0v, std::vector<double> v0v,
              double T, int steps) {
    RunConfig cfg = args.load();
    ChartPoint q0(q0v.at(0), q0v.at(1));
    Vec2 v0(v0v.at(0), v0v.at(1));
    const auto r = shoot(cfg.model, q0, v0, T, steps);
    std::filesystem::create_directories(cfg.out_dir);
    write_path_csv(cfg.out_dir + "/orbit.csv", r.path, energy(cfg.model, q0, v0));
    write_summary(cfg, "shoot",
                  json{{"energy", energy(cfg.model, q0, v0)},
                       {"certificate", certificate_json(r.certificate)}});
    std::cout << "closure_residual " << r.certificate.closure_residual << " energy_drift "
              << r.certificate.energy_drift << "\n";
    return r.certificate.clipped ? 2 : 0;
}

int run_minimize(const CommonArgs& args, std::vector<int> winding) {
    RunConfig cfg = args.load();
    DiscretePath seed = default_minimize_seed(cfg, cfg.k);
    if (winding.size() == 2 && cfg.model.surface.kind == SurfaceKind::FlatTorus &&
        !cfg.has_boundary_circles) {
        if (winding[0] == 0 && winding[1] == 0) {
            seed = circle_loop(cfg.model.surface, ChartPoint(0.5, 0.5), 0.1, cfg.nodes, 0.5,
                               false);
        } else {
            seed = lattice_loop(cfg.model.surface, winding[0], winding[1],
                                ChartPoint(0.0, 0.35), cfg.nodes, 1.0);
        }
    }
    MinimizeConfig mc;
    mc.flow = cfg.flow;
    auto rep = minimize(cfg.model, seed, cfg.k, mc);
    std::filesystem::create_directories(cfg.out_dir);
    write_path_csv(cfg.out_dir + "/orbit.csv", rep.path, cfg.k);
    {
        std::ofstream os(cfg.out_dir + "/trace.csv");
        rep.trace.write_csv(os);
    }
    write_summary(cfg, "minimize", report_json(rep));
    std::cout << "status " << to_string(rep.status) << " value " << rep.value
              << " eta_norm " << rep.eta_norm << "\n";
    return rep.is_orbit() || rep.status == OrbitStatus::Collapse ||
                   rep.status == OrbitStatus::Infeasible
               ? 0
               : 2;
}

MinimaxFamily default_family(const RunConfig& cfg, double k) {
    const auto& m = cfg.model;
    if (m.surface.kind == SurfaceKind::RoundSphere)
        return sphere_latitude_family(m, k, 33, std::min(cfg.nodes, 96));
    if (cfg.has_boundary_circles) {
        // hill = potential maximum
        ChartPoint hill(0, 0);
        double vb = -1e300;
        for (int i = 0; i < 32; ++i)
            for (int j = 0; j < 32; ++j) {
                const ChartPoint q((i + 0.5) / 32.0, (j + 0.5) / 32.0);
                if (m.V(q) > vb) {
                    vb = m.V(q);
                    hill = q;
                }
            }
        const auto pts = intersection_points(m.surface, cfg.boundary.Q0, cfg.boundary.Q1);
        if (pts.empty()) throw PreconditionError("Q0 and Q1 do not intersect");
        return gamma_family_conormal(m, cfg.boundary.Q0, cfg.boundary.Q1, pts.front(), hill,
                                     k, 25, std::min(cfg.nodes, 64));
    }
    throw PreconditionError("mountain-pass needs a sphere preset or conormal circles");
}

int run_mountain_pass(const CommonArgs& args) {
    RunConfig cfg = args.load();
    auto fam = default_family(cfg, cfg.k);
    MountainPassConfig mp;
    mp.compute_index = true;
    auto res = mountain_pass(cfg.model, fam, cfg.k, mp);
    std::filesystem::create_directories(cfg.out_dir);
    write_path_csv(cfg.out_dir + "/candidate.csv", res.candidate.path, cfg.k);
    json j = report_json(res.candidate);
    j["c_value"] = res.c_value;
    write_summary(cfg, "mountain-pass", j);
    std::cout << "c " << res.c_value << " status " << to_string(res.candidate.status)
              << " eta_norm " << res.candidate.eta_norm << "\n";
    return res.candidate.is_orbit() ? 0 : 2;
}

int run_sweep(const CommonArgs& args) {
    RunConfig cfg = args.load();
    if (cfg.k_grid.empty()) throw PreconditionError("sweep needs --k-grid");
    auto builder = [&](double k) { return default_family(cfg, k); };
    MountainPassConfig mp;
    mp.compute_index = true;
    auto res = minimax_sweep(cfg.model, builder, cfg.k_grid, mp);
    std::filesystem::create_directories(cfg.out_dir);
    {
        std::ofstream os(cfg.out_dir + "/sweep.csv");
        res.write_csv(os);
    }
    json rows = json::array();
    for (const auto& r : res.rows)
        rows.push_back(json{{"k", r.k},
                            {"c", r.c},
                            {"T", r.T_orbit},
                            {"slope", r.slope},
                            {"status", r.status},
                            {"hessian_index", r.hessian_index}});
    write_summary(cfg, "sweep",
                  json{{"rows", rows},
                       {"monotone", res.monotone},
                       {"max_violation", res.max_violation}});
    std::cout << "sweep points " << res.rows.size() << " monotone "
              << (res.monotone ? "yes" : "no") << "\n";
    return res.monotone ? 0 : 2;
}

int run_mane(const CommonArgs& args, double k_lo, double k_hi, double width) {
    RunConfig cfg = args.load();
    ReportOptions opt;
    opt.bracket_width = width;
    const auto cu =
        mane_bracket(cfg.model, k_lo, k_hi, ManeVariant::Contractible, width, 24, opt.search);
    ManeBracket c = cu;
    if (cfg.model.theta_global)
        c = mane_bracket(cfg.model, k_lo, k_hi, ManeVariant::Full, width, 24, opt.search);
    std::filesystem::create_directories(cfg.out_dir);
    {
        std::ofstream os(cfg.out_dir + "/bracket.csv");
        os << "quantity,lo,hi,method\n" << std::setprecision(17);
        os << "cu," << cu.lo << "," << cu.hi << "," << cu.method << "\n";
        os << "c," << c.lo << "," << c.hi << "," << c.method << "\n";
    }
    write_summary(cfg, "mane",
                  json{{"cu", {cu.lo, cu.hi}},
                       {"c", {c.lo, c.hi}},
                       {"lo_certified", c.lo_certified},
                       {"width", c.width()}});
    std::cout << std::setprecision(12) << "cu [" << cu.lo << ", " << cu.hi << "] c [" << c.lo
              << ", " << c.hi << "]\n";
    return c.lo_certified ? 0 : 2;
}

int run_taimanov(const CommonArgs& args, int grid) {
    RunConfig cfg = args.load();
    const auto br = tau_plus_bracket(cfg.model, 1e-3, 10.0, grid);
    const auto films = density_film_family(cfg.model, grid);
    std::filesystem::create_directories(cfg.out_dir);
    {
        std::ofstream os(cfg.out_dir + "/taimanov.csv");
        os << "k,inf_Tk\n" << std::setprecision(17);
        for (double k : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0})
            os << k << "," << taimanov_inf(cfg.model, films, k) << "\n";
    }
    write_summary(cfg, "taimanov",
                  json{{"tau_plus", {br.lo, br.hi}}, {"valid", br.valid}, {"grid", grid}});
    if (br.valid)
        std::cout << std::setprecision(12) << "tau_plus [" << br.lo << ", " << br.hi << "]\n";
    else
        std::cout << "tau_plus not bracketed in [1e-3, 10]\n";
    return br.valid ? 0 : 2;
}

int run_chain_check(const CommonArgs& args) {
    std::vector<std::string> names;
    if (!args.preset.empty())
        names.push_back(args.preset);
    else
        names = presets::names();
    bool all_ok = true;
    json out = json::array();
    RunConfig cfg;
    cfg.out_dir = args.out_dir;
    std::filesystem::create_directories(cfg.out_dir);
    for (const auto& name : names) {
        const auto m = presets::by_name(name);
        ReportOptions opt;
        if (name == "torus-psi-cutoff") {
            opt.with_kq = true;
            opt.Q0 = CircleSpec::point(ChartPoint(0.5, 0.5));
            opt.Q1 = CircleSpec::horizontal(0.5);
        } else if (name == "mechanical-torus") {
            opt.with_kq = true;
            opt.Q0 = CircleSpec::vertical(0.25);
            opt.Q1 = CircleSpec::horizontal(0.25);
        }
        const auto rep = critical_value_report(m, opt);
        const auto chk = chain_check(rep);
        all_ok = all_ok && chk.consistent;
        {
            std::ofstream os(cfg.out_dir + "/report-" + name + ".csv");
            rep.write_csv(os);
        }
        json lines = json::array();
        for (const auto& l : chk.lines) lines.push_back(l);
        out.push_back(json{{"model", name}, {"consistent", chk.consistent}, {"chain", lines}});
        std::cout << name << ": " << (chk.consistent ? "chain ok" : "chain VIOLATED") << "\n";
    }
    cfg.model.name = "all";
    write_summary(cfg, "chain-check", out);
    return all_ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"critical-point orbit search on model surfaces"};
    app.require_subcommand(1);

    CommonArgs args;

    auto* presets_cmd = app.add_subcommand("presets", "list built-in models");

    auto* action_cmd = app.add_subcommand("action-eval", "evaluate the free-time action");
    std::string path_file;
    args.attach(action_cmd);
    action_cmd->add_option("--path", path_file, "path CSV to evaluate");

    auto* shoot_cmd = app.add_subcommand("shoot", "integrate an initial condition");
    std::vector<double> q0{0.0, 0.0}, v0{1.0, 0.0};
    double T = 1.0;
    int steps = 1000;
    args.attach(shoot_cmd);
    shoot_cmd->add_option("--q0", q0, "initial point x,y")->expected(2);
    shoot_cmd->add_option("--v0", v0, "initial velocity vx,vy")->expected(2);
    shoot_cmd->add_option("--T", T, "integration time");
    shoot_cmd->add_option("--steps", steps, "RK4 steps");

    auto* minimize_cmd = app.add_subcommand("minimize", "descend to a critical point");
    std::vector<int> winding;
    args.attach(minimize_cmd);
    minimize_cmd->add_option("--class", winding, "torus winding class m,n")->expected(2);

    auto* mp_cmd = app.add_subcommand("mountain-pass", "minimax over a path family");
    args.attach(mp_cmd);

    auto* sweep_cmd = app.add_subcommand("sweep", "mountain-pass sweep over k");
    args.attach(sweep_cmd);

    auto* mane_cmd = app.add_subcommand("mane", "bracket the Mane critical values");
    double k_lo = -0.25, k_hi = 1.5, width = 0.02;
    args.attach(mane_cmd);
    mane_cmd->add_option("--k-lo", k_lo, "search range lower end");
    mane_cmd->add_option("--k-hi", k_hi, "search range upper end");
    mane_cmd->add_option("--width", width, "bracket width target");

    auto* tai_cmd = app.add_subcommand("taimanov", "tau_plus film bracket");
    int grid = 256;
    args.attach(tai_cmd);
    tai_cmd->add_option("--grid", grid, "film grid resolution");

    auto* chain_cmd = app.add_subcommand("chain-check", "critical value chain per preset");
    args.attach(chain_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (presets_cmd->parsed()) {
            for (const auto& n : presets::names()) std::cout << n << "\n";
            return 0;
        }
        if (action_cmd->parsed()) return run_action_eval(args, path_file);
        if (shoot_cmd->parsed()) return run_shoot(args, q0, v0, T, steps);
        if (minimize_cmd->parsed()) return run_minimize(args, winding);
        if (mp_cmd->parsed()) return run_mountain_pass(args);
        if (sweep_cmd->parsed()) return run_sweep(args);
        if (mane_cmd->parsed()) return run_mane(args, k_lo, k_hi, width);
        if (tai_cmd->parsed()) return run_taimanov(args, grid);
        if (chain_cmd->parsed()) return run_chain_check(args);
    } catch (const PreconditionError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 1;
    } catch (const UnsupportedError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 1;
    } catch (const std::exception& ex) {
        std::cerr << "numerical failure: " << ex.what() << "\n";
        return 2;
    }
    return 1;
}
