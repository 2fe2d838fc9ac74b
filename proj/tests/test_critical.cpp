#include "critorb/minimax.hpp"
#include "critorb/families.hpp"
#include "critorb/presets.hpp"

#include <doctest.h>
#include <random>

using namespace critorb;

TEST_CASE("minimize: class-(1,0) geodesic on the flat torus") {
    auto flat = presets::torus_constant_b(0.0);
    const double k = 0.5;
    std::mt19937_64 rng(97);
    std::normal_distribution<double> g(0.0, 0.02);
    auto seed = lattice_loop(flat.surface, 1, 0, ChartPoint(0.0, 0.35), 64, 1.3);
    for (size_t i = 1; i + 1 < seed.nodes.size(); ++i) seed.nodes[i].xy += Vec2(g(rng), g(rng));
    seed.nodes.back() = ChartPoint(seed.nodes.front().xy + Vec2(1.0, 0.0));

    MinimizeConfig cfg;
    cfg.flow.cutoff.enabled = false;
    cfg.flow.max_iters = 3000;
    cfg.compute_index = true;
    auto rep = minimize(flat, seed, k, cfg);
    CHECK(rep.is_orbit());
    CHECK(rep.homotopy.winding == Eigen::Vector2i(1, 0));
    CHECK(std::abs(rep.value - 1.0) < 1e-4);  // sqrt(2k) Lx = 1
    CHECK(rep.certificate.closure_residual < 1e-4);
    CHECK(rep.certificate.energy_drift < 1e-6);
    CHECK(rep.hessian_negative_count == 0);  // minimizer
}

TEST_CASE("minimize: collapse at zero level from a constant-path start") {
    auto m = presets::torus_constant_b(1.0);
    auto seed = circle_loop(m.surface, ChartPoint(0.3, 0.7), 0.02, 32, 0.3, false);
    MinimizeConfig cfg;
    cfg.flow.max_iters = 3000;
    cfg.polish = false;
    auto rep = minimize(m, seed, 1.0, cfg);  // k = 1 > e0 = 0
    CHECK(rep.status == OrbitStatus::Collapse);
    const auto d = ps_monitor(rep.trace);
    CHECK(d.cls == PsDiagnostics::Class::CollapseAtZeroLevel);
}

TEST_CASE("minimize: hyperbolic subcritical circle orbit") {
    auto m = presets::hyperbolic_horocycle();
    const double k = 0.25;
    // seed near the expected orbit, radius arccoth(1/sqrt(2k)) around (0,4)
    const double r_orbit = std::atanh(std::sqrt(2 * k));  // arccoth(1/x) = artanh(x)
    auto seed = hyperbolic_circle_loop(m.surface, 0.3, 4.0, 1.15 * r_orbit, 96,
                                       2 * M_PI * std::sinh(r_orbit) / std::sqrt(2 * k),
                                       true);
    MinimizeConfig cfg;
    cfg.flow.cutoff.enabled = false;
    cfg.flow.max_iters = 1500;
    cfg.flow.tol = 1e-9;
    auto rep = minimize(m, seed, k, cfg);
    CHECK(rep.is_orbit());
    // the converged loop is a hyperbolic circle of radius arccoth(1/sqrt(2k))
    const double l = length(m.surface, rep.path);
    const double r_found = std::asinh(l / (2 * M_PI));
    CHECK(std::abs(r_found - r_orbit) < 1e-3);
    CHECK(rep.certificate.closure_residual < 1e-4);
}

TEST_CASE("minimize declares infeasibility under the conormal obstruction") {
    auto m = presets::torus_psi_cutoff();
    const double k = 0.3;  // below min_conormal_energy(Q1) = 1/2
    const auto Q0 = CircleSpec::point(ChartPoint(0.5, 0.5));
    const auto Q1 = CircleSpec::horizontal(0.5);
    DiscretePath seed;
    seed.surface_tag = SurfaceKind::FlatTorus;
    seed.T = 1.0;
    seed.boundary = BoundarySpec::conormal(Q0, Q1);
    const int n = 48;
    for (int i = 0; i <= n; ++i) {
        const double s = double(i) / n;
        seed.nodes.emplace_back(0.5 - 0.6 * s, 0.5);
    }
    MinimizeConfig cfg;
    cfg.flow.max_iters = 800;
    auto rep = minimize(m, seed, k, cfg);
    CHECK(rep.status != OrbitStatus::Orbit);
    CHECK(!rep.reason.empty());
    // the residual stays bounded away from zero by the derived bound
    const double bound = std::abs(std::sqrt(2 * k) - 1.0);
    const auto res = conormal_residual(m, rep.path, Q0, Q1, 1e-2);
    CHECK(res.second >= 0.95 * bound);
}

TEST_CASE("string_minimax on a synthetic double well returns the saddle value") {
    // V(x,y) = (x^2-1)^2 + 2 y^2: minima at (+-1, 0), saddle value 1 at (0,0)
    struct ToySystem {
        std::vector<double> values(const std::vector<Vec2>& pts) const {
            std::vector<double> v;
            v.reserve(pts.size());
            for (const auto& p : pts) v.push_back(sq(p.x() * p.x() - 1.0) + 2 * sq(p.y()));
            return v;
        }
        double period(const Vec2&) const { return 0.0; }
        Vec2 step(const Vec2& p) const {
            const Vec2 g(4.0 * p.x() * (p.x() * p.x() - 1.0), 4.0 * p.y());
            const double n = std::sqrt(1.0 + g.squaredNorm());
            return p - 0.05 * g / n;
        }
    } sys;
    std::vector<Vec2> family;
    for (int j = 0; j <= 40; ++j) {
        const double t = j / 40.0;
        family.emplace_back(-1.0 + 2.0 * t, 0.4 * std::sin(M_PI * t) + 0.1);
    }
    auto res = string_minimax(sys, family, 4000, false);
    CHECK(res.c_value == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("hessian index: minimizer zero, stable under refinement") {
    auto flat = presets::torus_constant_b(0.0);
    const double k = 0.5;
    auto geo = lattice_loop(flat.surface, 1, 0, ChartPoint(0.0, 0.3), 48,
                            1.0 / std::sqrt(2 * k));
    CHECK(hessian_index(flat, geo, k) == 0);
    auto fine = resample(geo, 96);
    CHECK(hessian_index(flat, fine, k) == 0);
    // non-critical input is rejected
    auto off = geo;
    off.T *= 2.0;
    CHECK_THROWS_AS(hessian_index(flat, off, k), PreconditionError);
}

TEST_CASE("mountain pass on the mechanical conormal problem") {
    auto m = presets::mechanical_torus();
    const double k = 0.5;
    const auto Q0 = CircleSpec::vertical(0.25);
    const auto Q1 = CircleSpec::horizontal(0.25);
    auto fam = gamma_family_conormal(m, Q0, Q1, ChartPoint(0.25, 0.25), ChartPoint(0.0, 0.0),
                                     k, 25, 48);
    MountainPassConfig cfg;
    cfg.rounds = 400;
    cfg.step = 0.05;
    cfg.compute_index = true;
    auto res = mountain_pass(m, fam, k, cfg);
    CHECK(res.c_value > 0.0);
    CHECK(res.candidate.is_orbit());
    CHECK(res.candidate.eta_norm < 1e-6);
    CHECK(res.candidate.hessian_negative_count >= 1);
    // alpha lower bound from the minimax geometry, and its scaling in eps:
    // alpha(eps) = (2 sqrt(a (k - c_E)) - c_theta) eps with c_E, c_theta sups
    // near the intersection (theta = 0 here)
    auto alpha = [&](double eps) {
        double cE = -1e300;
        for (int i = 0; i <= 64; ++i) {
            const double t = 2 * M_PI * i / 64.0;
            const ChartPoint q(0.25 + eps * std::cos(t), 0.25 + eps * std::sin(t));
            cE = std::max(cE, m.V(q));
        }
        return (2.0 * std::sqrt(m.convexity_a * (k - cE))) * eps;
    };
    const double e1 = 0.02;
    CHECK(res.c_value >= alpha(e1));
    CHECK(res.c_value >= alpha(e1 / 2));
    CHECK(alpha(e1) / alpha(e1 / 2) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("invalid families are rejected") {
    auto m = presets::mechanical_torus();
    // k below the intersection energy: valleys merged
    const auto Q0 = CircleSpec::vertical(0.0);
    const auto Q1 = CircleSpec::horizontal(0.0);
    CHECK_THROWS_AS(gamma_family_conormal(m, Q0, Q1, ChartPoint(0.0, 0.0),
                                          ChartPoint(0.0, 0.0), 0.5, 17, 32),
                    InvalidFamilyError);
}

TEST_CASE("minimax_sweep reports invalid families below the window") {
    auto m = presets::mechanical_torus();
    const auto Q0 = CircleSpec::vertical(0.0);
    const auto Q1 = CircleSpec::horizontal(0.0);
    auto builder = [&](double k) {
        return gamma_family_conormal(m, Q0, Q1, ChartPoint(0.0, 0.0), ChartPoint(0.0, 0.0),
                                     k, 17, 32);
    };
    MountainPassConfig cfg;
    cfg.rounds = 10;
    auto res = minimax_sweep(m, builder, {0.3, 0.5, 0.7}, cfg);
    for (const auto& row : res.rows) CHECK(row.status == "invalid-family");
}
