#include "critorb/critical.hpp"
#include "critorb/families.hpp"
#include "critorb/presets.hpp"

#include <doctest.h>
#include <random>

using namespace critorb;

namespace {

DiscretePath wobbled_loop(const SurfaceModel& s, std::mt19937_64& rng, int n, double amp) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ChartPoint c(0.5, 0.5);
    const double r = 0.05 + 0.1 * u(rng);
    const double ph = 2 * M_PI * u(rng);
    return make_loop(
        s,
        [&](double t) {
            const double a = 2 * M_PI * t + ph;
            return ChartPoint(c.xy + r * (1.0 + amp * std::sin(3 * a)) *
                                         Vec2(std::cos(a), std::sin(a)));
        },
        n, 0.2 + 0.8 * u(rng));
}

PathVector displacement(const DiscretePath& a, const DiscretePath& b) {
    PathVector d = PathVector::zero(static_cast<int>(a.nodes.size()));
    for (size_t i = 0; i < a.nodes.size(); ++i) d.node[i] = b.nodes[i].xy - a.nodes[i].xy;
    d.dT = b.T - a.T;
    return d;
}

}  // namespace

TEST_CASE("flow_step fixes certified critical points") {
    auto flat = presets::torus_constant_b(0.0);
    const double k = 0.5;
    auto geo = lattice_loop(flat.surface, 1, 0, ChartPoint(0.0, 0.3), 64, 1.0 / std::sqrt(2 * k));
    FlowConfig cfg;
    cfg.cutoff.enabled = false;
    auto stepped = flow_step(flat, geo, k, cfg);
    for (size_t i = 0; i < geo.nodes.size(); ++i)
        CHECK((stepped.nodes[i].xy - geo.nodes[i].xy).norm() < 1e-12);
    CHECK(std::abs(stepped.T - geo.T) < 1e-12);
}

TEST_CASE("per-step displacement is bounded by the step size") {
    auto m = presets::torus_psi_cutoff();
    std::mt19937_64 rng(67);
    FlowConfig cfg;
    cfg.cutoff.enabled = false;
    cfg.step = 0.07;
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
        auto p = wobbled_loop(m.surface, rng, 24, 0.35);
        DiscretePath q = flow_step(m, p, 0.31, cfg);
        const auto d = displacement(p, q);
        const double dist = std::sqrt(metric_inner(m, p, d, d, cfg.metric));
        CHECK(dist <= cfg.step * (1.0 + 1e-9));
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("truncated field norm stays below one") {
    auto m = presets::torus_psi_cutoff();
    std::mt19937_64 rng(71);
    FlowConfig cfg;
    for (int i = 0; i < 200; ++i) {
        auto p = wobbled_loop(m.surface, rng, 24, 0.5);
        const auto eta = eta_k(m, p, 0.3);
        const auto g = riesz_gradient(m, p, eta, cfg.metric);
        const double field = std::sqrt(g.dual_norm_sq / (1.0 + g.dual_norm_sq));
        CHECK(field < 1.0);
    }
}

TEST_CASE("one flow step from a perturbed geodesic reduces the action") {
    auto flat = presets::torus_constant_b(0.0);
    const double k = 0.5;
    std::mt19937_64 rng(73);
    std::normal_distribution<double> g(0.0, 0.01);
    for (int rep = 0; rep < 20; ++rep) {
        auto geo = lattice_loop(flat.surface, 1, 0, ChartPoint(0.0, 0.3), 48,
                                1.0 / std::sqrt(2 * k));
        for (size_t i = 1; i < geo.nodes.size() - 1; ++i) geo.nodes[i].xy += Vec2(g(rng), g(rng));
        geo.nodes.back() = ChartPoint(geo.nodes.front().xy + Vec2(1.0, 0.0));
        FlowConfig cfg;
        cfg.cutoff.enabled = false;
        cfg.step = 0.02;
        auto q = flow_step(flat, geo, k, cfg);
        CHECK(action(flat, q, k) < action(flat, geo, k));
    }
}

TEST_CASE("flow_until converges from a perturbed (1,0) geodesic") {
    auto flat = presets::torus_constant_b(0.0);
    const double k = 0.5;
    std::mt19937_64 rng(79);
    std::normal_distribution<double> g(0.0, 0.03);
    auto seed = lattice_loop(flat.surface, 1, 0, ChartPoint(0.0, 0.4), 48, 1.4);
    for (size_t i = 1; i < seed.nodes.size() - 1; ++i) seed.nodes[i].xy += Vec2(g(rng), g(rng));
    seed.nodes.back() = ChartPoint(seed.nodes.front().xy + Vec2(1.0, 0.0));
    FlowConfig cfg;
    cfg.cutoff.enabled = false;
    cfg.tol = 1e-9;
    cfg.max_iters = 3000;
    auto res = flow_until(flat, seed, k, cfg);
    CHECK(res.trace.reason == TerminationReason::Converged);
    CHECK(std::abs(action(flat, res.path, k) - std::sqrt(2 * k)) < 1e-4);
    // trace monotone in the recorded action (sigma exact)
    for (size_t i = 1; i < res.trace.samples.size(); ++i)
        CHECK(res.trace.samples[i].value <= res.trace.samples[i - 1].value + 1e-10);
}

TEST_CASE("contractible small loop above e0 collapses or freezes with e <= C T^2") {
    auto m = presets::torus_constant_b(1.0);
    const double k = 1.0;  // e0 = 0
    std::mt19937_64 rng(83);
    auto seed = wobbled_loop(m.surface, rng, 32, 0.2);
    seed.T = 0.4;
    FlowConfig cfg;
    cfg.max_iters = 4000;
    cfg.T_floor = 1e-4;
    auto res = flow_until(m, seed, k, cfg);
    const bool ok = res.trace.reason == TerminationReason::TCollapse ||
                    res.trace.reason == TerminationReason::Converged;
    CHECK(ok);
    const auto& last = res.trace.samples.back();
    // Lemma-style bound e <= C T^2 with C = (k + E1)/E0 (+ slack), E0=1/2, E1=0
    CHECK(last.e <= 4.0 * k * last.T * last.T + 1e-6);
    const auto d = ps_monitor(res.trace);
    if (res.trace.reason == TerminationReason::TCollapse)
        CHECK(d.cls == PsDiagnostics::Class::CollapseAtZeroLevel);
}

TEST_CASE("frozen at the cutoff is an exact fixpoint") {
    auto m = presets::torus_constant_b(1.0);
    const double k = 0.8;
    const double delta = default_vdelta(m.surface);
    const double eps = estimate_epsilon(m, k, delta);
    // tiny loop with tiny T: S_k ~ kT below eps/4
    auto tiny = circle_loop(m.surface, ChartPoint(0.4, 0.6), 1e-3, 24, 0.1 * eps / k, false);
    FlowConfig cfg;
    cfg.cutoff.epsilon = eps;
    auto res = flow_until(m, tiny, k, cfg);
    CHECK(res.trace.reason == TerminationReason::TCollapse);
    CHECK(res.trace.frozen_at_cutoff);
    // iterate unchanged
    for (size_t i = 0; i < tiny.nodes.size(); ++i)
        CHECK((res.path.nodes[i].xy - tiny.nodes[i].xy).norm() < 1e-15);
}

TEST_CASE("subcritical hyperbolic loop family blows up in period") {
    auto m = presets::hyperbolic_horocycle();
    const double k = 0.3;  // below c = 1/2
    auto seed = hyperbolic_circle_loop(m.surface, 0.0, 1.0, 2.0, 96,
                                       2 * M_PI * std::sinh(2.0), true);
    FlowConfig cfg;
    cfg.cutoff.enabled = false;
    cfg.max_iters = 1500;
    cfg.step = 0.5;
    auto res = flow_until(m, seed, k, cfg);
    const auto d = ps_monitor(res.trace, 10.0 * seed.T);
    // action decreases without bound; the run must not converge
    CHECK(res.trace.reason != TerminationReason::Converged);
    CHECK(res.trace.samples.back().value < res.trace.samples.front().value);
    CHECK(res.trace.samples.back().T > seed.T);
    CHECK(d.cls == PsDiagnostics::Class::PeriodBlowup);
}

TEST_CASE("discrete period-distance inequality along flow segments") {
    auto m = presets::torus_psi_cutoff();
    std::mt19937_64 rng(89);
    FlowConfig cfg;
    cfg.policy = StepPolicy::Fixed;
    cfg.step = 0.005;
    cfg.max_iters = 200;
    cfg.cutoff.enabled = false;
    for (int rep = 0; rep < 10; ++rep) {
        auto seed = wobbled_loop(m.surface, rng, 24, 0.4);
        const double k = 0.35;
        const double a0 = action(m, seed, k);
        auto res = flow_until(m, seed, k, cfg);
        const double a1 = action(m, res.path, k);
        const double R = res.trace.flow_time;
        const double dT = res.path.T - seed.T;
        if (R > 0 && a0 > a1)
            CHECK(dT * dT <= 1.05 * R * (a0 - a1) + 1e-10);
    }
}

TEST_CASE("ps_monitor on a converged run") {
    auto flat = presets::torus_constant_b(0.0);
    auto geo = lattice_loop(flat.surface, 1, 0, ChartPoint(0.0, 0.2), 32, 1.0);
    FlowConfig cfg;
    cfg.cutoff.enabled = false;
    cfg.max_iters = 2000;
    auto res = flow_until(flat, geo, 0.5, cfg);
    REQUIRE(res.trace.reason == TerminationReason::Converged);
    const auto d = ps_monitor(res.trace);
    CHECK(d.bounded_T);
    CHECK(d.T_away_from_zero);
    CHECK(d.grad_to_zero);
    CHECK(d.cls == PsDiagnostics::Class::Convergent);
    CHECK_THROWS_AS(ps_monitor(FlowTrace{}), PreconditionError);
}

TEST_CASE("flow trace CSV") {
    auto flat = presets::torus_constant_b(0.0);
    auto geo = lattice_loop(flat.surface, 1, 0, ChartPoint(0.0, 0.2), 24, 1.2);
    FlowConfig cfg;
    cfg.cutoff.enabled = false;
    cfg.max_iters = 5;
    auto res = flow_until(flat, geo, 0.5, cfg);
    std::ostringstream os;
    res.trace.write_csv(os);
    CHECK(os.str().find("iter,action,gradnorm,T,e") != std::string::npos);
}
