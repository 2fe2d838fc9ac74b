#include "critorb/config.hpp"

#include <doctest.h>

using namespace critorb;

TEST_CASE("expression evaluator") {
    CHECK(Expr::parse("1 + 2*3").eval(0, 0) == doctest::Approx(7.0));
    CHECK(Expr::parse("cos(2*pi*x)*cos(2*pi*y)").eval(0.25, 0.0) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(Expr::parse("-x^2 + y").eval(3, 1) == doctest::Approx(-8.0));
    CHECK(Expr::parse("2^3^1").eval(0, 0) == doctest::Approx(8.0));
    CHECK(Expr::parse("exp(0) + sqrt(4)").eval(0, 0) == doctest::Approx(3.0));
    CHECK(Expr::parse("sin(x)/x").eval(1e-3, 0) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK_THROWS_AS(Expr::parse("sin(x"), PreconditionError);
    CHECK_THROWS_AS(Expr::parse("foo(x)"), PreconditionError);
    CHECK_THROWS_AS(Expr::parse("1 + "), PreconditionError);
    CHECK_THROWS_AS(Expr::parse("x y"), PreconditionError);
}

TEST_CASE("run config from JSON") {
    const auto j = nlohmann::json::parse(R"({
        "surface": {"kind": "flat-torus", "Lx": 1.0, "Ly": 1.0},
        "lagrangian": {
            "V": "0.2*cos(2*pi*x)",
            "theta": ["0.5*sin(2*pi*y)", "0"]
        },
        "boundary": {"kind": "conormal",
                     "Q0": {"kind": "vertical", "x": 0.25},
                     "Q1": {"kind": "horizontal", "y": 0.25}},
        "k": 0.7,
        "nodes": 64,
        "seed": 42,
        "tolerances": {"grad": 1e-7, "max_iters": 500}
    })");
    const auto cfg = RunConfig::from_json(j);
    CHECK(cfg.k == 0.7);
    CHECK(cfg.nodes == 64);
    CHECK(cfg.seed == 42);
    CHECK(cfg.flow.tol == 1e-7);
    CHECK(cfg.flow.max_iters == 500);
    CHECK(cfg.model.theta_global);
    CHECK(cfg.model.V(ChartPoint(0.0, 0.0)) == doctest::Approx(0.2));
    // derived sigma density: curl theta = -d/dy theta_x = -pi cos(2 pi y)
    CHECK(cfg.model.sigma_density(ChartPoint(0.3, 0.0)) ==
          doctest::Approx(-M_PI).epsilon(1e-6));
    CHECK(cfg.boundary.kind == BoundarySpec::Kind::Conormal);

    // torus fields are evaluated on wrapped coordinates (lift-safe)
    CHECK(cfg.model.V(ChartPoint(3.0, 0.0)) == doctest::Approx(0.2));
}

TEST_CASE("config validation errors") {
    using nlohmann::json;
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"k": 1})")), PreconditionError);
    CHECK_THROWS_AS(
        RunConfig::from_json(json::parse(R"({"surface": {"kind": "moebius"}})")),
        PreconditionError);
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(
                        R"({"surface": {"kind": "hyperbolic", "box": [0, 1, -1, 2]}})")),
                    PreconditionError);
    CHECK_THROWS_AS(
        RunConfig::from_json(json::parse(
            R"({"preset": "torus-psi-cutoff", "lagrangian": {"V": "sin((x)"}})")),
        PreconditionError);
    CHECK_THROWS_AS(RunConfig::from_json(json::parse(
                        R"({"preset": "torus-psi-cutoff", "nodes": 4})")),
                    PreconditionError);
    CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/config.json"), PreconditionError);
}

TEST_CASE("presets are all loadable and bounded") {
    const auto names = presets::names();
    CHECK(names.size() == 6);
    for (const auto& n : names) {
        const auto m = presets::by_name(n);
        CHECK(m.name == n);
        CHECK(validate_bounds(m, 500));
    }
    CHECK_THROWS_AS(presets::by_name("nope"), PreconditionError);
}

TEST_CASE("k grid parsing") {
    const auto g = parse_k_grid("0.1:0.8:8");
    REQUIRE(g.size() == 8);
    CHECK(g.front() == doctest::Approx(0.1));
    CHECK(g.back() == doctest::Approx(0.8));
    CHECK_THROWS_AS(parse_k_grid("1:0:5"), PreconditionError);
    CHECK_THROWS_AS(parse_k_grid("abc"), PreconditionError);
}

TEST_CASE("path CSV read/write round trip") {
    auto s = SurfaceModel::flat_torus();
    auto p = circle_loop(s, ChartPoint(0.5, 0.5), 0.2, 24, 0.8, true);
    std::stringstream ss;
    write_path_csv(ss, p, 0.33);
    auto [q, k] = read_path_csv(ss);
    CHECK(k == doctest::Approx(0.33));
    CHECK(q.T == doctest::Approx(0.8));
    REQUIRE(q.nodes.size() == p.nodes.size());
    for (size_t i = 0; i < p.nodes.size(); ++i)
        CHECK((q.nodes[i].xy - p.nodes[i].xy).norm() < 1e-15);
}
