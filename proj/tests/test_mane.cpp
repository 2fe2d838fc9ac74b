#include "critorb/report.hpp"
#include "critorb/presets.hpp"

#include <doctest.h>

using namespace critorb;

TEST_CASE("e0 equals the maximum of the potential") {
    CHECK(e0(presets::mechanical_torus()) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e0(presets::torus_constant_b(1.0)) == doctest::Approx(0.0));
    CHECK(e0(presets::hyperbolic_horocycle()) == doctest::Approx(0.0));
}

TEST_CASE("kQ on the psi example: k- = k = 1/2") {
    auto m = presets::torus_psi_cutoff();
    const auto kq = kQ(m, CircleSpec::point(ChartPoint(0.5, 0.5)), CircleSpec::horizontal(0.5));
    CHECK(kq.first == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(kq.second == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("kQ with theta = 0 reduces to the potential range on the intersection") {
    auto m = presets::mechanical_torus();
    // identical circles: the intersection is the whole circle {x=0}
    const auto kq = kQ(m, CircleSpec::vertical(0.0), CircleSpec::vertical(0.0));
    CHECK(kq.first == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(kq.second == doctest::Approx(1.0).epsilon(1e-3));
    // single-point intersection
    const auto kq2 = kQ(m, CircleSpec::vertical(0.25), CircleSpec::horizontal(0.25));
    CHECK(kq2.first == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(kq2.second == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_THROWS_AS(kQ(m, CircleSpec::point(ChartPoint(0.1, 0.1)),
                       CircleSpec::horizontal(0.7)),
                    PreconditionError);
}

TEST_CASE("mane_lower on the psi example flips sign at 1/2") {
    auto m = presets::torus_psi_cutoff();
    LoopSearchConfig cfg;
    cfg.variant = ManeVariant::Full;
    cfg.nodes = 128;
    CHECK(mane_lower(m, 0.4, cfg));
    CHECK(mane_lower(m, 0.48, cfg));
    CHECK(!mane_lower(m, 0.55, cfg));
}

TEST_CASE("mane_lower hyperbolic via the gamma_r family") {
    auto m = presets::hyperbolic_horocycle();
    LoopSearchConfig cfg;
    cfg.nodes = 128;
    CHECK(mane_lower(m, 0.45, cfg));
    CHECK(!mane_lower(m, 0.52, cfg));
}

TEST_CASE("mechanical bracket collapses to e0") {
    auto m = presets::mechanical_torus();
    const auto cu = mane_bracket(m, 0.5, 1.4, ManeVariant::Contractible, 0.02);
    CHECK(cu.lo_certified);
    CHECK(cu.width() <= 0.02 + 1e-12);
    CHECK(std::abs(cu.lo - 1.0) < 0.02);
    CHECK(std::abs(cu.hi - 1.0) < 0.02);
    const auto c = mane_bracket(m, 0.5, 1.4, ManeVariant::Full, 0.02);
    CHECK(std::abs(c.lo - 1.0) < 0.02);
    CHECK(std::abs(c.hi - 1.0) < 0.02);
}

TEST_CASE("mane_upper: psi example seed u = x/2 gives 1/8; trivial cases") {
    auto m = presets::torus_psi_cutoff();
    auto basis = torus_lift_basis(m.surface, 1);
    basis.coefficients[0] = 0.5;  // u = x/2
    const auto res = mane_upper(m, basis, 192, 0, 0);  // no optimization: pure seed bound
    CHECK(res.bound <= 0.125 + 1e-3);
    CHECK(res.bound >= 0.125 - 1e-6);

    // theta = 0: u = 0 gives max V (mechanical) or 0 (free)
    auto mech = presets::mechanical_torus();
    const auto r2 = mane_upper(mech, torus_lift_basis(mech.surface, 1), 128, 2, 40);
    CHECK(r2.bound >= 1.0 - 1e-9);
    CHECK(r2.bound <= 1.0 + 1e-3);

    auto flat = presets::torus_constant_b(0.0);
    const auto r3 = mane_upper(flat, torus_lift_basis(flat.surface, 1), 64, 1, 10);
    CHECK(r3.bound <= 1e-9);
}

TEST_CASE("mane_upper hyperbolic: |theta| = 1 gives 1/2 with u = 0") {
    auto m = presets::hyperbolic_horocycle();
    const auto res = mane_upper(m, hyperbolic_bump_basis(m.surface, 2, 2), 96, 0, 0);
    CHECK(res.bound <= 0.5 + 1e-3);
    CHECK(res.bound >= 0.5 - 1e-6);
}

TEST_CASE("mane_upper requires a global theta") {
    auto m = presets::torus_constant_b(1.0);
    CHECK_THROWS_AS(mane_upper(m, torus_lift_basis(m.surface, 1)), UnsupportedError);
}

TEST_CASE("critical value report: chain holds for light presets") {
    // heavier presets are exercised in the acceptance suite
    for (auto m : {presets::mechanical_torus(), presets::torus_psi_cutoff()}) {
        ReportOptions opt;
        opt.search.nodes = 96;
        opt.search.radius_samples = 12;
        if (m.name == "torus-psi-cutoff") {
            opt.with_kq = true;
            opt.Q0 = CircleSpec::point(ChartPoint(0.5, 0.5));
            opt.Q1 = CircleSpec::horizontal(0.5);
        }
        const auto rep = critical_value_report(m, opt);
        const auto chk = chain_check(rep);
        CHECK(chk.consistent);
        if (m.name == "torus-psi-cutoff") {
            CHECK(rep.has_kQ);
            CHECK(rep.kQ_value == doctest::Approx(0.5).epsilon(1e-6));
            // cap = e0 + |theta|^2/(4a) = 1/(4 * 1/2) = 1/2, tight at c(L)
            CHECK(rep.upper_cap == doctest::Approx(0.5).epsilon(1e-3));
            CHECK(rep.c_bracket.contains(0.5));
        }
        std::ostringstream os;
        rep.write_csv(os);
        CHECK(os.str().find("quantity,lo,hi,method") != std::string::npos);
    }
}
