#include "critorb/taimanov.hpp"
#include "critorb/presets.hpp"

#include <doctest.h>

using namespace critorb;

TEST_CASE("empty and full films") {
    auto m = presets::torus_oscillating();
    const auto empty = TaimanovFilm::empty(128);
    CHECK(taimanov_value(m, empty, 0.7) == 0.0);  // exactly
    const auto full = TaimanovFilm::full(128);
    // T_k(T^2) = int sigma = 1/2 for the oscillating preset, no boundary
    CHECK(taimanov_value(m, full, 0.7) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("disc film: length and sigma mass within tolerance") {
    auto m = presets::torus_constant_b(2.0);  // constant density f = 2
    const double r = 0.21;
    const auto disc = TaimanovFilm::from_level(m.surface, 512, [&](const ChartPoint& q) {
        return r - (q.xy - Vec2(0.5, 0.5)).norm();
    });
    const double k = 0.3;
    const double expected = std::sqrt(2 * k) * 2 * M_PI * r + 2.0 * M_PI * r * r;
    CHECK(std::abs(taimanov_value(m, disc, k) - expected) / expected < 0.05);
}

TEST_CASE("monotone in k on a fixed film set") {
    auto m = presets::torus_oscillating();
    const auto films = density_film_family(m, 128, 16);
    for (const auto& f : films) {
        const double a = taimanov_value(m, f, 0.2);
        const double b = taimanov_value(m, f, 0.9);
        CHECK(b >= a);  // exact from the sqrt(2k) factor
    }
}

TEST_CASE("oscillating preset: negative films at low k, none at high k") {
    auto m = presets::torus_oscillating();
    const auto films = density_film_family(m, 128);
    CHECK(taimanov_inf(m, films, 0.01) < 0.0);
    CHECK(taimanov_inf(m, films, 10.0) >= 0.0);
}

TEST_CASE("tau_plus bracket is stable under grid refinement") {
    auto m = presets::torus_oscillating();
    const auto a = tau_plus_bracket(m, 1e-3, 10.0, 128);
    const auto b = tau_plus_bracket(m, 1e-3, 10.0, 256);
    REQUIRE(a.valid);
    REQUIRE(b.valid);
    const double mid_a = 0.5 * (a.lo + a.hi);
    const double mid_b = 0.5 * (b.lo + b.hi);
    CHECK(std::abs(mid_a - mid_b) / mid_b < 0.10);
}

TEST_CASE("film preconditions") {
    auto m = presets::sphere_standard_magnetic();
    CHECK_THROWS_AS(taimanov_value(m, TaimanovFilm::empty(16), 0.5), UnsupportedError);
    auto t = presets::torus_oscillating();
    CHECK_THROWS_AS(taimanov_value(t, TaimanovFilm::empty(16), -0.5), PreconditionError);
}
