#pragma once

#include "critorb/path.hpp"

namespace critorb {

// Straight representative of the winding class (m,n) on the torus.
inline DiscretePath lattice_loop(const SurfaceModel& s, int mw, int nw,
                                 const ChartPoint& base, int n, double T) {
    const Vec2 dir(mw * s.Lx, nw * s.Ly);
    return make_loop(
        s, [&](double t) { return ChartPoint(base.xy + t * dir, 0); }, n, T);
}

// Hyperbolic circle of radius r around the hyperbolic center (xc, yc),
// parametrized proportionally to arc length. The Euclidean image is the
// circle with center (xc, yc cosh r) and radius yc sinh r; the total
// hyperbolic length is 2 pi sinh r.
inline DiscretePath hyperbolic_circle_loop(const SurfaceModel& s, double xc, double yc,
                                           double r, int n, double T, bool clockwise) {
    const double ce_y = yc * std::cosh(r);
    const double rho = yc * std::sinh(r);
    const int oversample = 16 * n;
    std::vector<double> arclen(oversample + 1, 0.0);
    auto speed = [&](double phi) { return rho / (ce_y + rho * std::sin(phi)); };
    for (int i = 1; i <= oversample; ++i) {
        const double a = 2 * M_PI * (i - 1) / oversample;
        const double b = 2 * M_PI * i / oversample;
        arclen[i] = arclen[i - 1] + 0.5 * (speed(a) + speed(b)) * (b - a);
    }
    const double total = arclen.back();
    DiscretePath p;
    p.surface_tag = s.kind;
    p.T = T;
    p.boundary = BoundarySpec::periodic();
    p.nodes.resize(n + 1);
    int cursor = 0;
    for (int j = 0; j <= n; ++j) {
        const double target = total * j / n;
        while (cursor < oversample && arclen[cursor + 1] < target) ++cursor;
        double phi;
        if (j == n) {
            phi = 2 * M_PI;
        } else {
            const double seg = arclen[cursor + 1] - arclen[cursor];
            const double a = seg > 0 ? (target - arclen[cursor]) / seg : 0.0;
            phi = 2 * M_PI * (cursor + a) / oversample;
        }
        p.nodes[j] = ChartPoint(xc + rho * std::cos(phi), ce_y + rho * std::sin(phi));
    }
    if (clockwise) std::reverse(p.nodes.begin(), p.nodes.end());
    return p;
}

// Closed-form free-time action of the clockwise hyperbolic circle gamma_r at
// unit-speed parametrization: (1/2 + k) 2 pi sinh r - 2 pi (cosh r - 1).
inline double hyperbolic_circle_action(double r, double k) {
    return (0.5 + k) * 2 * M_PI * std::sinh(r) - 2 * M_PI * (std::cosh(r) - 1.0);
}

// The thesis's path a on T^2: a(t) = (1 - t, 1/2), closed as a torus loop.
inline DiscretePath psi_example_path_a(const SurfaceModel& s, int n, double T = 1.0) {
    return make_loop(
        s, [](double t) { return ChartPoint(1.0 - t, 0.5); }, n, T);
}

}  // namespace critorb
