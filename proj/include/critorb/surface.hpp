#pragma once

#include "critorb/core.hpp"

#include <numeric>
#include <vector>

namespace critorb {

enum class SurfaceKind { FlatTorus, HyperbolicHalfPlane, RoundSphere };

// Rectangle in the hyperbolic half-plane chart, strictly inside {y > 0}.
struct HyperbolicBox {
    double xmin = -10.0, xmax = 10.0;
    double ymin = 0.05, ymax = 20.0;
};

// Chart-based geometry of the three model surfaces. All three are
// conformally flat, g = lambda(q)^2 (dx^2 + dy^2), which every evaluation
// below exploits.
struct SurfaceModel {
    SurfaceKind kind = SurfaceKind::FlatTorus;
    double Lx = 1.0, Ly = 1.0;      // FlatTorus lattice
    HyperbolicBox box;              // HyperbolicHalfPlane working region
    double radius = 1.0;            // RoundSphere

    // Sphere chart handling: switch charts beyond |q| > switch_radius,
    // reject beyond |q| > overflow_radius.
    static constexpr double switch_radius = 1.5;
    static constexpr double overflow_radius = 4.0;

    static SurfaceModel flat_torus(double lx = 1.0, double ly = 1.0) {
        SurfaceModel s;
        s.kind = SurfaceKind::FlatTorus;
        s.Lx = lx;
        s.Ly = ly;
        return s;
    }
    static SurfaceModel hyperbolic(const HyperbolicBox& b) {
        SurfaceModel s;
        s.kind = SurfaceKind::HyperbolicHalfPlane;
        s.box = b;
        return s;
    }
    static SurfaceModel sphere(double r = 1.0) {
        SurfaceModel s;
        s.kind = SurfaceKind::RoundSphere;
        s.radius = r;
        return s;
    }

    bool admissible(const ChartPoint& q) const {
        switch (kind) {
            case SurfaceKind::FlatTorus:
                return true;
            case SurfaceKind::HyperbolicHalfPlane:
                return q.y() > 0.0 && q.x() >= box.xmin && q.x() <= box.xmax &&
                       q.y() >= box.ymin && q.y() <= box.ymax;
            case SurfaceKind::RoundSphere:
                return q.xy.norm() <= overflow_radius;
        }
        return false;
    }

    void require_admissible(const ChartPoint& q) const {
        if (!admissible(q)) throw DomainError("point outside the admissible chart region");
    }

    double conformal_factor(const ChartPoint& q) const {
        require_admissible(q);
        switch (kind) {
            case SurfaceKind::FlatTorus:
                return 1.0;
            case SurfaceKind::HyperbolicHalfPlane:
                return 1.0 / q.y();
            case SurfaceKind::RoundSphere:
                return 2.0 * radius / (1.0 + q.xy.squaredNorm());
        }
        return 1.0;
    }

    // Gradient of log lambda, the only derivative the Christoffel symbols need.
    Vec2 grad_log_conformal(const ChartPoint& q) const {
        require_admissible(q);
        switch (kind) {
            case SurfaceKind::FlatTorus:
                return Vec2::Zero();
            case SurfaceKind::HyperbolicHalfPlane:
                return Vec2(0.0, -1.0 / q.y());
            case SurfaceKind::RoundSphere:
                return -2.0 * q.xy / (1.0 + q.xy.squaredNorm());
        }
        return Vec2::Zero();
    }
};

inline Mat2 metric_at(const SurfaceModel& s, const ChartPoint& q) {
    const double l2 = sq(s.conformal_factor(q));
    return l2 * Mat2::Identity();
}

inline Mat2 metric_inverse_at(const SurfaceModel& s, const ChartPoint& q) {
    const double l2 = sq(s.conformal_factor(q));
    return (1.0 / l2) * Mat2::Identity();
}

inline double metric_norm(const SurfaceModel& s, const ChartPoint& q, const Vec2& v) {
    return s.conformal_factor(q) * v.norm();
}

// Christoffel symbols Gamma^i_{jk}; result[i](j,k), symmetric in (j,k).
// For a conformal metric with phi = log lambda:
//   Gamma^x = [[phi_x, phi_y], [phi_y, -phi_x]]
//   Gamma^y = [[-phi_y, phi_x], [phi_x, phi_y]]
struct Christoffel {
    Mat2 gx, gy;
    Vec2 contract(const Vec2& v) const {
        return Vec2(v.dot(gx * v), v.dot(gy * v));
    }
};

inline Christoffel christoffel_at(const SurfaceModel& s, const ChartPoint& q) {
    const Vec2 dphi = s.grad_log_conformal(q);
    Christoffel c;
    c.gx << dphi.x(), dphi.y(), dphi.y(), -dphi.x();
    c.gy << -dphi.y(), dphi.x(), dphi.x(), dphi.y();
    return c;
}

inline ChartPoint wrap(const SurfaceModel& s, const ChartPoint& q) {
    if (s.kind != SurfaceKind::FlatTorus)
        throw UnsupportedError("wrap is defined on the flat torus only");
    auto wrap1 = [](double x, double L) {
        double w = x - std::floor(x / L) * L;
        if (w >= L) w -= L;  // guards the x = -eps roundoff edge
        if (w < 0) w += L;
        return w;
    };
    return ChartPoint(wrap1(q.x(), s.Lx), wrap1(q.y(), s.Ly), q.chart);
}

// Nearest-representative difference b - a on the torus; plain difference
// elsewhere (same chart assumed).
inline Vec2 chart_difference(const SurfaceModel& s, const ChartPoint& a, const ChartPoint& b) {
    Vec2 d = b.xy - a.xy;
    if (s.kind == SurfaceKind::FlatTorus) {
        d.x() -= std::round(d.x() / s.Lx) * s.Lx;
        d.y() -= std::round(d.y() / s.Ly) * s.Ly;
    }
    return d;
}

// Stereographic chart transition q -> q/|q|^2, flipping the chart tag.
inline ChartPoint sphere_transition(const ChartPoint& q) {
    const double n2 = q.xy.squaredNorm();
    if (n2 == 0.0) throw DomainError("chart transition undefined at the chart origin");
    return ChartPoint(q.xy / n2, static_cast<std::int8_t>(1 - q.chart));
}

// Pushforward of a tangent vector under the chart transition at q.
inline Vec2 sphere_transition_tangent(const ChartPoint& q, const Vec2& v) {
    const double n2 = q.xy.squaredNorm();
    return v / n2 - 2.0 * q.xy.dot(v) * q.xy / (n2 * n2);
}

inline ChartPoint to_chart(const SurfaceModel& s, const ChartPoint& q, std::int8_t chart) {
    if (s.kind != SurfaceKind::RoundSphere || q.chart == chart) return q;
    return sphere_transition(q);
}

// Winding pair of lifted loops/paths on the torus; trivial marker otherwise.
struct HomotopyClass {
    bool trivial_marker = true;
    Eigen::Vector2i winding{0, 0};

    bool operator==(const HomotopyClass&) const = default;
};

// Canonical representative of w in Z^2 / <generators> (column-style Hermite
// reduction; generators are lattice vectors in lattice coordinates).
inline Eigen::Vector2i reduce_mod_subgroup(Eigen::Vector2i w,
                                           const std::vector<Eigen::Vector2i>& gens) {
    if (gens.empty()) return w;
    // Hermite normal form of the generator matrix: [a 0; b c] with a,c >= 0.
    long a = 0, b = 0, c = 0;
    bool have_first = false;
    auto add_gen = [&](long gx, long gy) {
        if (gx == 0 && gy == 0) return;
        if (gx == 0) {
            c = (c == 0) ? std::abs(gy) : std::gcd(c, std::abs(gy));
            return;
        }
        if (!have_first) {
            a = gx;
            b = gy;
            have_first = true;
            return;
        }
        // Column-reduce (a,b) and (gx,gy) on the first coordinate.
        while (gx != 0) {
            if (std::abs(a) > std::abs(gx)) {
                std::swap(a, gx);
                std::swap(b, gy);
            }
            long qdiv = gx / a;
            gx -= qdiv * a;
            gy -= qdiv * b;
        }
        // Remaining (0, gy) contributes to the second-coordinate subgroup.
        if (gy != 0) c = (c == 0) ? std::abs(gy) : std::gcd(c, std::abs(gy));
    };
    for (const auto& g : gens) add_gen(g.x(), g.y());
    if (a < 0) {
        a = -a;
        b = -b;
    }
    long wx = w.x(), wy = w.y();
    if (a != 0) {
        long qdiv = static_cast<long>(std::floor(double(wx) / double(a)));
        wx -= qdiv * a;
        wy -= qdiv * b;
    }
    if (c != 0) {
        wy -= static_cast<long>(std::floor(double(wy) / double(c))) * c;
    }
    return Eigen::Vector2i(static_cast<int>(wx), static_cast<int>(wy));
}

}  // namespace critorb
