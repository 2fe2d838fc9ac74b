#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

namespace critorb {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Chart-tagged point. `chart` is 0 everywhere except on the sphere, where
// 0/1 are the two stereographic charts (0 centered at the south pole).
struct ChartPoint {
    Vec2 xy{0.0, 0.0};
    std::int8_t chart = 0;

    ChartPoint() = default;
    ChartPoint(double x, double y, std::int8_t c = 0) : xy(x, y), chart(c) {}
    ChartPoint(const Vec2& p, std::int8_t c = 0) : xy(p), chart(c) {}

    double x() const { return xy.x(); }
    double y() const { return xy.y(); }
};

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnsupportedError : std::logic_error {
    using std::logic_error::logic_error;
};

// Lift of a path is ambiguous: consecutive nodes too far apart.
struct ResolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using ScalarField = std::function<double(const ChartPoint&)>;
// Covector components (alpha_x, alpha_y) in the chart at the given point.
using CovectorField = std::function<Vec2(const ChartPoint&)>;

inline double sq(double x) { return x * x; }

// 2D cross product a_x b_y - a_y b_x.
inline double cross2(const Vec2& a, const Vec2& b) {
    return a.x() * b.y() - a.y() * b.x();
}

inline Vec2 rotate90cw(const Vec2& v) { return Vec2(v.y(), -v.x()); }

// Five-point central difference of a scalar field, used when a field has no
// analytic gradient attached.
inline Vec2 numeric_gradient(const ScalarField& f, const ChartPoint& q, double h = 1e-5) {
    Vec2 g;
    for (int i = 0; i < 2; ++i) {
        ChartPoint qp = q, qm = q, qp2 = q, qm2 = q;
        qp.xy[i] += h;
        qm.xy[i] -= h;
        qp2.xy[i] += 2 * h;
        qm2.xy[i] -= 2 * h;
        g[i] = (-f(qp2) + 8 * f(qp) - 8 * f(qm) + f(qm2)) / (12 * h);
    }
    return g;
}

inline Mat2 numeric_jacobian(const CovectorField& f, const ChartPoint& q, double h = 1e-5) {
    Mat2 J;  // J(i,j) = d f_i / d q_j
    for (int j = 0; j < 2; ++j) {
        ChartPoint qp = q, qm = q, qp2 = q, qm2 = q;
        qp.xy[j] += h;
        qm.xy[j] -= h;
        qp2.xy[j] += 2 * h;
        qm2.xy[j] -= 2 * h;
        Vec2 col = (-f(qp2) + 8 * f(qp) - 8 * f(qm) + f(qm2)) / (12 * h);
        J.col(j) = col;
    }
    return J;
}

}  // namespace critorb
