#pragma once

#include "critorb/dynamics.hpp"

#include <array>

namespace critorb::presets {

// C-infinity step: 0 for t <= 0, 1 for t >= 1.
inline double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double h1 = std::exp(-1.0 / t);
    const double h2 = std::exp(-1.0 / (1.0 - t));
    return h1 / (h1 + h2);
}

inline double smooth_step_prime(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double h1 = std::exp(-1.0 / t);
    const double h2 = std::exp(-1.0 / (1.0 - t));
    const double dh1 = h1 / (t * t);
    const double dh2 = h2 / sq(1.0 - t);
    return (dh1 * h2 + h1 * dh2) / sq(h1 + h2);
}

// Cutoff psi: [0,1] -> [0,1], supported in (0.1, 0.9), identically 1 on
// [0.3, 0.7] (in particular constant near 1/2).
inline double psi_cutoff(double y) {
    return smooth_step((y - 0.1) / 0.2) * smooth_step((0.9 - y) / 0.2);
}

inline double psi_cutoff_prime(double y) {
    return smooth_step_prime((y - 0.1) / 0.2) / 0.2 * smooth_step((0.9 - y) / 0.2) -
           smooth_step((y - 0.1) / 0.2) * smooth_step_prime((0.9 - y) / 0.2) / 0.2;
}

namespace detail {

inline double wrap01(double x) { return x - std::floor(x); }

}  // namespace detail

// Hyperbolic half-plane with theta = dx/y, the primitive of the standard
// area form. The box is sized so that hyperbolic circles up to radius ~5
// around (0,1) fit.
inline LagrangianModel hyperbolic_horocycle() {
    LagrangianModel m;
    HyperbolicBox box;
    box.xmin = -180.0;
    box.xmax = 180.0;
    box.ymin = 0.001;
    box.ymax = 360.0;
    m.surface = SurfaceModel::hyperbolic(box);
    m.theta_global = true;
    m.theta = [](const ChartPoint& q) { return Vec2(1.0 / q.y(), 0.0); };
    m.theta_jac = [](const ChartPoint& q) {
        Mat2 J;
        J << 0.0, -1.0 / sq(q.y()), 0.0, 0.0;
        return J;
    };
    m.sigma_density = [](const ChartPoint&) { return 1.0; };
    m.grad_V = [](const ChartPoint&) { return Vec2::Zero(); };
    m.bound_a = 0.25;
    m.bound_b = 1.0;
    m.name = "hyperbolic-horocycle";
    return m;
}

// T^2 with L = 1/2|v|^2 + psi(y) v_x, psi in [0,1] compactly supported and
// constant near y = 1/2.
inline LagrangianModel torus_psi_cutoff() {
    LagrangianModel m;
    m.surface = SurfaceModel::flat_torus();
    m.theta_global = true;
    m.theta = [](const ChartPoint& q) {
        return Vec2(psi_cutoff(detail::wrap01(q.y())), 0.0);
    };
    m.theta_jac = [](const ChartPoint& q) {
        Mat2 J;
        J << 0.0, psi_cutoff_prime(detail::wrap01(q.y())), 0.0, 0.0;
        return J;
    };
    m.sigma_density = [](const ChartPoint& q) {
        return -psi_cutoff_prime(detail::wrap01(q.y()));
    };
    m.grad_V = [](const ChartPoint&) { return Vec2::Zero(); };
    m.bound_a = 0.25;
    m.bound_b = 1.0;
    m.name = "torus-psi-cutoff";
    return m;
}

// Constant magnetic field sigma = B dx ^ dy on the unit torus; non-exact for
// B != 0 (no global primitive).
inline LagrangianModel torus_constant_b(double B = 1.0) {
    LagrangianModel m;
    m.surface = SurfaceModel::flat_torus();
    m.sigma_density = [B](const ChartPoint&) { return B; };
    m.grad_V = [](const ChartPoint&) { return Vec2::Zero(); };
    if (B == 0.0) {
        m.theta_global = true;
        m.theta = [](const ChartPoint&) { return Vec2::Zero(); };
        m.theta_jac = [](const ChartPoint&) { return Mat2::Zero(); };
    }
    m.bound_a = 0.5;
    m.bound_b = 0.0;
    m.name = "torus-constant-B";
    return m;
}

// Non-exact oscillating form on T^2: density 4 sin(2 pi y) + 1/2, which
// changes sign and has positive integral.
inline LagrangianModel torus_oscillating() {
    LagrangianModel m;
    m.surface = SurfaceModel::flat_torus();
    m.sigma_density = [](const ChartPoint& q) {
        return 4.0 * std::sin(2 * M_PI * q.y()) + 0.5;
    };
    m.grad_V = [](const ChartPoint&) { return Vec2::Zero(); };
    m.bound_a = 0.5;
    m.bound_b = 0.0;
    m.name = "torus-oscillating";
    return m;
}

// Standard magnetic flow on the round S^2: sigma = mu_g (density 1).
inline LagrangianModel sphere_standard_magnetic() {
    LagrangianModel m;
    m.surface = SurfaceModel::sphere(1.0);
    m.sigma_density = [](const ChartPoint&) { return 1.0; };
    m.grad_V = [](const ChartPoint&) { return Vec2::Zero(); };
    m.bound_a = 0.5;
    m.bound_b = 0.0;
    m.name = "sphere-standard-magnetic";
    return m;
}

// Mechanical Lagrangian on T^2 with V = cos(2 pi x) cos(2 pi y).
inline LagrangianModel mechanical_torus() {
    LagrangianModel m;
    m.surface = SurfaceModel::flat_torus();
    m.theta_global = true;
    m.theta = [](const ChartPoint&) { return Vec2::Zero(); };
    m.theta_jac = [](const ChartPoint&) { return Mat2::Zero(); };
    m.V = [](const ChartPoint& q) {
        return std::cos(2 * M_PI * q.x()) * std::cos(2 * M_PI * q.y());
    };
    m.grad_V = [](const ChartPoint& q) {
        const double c = 2 * M_PI;
        return Vec2(-c * std::sin(c * q.x()) * std::cos(c * q.y()),
                    -c * std::cos(c * q.x()) * std::sin(c * q.y()));
    };
    m.bound_a = 0.5;
    m.bound_b = 1.0;
    m.name = "mechanical-torus";
    return m;
}

inline std::vector<std::string> names() {
    return {"hyperbolic-horocycle",     "torus-psi-cutoff", "torus-constant-B",
            "torus-oscillating",        "sphere-standard-magnetic",
            "mechanical-torus"};
}

inline LagrangianModel by_name(const std::string& name) {
    if (name == "hyperbolic-horocycle") return hyperbolic_horocycle();
    if (name == "torus-psi-cutoff") return torus_psi_cutoff();
    if (name == "torus-constant-B") return torus_constant_b(1.0);
    if (name == "torus-oscillating") return torus_oscillating();
    if (name == "sphere-standard-magnetic") return sphere_standard_magnetic();
    if (name == "mechanical-torus") return mechanical_torus();
    throw PreconditionError("unknown preset: " + name);
}

}  // namespace critorb::presets
