#pragma once

#include "critorb/path.hpp"
#include "critorb/surface.hpp"

#include <limits>
#include <random>

namespace critorb {

// Electromagnetic data on a model surface. The system is the flow of the
// pair (L, sigma) with
//   L(q,v) = 1/2 |v|_q^2 + theta_q(v) - V(q),   sigma = f * mu_g,
// where theta is a global primitive of sigma when one exists (exact case)
// and is absent otherwise; the flow never sees theta, only (g, V, sigma).
struct LagrangianModel {
    SurfaceModel surface;

    ScalarField V = [](const ChartPoint&) { return 0.0; };
    CovectorField grad_V;  // optional analytic gradient

    ScalarField sigma_density = [](const ChartPoint&) { return 0.0; };

    bool theta_global = false;
    CovectorField theta;  // global 1-form (exact case), covector components
    std::function<Mat2(const ChartPoint&)> theta_jac;  // optional analytic Jacobian

    // Quadratic lower bound L >= bound_a |v|^2 - bound_b on the working
    // region (checked by validate_bounds; the theta term forces bound_a
    // below the kinetic coefficient).
    double bound_a = 0.5;
    double bound_b = 0.0;
    // Fiberwise convexity constant: d_vv L >= 2 a_conv g. Exactly 1/2 for
    // electromagnetic Lagrangians; enters k_Q and the chain's upper cap.
    double convexity_a = 0.5;

    std::string name = "model";

    Vec2 grad_V_at(const ChartPoint& q) const {
        if (grad_V) return grad_V(q);
        return numeric_gradient(V, q);
    }
    Vec2 theta_at(const ChartPoint& q) const {
        if (!theta_global) return Vec2::Zero();
        return theta(q);
    }
    Mat2 theta_jac_at(const ChartPoint& q) const {
        if (!theta_global) return Mat2::Zero();
        if (theta_jac) return theta_jac(q);
        return numeric_jacobian(theta, q);
    }
};

inline double lagrangian_value(const LagrangianModel& m, const ChartPoint& q, const Vec2& v) {
    const double l2 = sq(m.surface.conformal_factor(q));
    return 0.5 * l2 * v.squaredNorm() + m.theta_at(q).dot(v) - m.V(q);
}

// E(q,v) = d_vL(q,v)[v] - L(q,v); for electromagnetic L this collapses to
// the kinetic-plus-potential form, which is what we evaluate.
inline double energy(const LagrangianModel& m, const ChartPoint& q, const Vec2& v) {
    const double l2 = sq(m.surface.conformal_factor(q));
    return 0.5 * l2 * v.squaredNorm() + m.V(q);
}

inline Vec2 fiber_derivative(const LagrangianModel& m, const ChartPoint& q, const Vec2& v) {
    const double l2 = sq(m.surface.conformal_factor(q));
    return l2 * v + m.theta_at(q);
}

inline Vec2 base_derivative(const LagrangianModel& m, const ChartPoint& q, const Vec2& v) {
    const double lam = m.surface.conformal_factor(q);
    const Vec2 dphi = m.surface.grad_log_conformal(q);
    // d_q [1/2 lambda^2 |v|^2] = lambda^2 |v|^2 dphi
    Vec2 out = sq(lam) * v.squaredNorm() * dphi;
    if (m.theta_global) out += m.theta_jac_at(q).transpose() * v;
    out -= m.grad_V_at(q);
    return out;
}

struct TangentState {
    ChartPoint q;
    Vec2 v;
};

// First-order field of the flow of (L, sigma):
//   qdot = v
//   vdot = -Gamma(v,v) + f(q) (v_y, -v_x) - grad_g V ,
// the sign of the magnetic term chosen so that for sigma = d theta the field
// coincides with the classical Euler-Lagrange field of L + theta.
inline TangentState el_field(const LagrangianModel& m, const TangentState& s) {
    m.surface.require_admissible(s.q);
    const Christoffel G = christoffel_at(m.surface, s.q);
    const double l2 = sq(m.surface.conformal_factor(s.q));
    Vec2 a = -G.contract(s.v);
    a += m.sigma_density(s.q) * rotate90cw(s.v);
    a -= m.grad_V_at(s.q) / l2;
    TangentState out;
    out.q = ChartPoint(s.v, s.q.chart);
    out.v = a;
    return out;
}

// Classical EL field of the electromagnetic Lagrangian including its theta
// term, derived from d theta directly. Used to cross-check el_field in the
// exact case.
inline TangentState el_field_classical(const LagrangianModel& m, const TangentState& s) {
    m.surface.require_admissible(s.q);
    if (!m.theta_global) throw UnsupportedError("classical EL field needs a global theta");
    const Christoffel G = christoffel_at(m.surface, s.q);
    const double l2 = sq(m.surface.conformal_factor(s.q));
    const Mat2 J = m.theta_jac_at(s.q);
    const double curl = J(1, 0) - J(0, 1);  // d theta = curl dx^dy
    TangentState out;
    out.q = ChartPoint(s.v, s.q.chart);
    out.v = -G.contract(s.v) + (curl / l2) * rotate90cw(s.v) - m.grad_V_at(s.q) / l2;
    return out;
}

struct OrbitCertificate {
    double closure_residual = std::numeric_limits<double>::quiet_NaN();
    double energy_drift = 0.0;
    double conormal_residual_0 = 0.0;
    double conormal_residual_1 = 0.0;
    bool clipped = false;  // trajectory left the admissible region
};

struct ShootResult {
    DiscretePath path;
    OrbitCertificate certificate;
    TangentState final_state;
};

namespace detail {

inline TangentState rk4_step(const LagrangianModel& m, const TangentState& s, double dt) {
    auto add = [](const TangentState& a, const TangentState& d, double h) {
        return TangentState{ChartPoint(a.q.xy + h * d.q.xy, a.q.chart), a.v + h * d.v};
    };
    const TangentState k1 = el_field(m, s);
    const TangentState k2 = el_field(m, add(s, k1, dt / 2));
    const TangentState k3 = el_field(m, add(s, k2, dt / 2));
    const TangentState k4 = el_field(m, add(s, k3, dt));
    TangentState out = s;
    out.q.xy += dt / 6.0 * (k1.q.xy + 2 * k2.q.xy + 2 * k3.q.xy + k4.q.xy);
    out.v += dt / 6.0 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
    return out;
}

}  // namespace detail

// RK4 integration of el_field. Torus trajectories are integrated on the
// lift; sphere trajectories switch stereographic charts at |q| > 1.5.
inline ShootResult shoot(const LagrangianModel& m, const ChartPoint& q0, const Vec2& v0,
                         double T, int steps) {
    if (T <= 0.0) throw PreconditionError("shoot needs T > 0");
    if (steps < 16) throw PreconditionError("shoot needs at least 16 steps");
    const double dt = T / steps;
    const double k0 = energy(m, q0, v0);

    ShootResult r;
    r.path.surface_tag = m.surface.kind;
    r.path.T = T;
    r.path.boundary = BoundarySpec::periodic();
    r.path.nodes.reserve(steps + 1);
    r.path.nodes.push_back(q0);

    TangentState s{q0, v0};
    double drift = 0.0;
    for (int i = 0; i < steps; ++i) {
        TangentState next;
        try {
            next = detail::rk4_step(m, s, dt);
            m.surface.require_admissible(next.q);
        } catch (const DomainError&) {
            r.certificate.clipped = true;
            break;
        }
        if (m.surface.kind == SurfaceKind::RoundSphere &&
            next.q.xy.norm() > SurfaceModel::switch_radius) {
            const Vec2 vt = sphere_transition_tangent(next.q, next.v);
            next.q = sphere_transition(next.q);
            next.v = vt;
        }
        s = next;
        r.path.nodes.push_back(s.q);
        drift = std::max(drift, std::abs(energy(m, s.q, s.v) - k0));
    }
    r.final_state = s;
    r.certificate.energy_drift = drift;
    if (!r.certificate.clipped) {
        const Vec2 d = chart_difference(m.surface,
                                        to_chart(m.surface, s.q, q0.chart), q0);
        r.certificate.closure_residual =
            m.surface.conformal_factor(q0) * d.norm();
    }
    return r;
}

// Norm of the fiber derivative restricted to the tangent line of Q: for a
// covector alpha and g-unit tangent t this is |alpha(t)|.
inline double restricted_covector_norm(const LagrangianModel& m, const ChartPoint& q,
                                       const Vec2& alpha, const CircleSpec& Q) {
    const Vec2 t = Q.tangent_at(q);
    const double tn = metric_norm(m.surface, q, t);
    if (tn == 0.0) return 0.0;  // Point circle: nothing to annihilate
    return std::abs(alpha.dot(t)) / tn;
}

inline std::pair<double, double> conormal_residual(const LagrangianModel& m,
                                                   const DiscretePath& path,
                                                   const CircleSpec& Q0, const CircleSpec& Q1,
                                                   double endpoint_tol = 1e-6) {
    path.validate();
    const ChartPoint a = path.nodes.front();
    const ChartPoint b = path.nodes.back();
    if (Q0.chart_distance(m.surface, a) > endpoint_tol ||
        Q1.chart_distance(m.surface, b) > endpoint_tol)
        throw PreconditionError("path endpoints are not on Q0/Q1 within tolerance");
    const double ds = 1.0 / path.segments();
    const Vec2 v_start = (path.nodes[1].xy - path.nodes[0].xy) / (path.T * ds);
    const int n = path.segments();
    const Vec2 v_end = (path.nodes[n].xy - path.nodes[n - 1].xy) / (path.T * ds);
    const double r0 = restricted_covector_norm(m, a, fiber_derivative(m, a, v_start), Q0);
    const double r1 = restricted_covector_norm(m, b, fiber_derivative(m, b, v_end), Q1);
    return {r0, r1};
}

// Lowest energy admitting conormal boundary data on Q: min over q in Q of
// 1/2 |P_q w_q|^2 with w the metric representative of theta and P the
// tangential projection. Grid sampling plus golden-section refinement.
inline double min_conormal_energy(const LagrangianModel& m, const CircleSpec& Q,
                                  int samples = 512) {
    if (Q.kind == CircleSpec::Kind::Point) return 0.0;
    auto value = [&](double t) {
        const ChartPoint q = Q.at(t, m.surface);
        const Vec2 th = m.theta_at(q);
        // |P w|_g = |theta(t_hat)| for a g-unit tangent t_hat.
        const double r = restricted_covector_norm(m, q, th, Q);
        return 0.5 * sq(r);
    };
    double best = std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = double(i) / samples;
        const double f = value(t);
        if (f < best) {
            best = f;
            best_t = t;
        }
    }
    // golden-section around the best sample
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = best_t - 1.0 / samples, hi = best_t + 1.0 / samples;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    for (int it = 0; it < 60; ++it) {
        if (value(c) < value(d)) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - gr * (hi - lo);
        d = lo + gr * (hi - lo);
    }
    return std::min(best, value(0.5 * (lo + hi)));
}

// Sampling validator for the quadratic bounds (a, b): checks
// L(q,v) >= a|v|^2 - b on random admissible states with |v| <= 10.
inline bool validate_bounds(const LagrangianModel& m, int samples = 2000,
                            unsigned seed = 12345) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto random_point = [&]() -> ChartPoint {
        switch (m.surface.kind) {
            case SurfaceKind::FlatTorus:
                return ChartPoint(u01(rng) * m.surface.Lx, u01(rng) * m.surface.Ly);
            case SurfaceKind::HyperbolicHalfPlane: {
                const auto& b = m.surface.box;
                return ChartPoint(b.xmin + u01(rng) * (b.xmax - b.xmin),
                                  b.ymin + u01(rng) * (b.ymax - b.ymin));
            }
            case SurfaceKind::RoundSphere: {
                const double r = 1.4 * std::sqrt(u01(rng));
                const double a = 2 * M_PI * u01(rng);
                return ChartPoint(r * std::cos(a), r * std::sin(a),
                                  u01(rng) < 0.5 ? std::int8_t(0) : std::int8_t(1));
            }
        }
        return ChartPoint();
    };
    for (int i = 0; i < samples; ++i) {
        const ChartPoint q = random_point();
        const double speed = 10.0 * u01(rng);
        const double ang = 2 * M_PI * u01(rng);
        // |v|_g <= 10: scale chart components by 1/lambda
        const Vec2 v = speed / m.surface.conformal_factor(q) *
                       Vec2(std::cos(ang), std::sin(ang));
        if (lagrangian_value(m, q, v) < m.bound_a * sq(speed) - m.bound_b - 1e-9)
            return false;
    }
    return true;
}

}  // namespace critorb
