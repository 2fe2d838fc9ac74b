#pragma once

#include "critorb/descent.hpp"
#include "critorb/hessian.hpp"

namespace critorb {

enum class OrbitStatus { Orbit, Collapse, Blowup, Infeasible, NotConverged };

inline const char* to_string(OrbitStatus s) {
    switch (s) {
        case OrbitStatus::Orbit: return "orbit";
        case OrbitStatus::Collapse: return "collapse";
        case OrbitStatus::Blowup: return "blowup";
        case OrbitStatus::Infeasible: return "infeasible";
        case OrbitStatus::NotConverged: return "not-converged";
    }
    return "?";
}

struct CriticalPointReport {
    DiscretePath path;
    double value = std::numeric_limits<double>::quiet_NaN();  // action / S_k / Delta S_k
    double eta_norm = std::numeric_limits<double>::infinity();
    OrbitCertificate certificate;
    int hessian_negative_count = -1;  // -1: not computed
    HomotopyClass homotopy;
    OrbitStatus status = OrbitStatus::NotConverged;
    std::string reason;
    FlowTrace trace;

    bool is_orbit() const { return status == OrbitStatus::Orbit; }
};

namespace detail {

// Discrete velocity gamma'(0) in chart components at node j, fourth order.
inline Vec2 node_velocity(const DiscretePath& p, int j) {
    const int n = p.segments();
    const double h = p.T / n;
    auto node = [&](int i) -> Vec2 {
        if (p.boundary.periodic_kind()) {
            const int w = ((i % n) + n) % n;
            // unwrap across the seam: node n = node 0 + lattice offset
            Vec2 q = p.nodes[w].xy;
            if (i >= n || i < 0) {
                const Vec2 off = p.nodes[n].xy - p.nodes[0].xy;
                q += std::floor(double(i) / n) * off;
            }
            return q;
        }
        return p.nodes[std::clamp(i, 0, n)].xy;
    };
    if (p.boundary.periodic_kind() || (j >= 2 && j <= n - 2)) {
        return (-node(j + 2) + 8.0 * node(j + 1) - 8.0 * node(j - 1) + node(j - 2)) /
               (12.0 * h);
    }
    // one-sided 4-point stencils at the open ends
    if (j == 0)
        return (-11.0 * node(0) + 18.0 * node(1) - 9.0 * node(2) + 2.0 * node(3)) / (6.0 * h);
    return (11.0 * node(n) - 18.0 * node(n - 1) + 9.0 * node(n - 2) - 2.0 * node(n - 3)) /
           (6.0 * h);
}

// Gauss-Newton refinement of a periodic-orbit initial condition (v0, T) from
// the shooting residual (q(T) - q0, v(T) - v0); q0 stays fixed.
inline bool refine_periodic_ic(const LagrangianModel& m, const ChartPoint& q0, Vec2& v0,
                               double& T, int steps) {
    auto residual = [&](const Vec2& v, double t) -> Eigen::Vector4d {
        const ShootResult r = shoot(m, q0, v, t, steps);
        if (r.certificate.clipped) throw DomainError("clipped");
        const ChartPoint qe = to_chart(m.surface, r.final_state.q, q0.chart);
        Vec2 ve = r.final_state.v;
        if (r.final_state.q.chart != q0.chart)
            ve = sphere_transition_tangent(r.final_state.q, r.final_state.v);
        Eigen::Vector4d out;
        out.head<2>() = chart_difference(m.surface, q0, qe);
        out.tail<2>() = ve - v;
        return out;
    };
    try {
        for (int it = 0; it < 8; ++it) {
            const Eigen::Vector4d r0 = residual(v0, T);
            if (r0.norm() < 1e-12) return true;
            Eigen::Matrix<double, 4, 3> J;
            const double hv = 1e-7 * std::max(1.0, v0.norm());
            const double ht = 1e-7 * std::max(1.0, T);
            for (int c = 0; c < 2; ++c) {
                Vec2 vp = v0;
                vp[c] += hv;
                J.col(c) = (residual(vp, T) - r0) / hv;
            }
            J.col(2) = (residual(v0, T + ht) - r0) / ht;
            const Eigen::Vector3d d =
                (J.transpose() * J + 1e-14 * Eigen::Matrix3d::Identity())
                    .ldlt()
                    .solve(-J.transpose() * r0);
            if (!d.allFinite()) return false;
            v0 += d.head<2>();
            T += d[2];
            if (T <= 0) return false;
        }
        return true;
    } catch (const DomainError&) {
        return false;
    }
}

}  // namespace detail

// Independent certification of a candidate critical point: extract the
// initial condition from the discrete path, refine it by shooting (periodic
// case), integrate, and report closure / energy drift / conormal residuals.
inline OrbitCertificate certify_orbit(const LagrangianModel& m, const DiscretePath& path,
                                      double k, int steps_per_unit_time = 1000,
                                      bool refine = true) {
    DiscretePath p = path;
    if (m.surface.kind == SurfaceKind::FlatTorus) canonicalize_lift(m.surface, p);
    canonicalize_chart(m.surface, p);
    const ChartPoint q0 = p.nodes.front();
    Vec2 v0 = detail::node_velocity(p, 0);
    // put the speed on shell; the discrete direction is the reliable part
    const double vn = metric_norm(m.surface, q0, v0);
    const double target = std::sqrt(std::max(0.0, 2.0 * (k - m.V(q0))));
    if (vn > 1e-12 && target > 0) v0 *= target / vn;
    double T = p.T;

    const int steps = std::max(64, static_cast<int>(steps_per_unit_time * T));
    if (p.boundary.periodic_kind() && refine)
        detail::refine_periodic_ic(m, q0, v0, T, steps);

    ShootResult r = shoot(m, q0, v0, T, steps);
    OrbitCertificate cert = r.certificate;
    if (!p.boundary.periodic_kind()) {
        // closure = how far the shot endpoint lands from Q1
        if (!cert.clipped) {
            cert.closure_residual =
                p.boundary.Q1.chart_distance(m.surface,
                                             to_chart(m.surface, r.final_state.q, 0)) *
                m.surface.conformal_factor(r.final_state.q);
            cert.conormal_residual_0 = restricted_covector_norm(
                m, q0, fiber_derivative(m, q0, v0), p.boundary.Q0);
            const ChartPoint qe = r.final_state.q;
            cert.conormal_residual_1 = restricted_covector_norm(
                m, qe, fiber_derivative(m, qe, r.final_state.v), p.boundary.Q1);
        }
    }
    return cert;
}

struct MinimizeConfig {
    FlowConfig flow;
    double certify_tol = 1e-4;   // eta norm + closure gates for "orbit"
    bool polish = true;
    double polish_tol = 1e-9;
    bool compute_index = false;
};

// Descent to a critical point with certification; homotopy class preserved
// by construction (asserted via homotopy_class).
inline CriticalPointReport minimize(const LagrangianModel& m, const DiscretePath& path0,
                                    double k, const MinimizeConfig& cfg = {}) {
    CriticalPointReport rep;
    rep.homotopy = homotopy_class(m.surface, path0);

    if (!path0.boundary.periodic_kind()) {
        const double obstruction =
            std::max(min_conormal_energy(m, path0.boundary.Q0),
                     min_conormal_energy(m, path0.boundary.Q1));
        if (k < obstruction - 1e-12) rep.reason = "k below the conormal obstruction";
    }

    FlowResult fr = flow_until(m, path0, k, cfg.flow);
    rep.trace = std::move(fr.trace);
    rep.path = std::move(fr.path);

    switch (rep.trace.reason) {
        case TerminationReason::TCollapse:
            rep.status = OrbitStatus::Collapse;
            if (rep.reason.empty()) rep.reason = "period collapse toward constant loops";
            break;
        case TerminationReason::LeftDomain:
            rep.status = OrbitStatus::Blowup;
            rep.reason = "trajectory left the admissible region";
            break;
        default:
            rep.status = OrbitStatus::NotConverged;
            break;
    }

    if (rep.trace.reason == TerminationReason::Converged ||
        (rep.trace.stalled && cfg.polish) ||
        (rep.trace.reason == TerminationReason::MaxIters && cfg.polish)) {
        if (cfg.polish) {
            auto pol = newton_polish(m, rep.path, k, cfg.polish_tol);
            if (pol.eta_norm <= eta_dual_norm(m, rep.path, k, GradMetric::H1))
                rep.path = std::move(pol.path);
        }
        rep.eta_norm = eta_dual_norm(m, rep.path, k, cfg.flow.metric);
        try {
            rep.certificate = certify_orbit(m, rep.path, k);
        } catch (const std::exception& ex) {
            rep.reason = std::string("certification failed: ") + ex.what();
        }
        const HomotopyClass h_end = homotopy_class(m.surface, rep.path);
        if (!(h_end == rep.homotopy))
            throw NumericalError("descent changed the homotopy class");

        const bool conormal_ok =
            rep.path.boundary.periodic_kind() ||
            (rep.certificate.conormal_residual_0 < cfg.certify_tol &&
             rep.certificate.conormal_residual_1 < cfg.certify_tol);
        if (rep.eta_norm < cfg.certify_tol &&
            rep.certificate.closure_residual < cfg.certify_tol && conormal_ok &&
            !rep.certificate.clipped) {
            rep.status = OrbitStatus::Orbit;
            rep.reason.clear();
        } else if (!rep.reason.empty()) {
            rep.status = OrbitStatus::Infeasible;
        }
    } else if (!rep.reason.empty() && rep.status != OrbitStatus::Blowup) {
        // obstruction + failed run: surface the infeasibility
        rep.status = OrbitStatus::Infeasible;
        try {
            const auto res = conormal_residual(m, rep.path, rep.path.boundary.Q0,
                                               rep.path.boundary.Q1, 1e-2);
            rep.certificate.conormal_residual_0 = res.first;
            rep.certificate.conormal_residual_1 = res.second;
        } catch (const std::exception&) {
        }
    }

    try {
        rep.value = m.theta_global
                        ? action(m, rep.path, k)
                        : (detail::contractible_loop(m.surface, rep.path)
                               ? s_k_value(m, rep.path, k)
                               : action(m, rep.path, k));
    } catch (const std::exception&) {
    }
    if (cfg.compute_index && rep.is_orbit()) {
        try {
            rep.hessian_negative_count = hessian_index(m, rep.path, k, 10 * cfg.certify_tol);
        } catch (const std::exception&) {
        }
    }
    return rep;
}

}  // namespace critorb
