#pragma once

#include "critorb/dynamics.hpp"

namespace critorb {

// Discrete (co)tangent vector on path space: one chart 2-vector per node
// plus the scalar dT-component. Used both for perturbations and for the
// action 1-form; the duality pairing below is the bilinear bridge.
struct PathVector {
    std::vector<Vec2> node;
    double dT = 0.0;

    static PathVector zero(int n_nodes) {
        PathVector v;
        v.node.assign(n_nodes, Vec2::Zero());
        return v;
    }
};

inline double pairing(const PathVector& cov, const PathVector& xi, bool periodic) {
    const int n = static_cast<int>(cov.node.size()) - 1;
    double s = cov.dT * xi.dT;
    const int last = periodic ? n - 1 : n;  // periodic: node n mirrors node 0
    for (int j = 0; j <= last; ++j) s += cov.node[j].dot(xi.node[j]);
    return s;
}

enum class GradMetric { L2, H1 };

namespace detail {

struct SegmentData {
    int n = 0;
    double ds = 0.0;
    std::vector<Vec2> delta;       // q_{i+1} - q_i
    std::vector<double> lam2;      // lambda^2 at nodes
    std::vector<double> g2;        // segment metric factor (endpoint average)
};

inline SegmentData segment_data(const SurfaceModel& s, const DiscretePath& p) {
    SegmentData d;
    d.n = p.segments();
    d.ds = 1.0 / d.n;
    d.delta.resize(d.n);
    d.lam2.resize(d.n + 1);
    for (int j = 0; j <= d.n; ++j) d.lam2[j] = sq(s.conformal_factor(p.nodes[j]));
    d.g2.resize(d.n);
    for (int i = 0; i < d.n; ++i) {
        d.delta[i] = p.nodes[i + 1].xy - p.nodes[i].xy;
        d.g2[i] = 0.5 * (d.lam2[i] + d.lam2[i + 1]);
    }
    return d;
}

}  // namespace detail

// Free-time action A_k(x,T) = T * int_0^1 [L(x, x'/T) + k] ds, trapezoidal in
// the node argument with segment (midpoint) velocities. Includes the theta
// line integral when the model's theta is global; omits any non-exact sigma
// contribution (that part only exists through s_k_local's capping disc).
inline double action(const LagrangianModel& m, const DiscretePath& path, double k) {
    path.validate();
    DiscretePath p = path;
    canonicalize_chart(m.surface, p);
    const auto d = detail::segment_data(m.surface, p);
    double kin = 0.0, pot = 0.0, th = 0.0;
    for (int i = 0; i < d.n; ++i) {
        kin += d.g2[i] * d.delta[i].squaredNorm();
        pot += 0.5 * (m.V(p.nodes[i]) + m.V(p.nodes[i + 1]));
        if (m.theta_global)
            th += 0.5 * (m.theta(p.nodes[i]) + m.theta(p.nodes[i + 1])).dot(d.delta[i]);
    }
    return kin / (2.0 * p.T * d.ds) + p.T * d.ds * (k * d.n - pot) + th;
}

// Discrete mean energy along the path (the trapezoidal analogue of
// (1/T) int E dt), so that dA_k/dT = k - mean_energy.
inline double mean_energy(const LagrangianModel& m, const DiscretePath& path) {
    const auto d = detail::segment_data(m.surface, path);
    double kin = 0.0, pot = 0.0;
    for (int i = 0; i < d.n; ++i) {
        kin += d.g2[i] * d.delta[i].squaredNorm();
        pot += 0.5 * (m.V(path.nodes[i]) + m.V(path.nodes[i + 1]));
    }
    return kin / (2.0 * sq(path.T) * d.ds) + pot * d.ds;
}

// Action 1-form eta_k. Node components are the exact differential of the
// discrete action above; for non-exact sigma the magnetic pairing
// tau^sigma(x', .) replaces the theta-term differential. dT-component is
// k - mean energy. Conormal endpoint components are projected onto the
// tangent lines of Q0/Q1 (the path manifold is the constrained one).
inline PathVector eta_k(const LagrangianModel& m, const DiscretePath& path, double k) {
    path.validate();
    DiscretePath p = path;
    canonicalize_chart(m.surface, p);
    const auto d = detail::segment_data(m.surface, p);
    const bool periodic = p.boundary.periodic_kind();
    const double Tds = p.T * d.ds;

    PathVector eta = PathVector::zero(d.n + 1);

    // segment i contributes to nodes i and i+1
    for (int i = 0; i < d.n; ++i) {
        const ChartPoint& qa = p.nodes[i];
        const ChartPoint& qb = p.nodes[i + 1];
        const Vec2 grad_l2_a = 2.0 * d.lam2[i] * m.surface.grad_log_conformal(qa);
        const Vec2 grad_l2_b = 2.0 * d.lam2[i + 1] * m.surface.grad_log_conformal(qb);
        const double dd = d.delta[i].squaredNorm();

        // kinetic: g2_i |delta_i|^2 / (2 T ds)
        eta.node[i] += 0.5 * grad_l2_a * dd / (2.0 * Tds) - d.g2[i] * d.delta[i] / Tds;
        eta.node[i + 1] += 0.5 * grad_l2_b * dd / (2.0 * Tds) + d.g2[i] * d.delta[i] / Tds;

        // potential: -T ds (V(qa)+V(qb))/2
        eta.node[i] += -0.5 * Tds * m.grad_V_at(qa);
        eta.node[i + 1] += -0.5 * Tds * m.grad_V_at(qb);

        if (m.theta_global) {
            // theta line integral: (theta(qa)+theta(qb))/2 . delta_i
            const Vec2 tbar = 0.5 * (m.theta(qa) + m.theta(qb));
            eta.node[i] += 0.5 * m.theta_jac_at(qa).transpose() * d.delta[i] - tbar;
            eta.node[i + 1] += 0.5 * m.theta_jac_at(qb).transpose() * d.delta[i] + tbar;
        } else {
            // tau^sigma: int sigma(x', .) ds at the segment midpoint
            const ChartPoint mid(0.5 * (qa.xy + qb.xy), qa.chart);
            const double b = m.sigma_density(mid) * sq(m.surface.conformal_factor(mid));
            const Vec2 c = b * Vec2(-d.delta[i].y(), d.delta[i].x());
            eta.node[i] += 0.5 * c;
            eta.node[i + 1] += 0.5 * c;
        }
    }

    if (periodic) {
        eta.node[0] += eta.node[d.n];
        eta.node[d.n] = eta.node[0];
    } else {
        auto project = [&](Vec2& component, const CircleSpec& Q, const ChartPoint& q) {
            Vec2 t = Q.tangent_at(q);
            const double tn = t.norm();
            if (tn == 0.0) {
                component = Vec2::Zero();  // Point circle: endpoint fixed
                return;
            }
            t /= tn;
            component = component.dot(t) * t;
        };
        project(eta.node[0], p.boundary.Q0, p.nodes.front());
        project(eta.node[d.n], p.boundary.Q1, p.nodes.back());
    }

    eta.dT = k - mean_energy(m, p);
    return eta;
}

namespace detail {

// Solves the cyclic scalar tridiagonal system arising from the periodic H1
// Gram matrix via Sherman-Morrison. diag/off are the main and off-diagonal
// (off[i] couples i and i+1, off[n-1] couples n-1 and 0).
inline std::vector<double> solve_cyclic_tridiag(const std::vector<double>& diag,
                                                const std::vector<double>& off,
                                                std::vector<double> rhs) {
    const int n = static_cast<int>(diag.size());
    if (n == 1) return {rhs[0] / (diag[0] + 2.0 * off[0])};
    auto solve_tridiag = [&](std::vector<double> d, const std::vector<double>& o,
                             std::vector<double> r) {
        for (int i = 1; i < n; ++i) {
            if (std::abs(d[i - 1]) < 1e-300) throw NumericalError("singular Gram system");
            const double w = o[i - 1] / d[i - 1];
            d[i] -= w * o[i - 1];
            r[i] -= w * r[i - 1];
        }
        std::vector<double> x(n);
        if (std::abs(d[n - 1]) < 1e-300) throw NumericalError("singular Gram system");
        x[n - 1] = r[n - 1] / d[n - 1];
        for (int i = n - 2; i >= 0; --i) x[i] = (r[i] - o[i] * x[i + 1]) / d[i];
        return x;
    };
    // Woodbury correction for the corner entries off[n-1].
    const double alpha = off[n - 1];
    std::vector<double> dmod = diag;
    const double gamma = -diag[0];
    dmod[0] -= gamma;
    dmod[n - 1] -= alpha * alpha / gamma;
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = alpha;
    const auto y = solve_tridiag(dmod, off, std::move(rhs));
    const auto z = solve_tridiag(dmod, off, std::move(u));
    const double fact = (y[0] + alpha * y[n - 1] / gamma) /
                        (1.0 + z[0] + alpha * z[n - 1] / gamma);
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = y[i] - fact * z[i];
    return x;
}

}  // namespace detail

// Riesz representative of eta_k in the chosen discrete inner product on the
// tangent space of the (possibly constrained) path manifold, together with
// the dual norm. The product metric carries a flat dT^2 factor.
struct GradResult {
    PathVector direction;  // the gradient (tangent vector)
    double dual_norm_sq = 0.0;
};

inline GradResult riesz_gradient(const LagrangianModel& m, const DiscretePath& path,
                                 const PathVector& eta, GradMetric metric) {
    const auto d = detail::segment_data(m.surface, path);
    const bool periodic = path.boundary.periodic_kind();
    GradResult out;
    out.direction = PathVector::zero(d.n + 1);
    out.direction.dT = eta.dT;  // dT block of the metric is 1
    out.dual_norm_sq = sq(eta.dT);

    if (metric == GradMetric::L2) {
        // diagonal mass matrix
        for (int j = 0; j <= d.n; ++j) {
            double w = d.ds * d.lam2[j];
            if (!periodic && (j == 0 || j == d.n)) w *= 0.5;
            if (periodic && j == d.n) continue;
            Vec2 gj = eta.node[j] / w;
            if (!periodic) {
                // keep constrained endpoint directions (eta already projected)
                if (j == 0 || j == d.n) {
                    const CircleSpec& Q = (j == 0) ? path.boundary.Q0 : path.boundary.Q1;
                    Vec2 t = Q.tangent_at(path.nodes[j]);
                    if (t.norm() == 0.0) gj = Vec2::Zero();
                }
            }
            out.direction.node[j] = gj;
            out.dual_norm_sq += eta.node[j].dot(gj);
        }
        if (periodic) out.direction.node[d.n] = out.direction.node[0];
        return out;
    }

    // H1 metric: mass + difference stiffness, x and y decoupled (conformal).
    if (periodic) {
        const int n = d.n;
        std::vector<double> diag(n), off(n);
        for (int i = 0; i < n; ++i) {
            const int prev = (i + n - 1) % n;
            diag[i] = d.ds * d.lam2[i] + (d.g2[i] + d.g2[prev]) / d.ds;
            off[i] = -d.g2[i] / d.ds;  // couples i and i+1 (mod n)
        }
        for (int comp = 0; comp < 2; ++comp) {
            std::vector<double> rhs(n);
            for (int i = 0; i < n; ++i) rhs[i] = eta.node[i][comp];
            const auto x = detail::solve_cyclic_tridiag(diag, off, std::move(rhs));
            for (int i = 0; i < n; ++i) {
                out.direction.node[i][comp] = x[i];
                out.dual_norm_sq += eta.node[i][comp] * x[i];
            }
        }
        out.direction.node[d.n] = out.direction.node[0];
        return out;
    }

    // Conormal: block-tridiagonal Thomas with reduced endpoint blocks.
    const int n = d.n;
    std::vector<Eigen::Matrix<double, 2, Eigen::Dynamic>> basis(n + 1);
    for (int j = 0; j <= n; ++j) {
        if (j == 0 || j == n) {
            const CircleSpec& Q = (j == 0) ? path.boundary.Q0 : path.boundary.Q1;
            Vec2 t = Q.tangent_at(path.nodes[j]);
            if (t.norm() == 0.0) {
                basis[j].resize(2, 0);
            } else {
                basis[j].resize(2, 1);
                basis[j].col(0) = t.normalized();
            }
        } else {
            basis[j] = Mat2::Identity();
        }
    }
    std::vector<Eigen::MatrixXd> D(n + 1), U(n);  // diag and upper blocks (reduced)
    std::vector<Eigen::VectorXd> r(n + 1);
    for (int j = 0; j <= n; ++j) {
        double mass = d.ds * d.lam2[j] * ((j == 0 || j == n) ? 0.5 : 1.0);
        double stiff = 0.0;
        if (j > 0) stiff += d.g2[j - 1] / d.ds;
        if (j < n) stiff += d.g2[j] / d.ds;
        const Mat2 Dfull = (mass + stiff) * Mat2::Identity();
        D[j] = basis[j].transpose() * Dfull * basis[j];
        Eigen::Vector2d ej = eta.node[j];
        r[j] = basis[j].transpose() * ej;
        if (j < n) {
            const Mat2 Ufull = -(d.g2[j] / d.ds) * Mat2::Identity();
            U[j] = basis[j].transpose() * Ufull * basis[j + 1];
        }
    }
    // forward elimination
    for (int j = 1; j <= n; ++j) {
        if (D[j - 1].size() == 0) continue;
        Eigen::MatrixXd Dinv = D[j - 1].inverse();
        if (!Dinv.allFinite()) throw NumericalError("singular Gram system");
        const Eigen::MatrixXd W = U[j - 1].transpose() * Dinv;  // lower block * Dinv
        D[j] -= W * U[j - 1];
        r[j] -= W * r[j - 1];
    }
    // back substitution
    std::vector<Eigen::VectorXd> x(n + 1);
    for (int j = n; j >= 0; --j) {
        if (D[j].size() == 0) {
            x[j].resize(0);
            continue;
        }
        Eigen::VectorXd rhs = r[j];
        if (j < n && x[j + 1].size() > 0) rhs -= U[j] * x[j + 1];
        x[j] = D[j].inverse() * rhs;
        if (!x[j].allFinite()) throw NumericalError("singular Gram system");
    }
    for (int j = 0; j <= n; ++j) {
        if (x[j].size() == 0) {
            out.direction.node[j] = Vec2::Zero();
        } else {
            out.direction.node[j] = basis[j] * x[j];
            out.dual_norm_sq += eta.node[j].dot(out.direction.node[j]);
        }
    }
    return out;
}

inline PathVector grad(const LagrangianModel& m, const DiscretePath& path, double k,
                       GradMetric metric) {
    return riesz_gradient(m, path, eta_k(m, path, k), metric).direction;
}

// Applies the Gram (metric) matrix to a tangent vector, so that
// <xi, zeta>_metric = pairing(apply_gram(xi), zeta).
inline PathVector apply_gram(const LagrangianModel& m, const DiscretePath& path,
                             const PathVector& xi, GradMetric metric) {
    const auto d = detail::segment_data(m.surface, path);
    const bool periodic = path.boundary.periodic_kind();
    PathVector out = PathVector::zero(d.n + 1);
    out.dT = xi.dT;
    auto node_of = [&](int j) -> const Vec2& {
        return (periodic && j == d.n) ? xi.node[0] : xi.node[j];
    };
    for (int j = 0; j <= d.n; ++j) {
        double w = d.ds * d.lam2[j];
        if (!periodic && (j == 0 || j == d.n)) w *= 0.5;
        if (periodic && j == d.n) continue;
        out.node[j] += w * node_of(j);
    }
    if (metric == GradMetric::H1) {
        for (int i = 0; i < d.n; ++i) {
            const Vec2 diff = (node_of(i + 1) - node_of(i)) * (d.g2[i] / d.ds);
            if (periodic && i + 1 == d.n) {
                out.node[0] += diff;
            } else {
                out.node[i + 1] += diff;
            }
            out.node[i] -= diff;
        }
    }
    if (periodic) out.node[d.n] = out.node[0];
    return out;
}

inline double metric_inner(const LagrangianModel& m, const DiscretePath& path,
                           const PathVector& xi, const PathVector& zeta, GradMetric metric) {
    return pairing(apply_gram(m, path, xi, metric), zeta, path.boundary.periodic_kind());
}

inline double eta_dual_norm(const LagrangianModel& m, const DiscretePath& path, double k,
                            GradMetric metric) {
    const auto g = riesz_gradient(m, path, eta_k(m, path, k), metric);
    return std::sqrt(std::max(0.0, g.dual_norm_sq));
}

// Applies a tangent perturbation: nodes move in their charts, T additively.
inline DiscretePath apply_perturbation(const DiscretePath& p, const PathVector& xi, double h) {
    DiscretePath out = p;
    const int n = p.segments();
    const bool periodic = p.boundary.periodic_kind();
    for (int j = 0; j <= n; ++j) {
        const Vec2 step = (periodic && j == n) ? xi.node[0] : xi.node[j];
        out.nodes[j].xy += h * step;
    }
    out.T = p.T + h * xi.dT;
    if (out.T <= 0.0) out.T = 1e-12;
    return out;
}

// Capping-disc integral int_D sigma over the cone from the loop centroid,
// evaluated on the chart/lift where the loop closes. Degree-2 quadrature on
// subdivided triangles.
inline double capping_integral(const LagrangianModel& m, const DiscretePath& path,
                               int subdivision = 2) {
    DiscretePath p = path;
    canonicalize_chart(m.surface, p);
    const int n = p.segments();
    Vec2 c = Vec2::Zero();
    for (int i = 0; i < n; ++i) c += p.nodes[i].xy;
    c /= n;
    const std::int8_t chart = p.nodes[0].chart;
    auto b = [&](const Vec2& q) {
        const ChartPoint cq(q, chart);
        return m.sigma_density(cq) * sq(m.surface.conformal_factor(cq));
    };
    auto tri_quad = [&](const Vec2& a0, const Vec2& a1, const Vec2& a2, auto&& self,
                        int level) -> double {
        if (level > 0) {
            const Vec2 m01 = 0.5 * (a0 + a1), m12 = 0.5 * (a1 + a2), m20 = 0.5 * (a2 + a0);
            return self(a0, m01, m20, self, level - 1) + self(m01, a1, m12, self, level - 1) +
                   self(m20, m12, a2, self, level - 1) + self(m01, m12, m20, self, level - 1);
        }
        const double area = 0.5 * cross2(a1 - a0, a2 - a0);  // signed
        const Vec2 m01 = 0.5 * (a0 + a1), m12 = 0.5 * (a1 + a2), m20 = 0.5 * (a2 + a0);
        return area * (b(m01) + b(m12) + b(m20)) / 3.0;
    };
    double total = 0.0;
    for (int i = 0; i < n; ++i)
        total += tri_quad(c, p.nodes[i].xy, p.nodes[i + 1].xy, tri_quad, subdivision);
    return total;
}

inline double default_vdelta(const SurfaceModel& s) {
    double scale = 1.0;
    switch (s.kind) {
        case SurfaceKind::FlatTorus:
            scale = std::min(s.Lx, s.Ly);
            break;
        case SurfaceKind::HyperbolicHalfPlane:
            scale = 1.0;  // hyperbolic injectivity radius is infinite; O(1) loops
            break;
        case SurfaceKind::RoundSphere:
            scale = M_PI * s.radius;
            break;
    }
    return 1e-2 * sq(scale);
}

// Local primitive S_k = A^L_k + int_{D_x} sigma near constant loops
// (e(x) < delta), capping on the lift. The mechanical action is used (no
// theta), so exact models agree with `action` by Stokes.
inline double s_k_local(const LagrangianModel& m, const DiscretePath& path, double k,
                        double delta = -1.0) {
    path.validate();
    if (!path.boundary.periodic_kind())
        throw PreconditionError("s_k_local is defined for loops");
    if (delta < 0.0) delta = default_vdelta(m.surface);
    if (kinetic(m.surface, path) >= delta)
        throw PreconditionError("loop outside V_delta (kinetic energy too large)");
    const HomotopyClass h = homotopy_class(m.surface, path);
    if (!h.trivial_marker && h.winding != Eigen::Vector2i(0, 0))
        throw PreconditionError("s_k_local needs a contractible loop");
    LagrangianModel mech = m;
    mech.theta_global = false;
    return action(mech, path, k) + capping_integral(m, path);
}

// S_k without the V_delta membership test, for search/evaluation code that
// manages its own admissibility (lift action of contractible loops).
inline double s_k_value(const LagrangianModel& m, const DiscretePath& path, double k) {
    LagrangianModel mech = m;
    mech.theta_global = false;
    return action(mech, path, k) + capping_integral(m, path);
}

}  // namespace critorb
