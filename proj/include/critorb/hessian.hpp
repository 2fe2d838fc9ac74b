#pragma once

#include "critorb/action.hpp"

namespace critorb {

// Flattening of the discrete path tangent space (free node dofs + T) into a
// coordinate vector, honoring periodic identification and conormal endpoint
// constraints.
struct DofMap {
    std::vector<std::pair<int, Vec2>> entries;  // (node index, chart direction)
    bool periodic = false;
    int n_nodes = 0;

    int size() const { return static_cast<int>(entries.size()) + 1; }  // + T

    static DofMap build(const DiscretePath& p) {
        DofMap d;
        d.periodic = p.boundary.periodic_kind();
        d.n_nodes = static_cast<int>(p.nodes.size());
        const int n = p.segments();
        const int last_free = d.periodic ? n - 1 : n;
        for (int j = 0; j <= last_free; ++j) {
            if (!d.periodic && (j == 0 || j == n)) {
                const CircleSpec& Q = (j == 0) ? p.boundary.Q0 : p.boundary.Q1;
                Vec2 t = Q.tangent_at(p.nodes[j]);
                if (t.norm() == 0.0) continue;  // fixed endpoint
                d.entries.emplace_back(j, t.normalized());
                continue;
            }
            d.entries.emplace_back(j, Vec2(1.0, 0.0));
            d.entries.emplace_back(j, Vec2(0.0, 1.0));
        }
        return d;
    }

    Eigen::VectorXd flatten(const PathVector& v) const {
        Eigen::VectorXd out(size());
        for (size_t i = 0; i < entries.size(); ++i)
            out[static_cast<int>(i)] = v.node[entries[i].first].dot(entries[i].second);
        out[size() - 1] = v.dT;
        return out;
    }

    PathVector unflatten(const Eigen::VectorXd& x) const {
        PathVector v = PathVector::zero(n_nodes);
        for (size_t i = 0; i < entries.size(); ++i)
            v.node[entries[i].first] += x[static_cast<int>(i)] * entries[i].second;
        if (periodic) v.node[n_nodes - 1] = v.node[0];
        v.dT = x[size() - 1];
        return v;
    }

    DiscretePath displaced(const DiscretePath& p, const Eigen::VectorXd& x) const {
        return apply_perturbation(p, unflatten(x), 1.0);
    }
};

// Central finite differences of the exact discrete gradient, symmetrized.
// This is the Hessian of the discrete (local) action in flat coordinates;
// its signature is basis-independent, so negative eigenvalues can be counted
// directly.
inline Eigen::MatrixXd hessian_matrix(const LagrangianModel& m, const DiscretePath& path,
                                      double k, double fd_step = 1e-6) {
    const DofMap dofs = DofMap::build(path);
    const int n = dofs.size();
    Eigen::MatrixXd H(n, n);
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
        const double h = fd_step * (j == n - 1 ? std::max(1.0, path.T) : 1.0);
        e[j] = h;
        const PathVector gp = eta_k(m, dofs.displaced(path, e), k);
        e[j] = -h;
        const PathVector gm = eta_k(m, dofs.displaced(path, e), k);
        H.col(j) = (dofs.flatten(gp) - dofs.flatten(gm)) / (2.0 * h);
    }
    return 0.5 * (H + H.transpose());
}

// Count of negative eigenvalues of the finite-difference Hessian at a
// certified critical point. Near-zero modes (time shift along the orbit) are
// excluded by the relative threshold.
inline int hessian_index(const LagrangianModel& m, const DiscretePath& path, double k,
                         double criticality_tol = 1e-4, double rel_threshold = 1e-6) {
    const double gn = eta_dual_norm(m, path, k, GradMetric::H1);
    if (!(gn < criticality_tol))
        throw PreconditionError("hessian_index needs a certified critical point");
    const Eigen::MatrixXd H = hessian_matrix(m, path, k);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const double scale = std::max(ev.cwiseAbs().maxCoeff(), 1e-12);
    int count = 0;
    for (int i = 0; i < ev.size(); ++i)
        if (ev[i] < -rel_threshold * scale) ++count;
    return count;
}

struct PolishResult {
    DiscretePath path;
    double eta_norm = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};

// Damped Newton iteration on eta_k = 0 (Levenberg regularization handles the
// reparametrization zero mode). Used to finish minimax/descent candidates.
inline PolishResult newton_polish(const LagrangianModel& m, DiscretePath path, double k,
                                  double tol = 1e-9, int max_iters = 40) {
    PolishResult res;
    if (m.surface.kind == SurfaceKind::FlatTorus) canonicalize_lift(m.surface, path);
    canonicalize_chart(m.surface, path);
    double mu = 1e-8;
    double gn = eta_dual_norm(m, path, k, GradMetric::H1);
    for (int it = 0; it < max_iters; ++it) {
        res.iterations = it;
        if (gn < tol) {
            res.converged = true;
            break;
        }
        const DofMap dofs = DofMap::build(path);  // endpoint tangents move with the path
        Eigen::MatrixXd H;
        Eigen::VectorXd g;
        try {
            H = hessian_matrix(m, path, k);
            g = dofs.flatten(eta_k(m, path, k));
        } catch (const DomainError&) {
            break;
        }
        const double scale = std::max(H.cwiseAbs().maxCoeff(), 1e-12);
        bool stepped = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd Hmu = H + mu * scale * Eigen::MatrixXd::Identity(H.rows(), H.cols());
            Eigen::VectorXd d = Hmu.ldlt().solve(-g);
            if (!d.allFinite()) {
                mu *= 10.0;
                continue;
            }
            DiscretePath cand = dofs.displaced(path, d);
            if (cand.T <= 0.0) {
                mu *= 10.0;
                continue;
            }
            double gn2;
            try {
                gn2 = eta_dual_norm(m, cand, k, GradMetric::H1);
            } catch (const DomainError&) {
                mu *= 10.0;
                continue;
            }
            if (gn2 < gn) {
                path = std::move(cand);
                gn = gn2;
                mu = std::max(mu * 0.3, 1e-12);
                stepped = true;
                break;
            }
            mu *= 10.0;
        }
        if (!stepped) break;
    }
    res.path = std::move(path);
    res.eta_norm = gn;
    return res;
}

}  // namespace critorb
