#pragma once

#include "critorb/action.hpp"

namespace critorb {

struct FlowCutoff {
    bool enabled = true;
    double delta = -1.0;    // < 0: default_vdelta(surface)
    double epsilon = -1.0;  // < 0: estimate from sampled boundary loops
    double ramp_width = 0.25;  // kappa ramps over [eps/4, eps/4 + width*eps]
};

enum class StepPolicy { Fixed, AdaptiveBacktracking };

struct FlowConfig {
    StepPolicy policy = StepPolicy::AdaptiveBacktracking;
    double step = 0.25;     // flow-time per iteration (max step when adaptive)
    double tol = 1e-8;      // stop when the eta dual norm drops below
    int max_iters = 2000;
    double T_floor = 1e-4;
    GradMetric metric = GradMetric::H1;
    double armijo_c1 = 0.5;
    int max_backtracks = 40;
    FlowCutoff cutoff;
};

enum class TerminationReason { Converged, TCollapse, MaxIters, LeftDomain };

inline const char* to_string(TerminationReason r) {
    switch (r) {
        case TerminationReason::Converged: return "Converged";
        case TerminationReason::TCollapse: return "TCollapse";
        case TerminationReason::MaxIters: return "MaxIters";
        case TerminationReason::LeftDomain: return "LeftDomain";
    }
    return "?";
}

struct FlowSample {
    int iter = 0;
    double value = std::numeric_limits<double>::quiet_NaN();  // action or S_k where defined
    double grad_norm = 0.0;
    double T = 0.0;
    double e = 0.0;       // kinetic energy
    double delta_S = 0.0; // cumulative eta line integral along the run
};

struct FlowTrace {
    std::vector<FlowSample> samples;
    TerminationReason reason = TerminationReason::MaxIters;
    bool stalled = false;       // line search could not make progress
    bool frozen_at_cutoff = false;
    double flow_time = 0.0;     // total accepted flow-parameter length

    void write_csv(std::ostream& os) const {
        os << "iter,action,gradnorm,T,e,deltaS\n";
        for (const auto& s : samples)
            os << s.iter << "," << std::setprecision(17) << s.value << "," << s.grad_norm
               << "," << s.T << "," << s.e << "," << s.delta_S << "\n";
    }
};

// Samples loops on the V_delta boundary (e(x) = delta) and returns half the
// smallest S_k found; the thesis only guarantees a positive epsilon exists
// for k > e0, so the estimate is conservative.
inline double estimate_epsilon(const LagrangianModel& m, double k, double delta,
                               int n_loop = 32) {
    std::vector<ChartPoint> centers;
    switch (m.surface.kind) {
        case SurfaceKind::FlatTorus:
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j)
                    centers.emplace_back((i + 0.5) / 6.0 * m.surface.Lx,
                                         (j + 0.5) / 6.0 * m.surface.Ly);
            break;
        case SurfaceKind::HyperbolicHalfPlane: {
            const auto& b = m.surface.box;
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) {
                    // geometric spacing in y respects the metric scale
                    const double y = b.ymin * std::pow(b.ymax / b.ymin, (j + 0.5) / 6.0);
                    centers.emplace_back(b.xmin + (i + 0.5) / 6.0 * (b.xmax - b.xmin), y);
                }
            break;
        }
        case SurfaceKind::RoundSphere:
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j)
                        centers.emplace_back(ChartPoint(-0.9 + 0.6 * i, -0.9 + 0.6 * j,
                                                        static_cast<std::int8_t>(c)));
            break;
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) {
        if (!m.surface.admissible(c)) continue;
        const double lam = m.surface.conformal_factor(c);
        const double rho = std::sqrt(delta) / (2.0 * M_PI * lam);
        const double e_nom = delta;
        const double denom = std::max(1e-6, k - m.V(c));
        const double t_star = std::sqrt(e_nom / (2.0 * denom));
        for (double tf : {0.5, 1.0, 2.0}) {
            for (bool cw : {false, true}) {
                try {
                    DiscretePath loop = circle_loop(m.surface, c, rho, n_loop, t_star * tf, cw);
                    best = std::min(best, s_k_value(m, loop, k));
                } catch (const DomainError&) {
                }
            }
        }
    }
    if (!std::isfinite(best)) return 1e-6;
    return std::max(0.5 * best, 1e-12);
}

namespace detail {

struct StepInfo {
    PathVector direction;  // kappa * X_k (tangent)
    double eta_norm = 0.0;
    double kappa = 1.0;
    double field_norm = 0.0;  // ||kappa X|| in g_M, < 1
    PathVector eta;
    bool in_cutoff_region = false;
    double s_k = std::numeric_limits<double>::quiet_NaN();
};

inline bool contractible_loop(const SurfaceModel& s, const DiscretePath& p) {
    if (!p.boundary.periodic_kind()) return false;
    if (s.kind != SurfaceKind::FlatTorus) return true;
    const HomotopyClass h = homotopy_class(s, p);
    return h.winding == Eigen::Vector2i(0, 0);
}

inline StepInfo truncated_field(const LagrangianModel& m, const DiscretePath& p, double k,
                                const FlowConfig& cfg, double eps_cached) {
    StepInfo info;
    info.eta = eta_k(m, p, k);
    auto gr = riesz_gradient(m, p, info.eta, cfg.metric);
    info.eta_norm = std::sqrt(std::max(0.0, gr.dual_norm_sq));
    const double scale = std::sqrt(1.0 + gr.dual_norm_sq);

    info.kappa = 1.0;
    if (cfg.cutoff.enabled && contractible_loop(m.surface, p)) {
        const double delta =
            cfg.cutoff.delta > 0 ? cfg.cutoff.delta : default_vdelta(m.surface);
        if (kinetic(m.surface, p) < delta) {
            info.in_cutoff_region = true;
            info.s_k = s_k_value(m, p, k);
            const double eps = eps_cached;
            const double lo = eps / 4.0;
            const double hi = lo + cfg.cutoff.ramp_width * eps;
            if (info.s_k <= lo) {
                info.kappa = 0.0;
            } else if (info.s_k < hi) {
                const double t = (info.s_k - lo) / (hi - lo);
                info.kappa = t * t * (3.0 - 2.0 * t);
            }
        }
    }

    info.direction = PathVector::zero(static_cast<int>(p.nodes.size()));
    const double f = -info.kappa / scale;
    for (size_t j = 0; j < info.direction.node.size(); ++j)
        info.direction.node[j] = f * gr.direction.node[j];
    info.direction.dT = f * gr.direction.dT;
    info.field_norm = info.kappa * info.eta_norm / scale;
    return info;
}

// One explicit step of flow-time h along a precomputed direction, with a
// positivity-preserving T update.
inline DiscretePath explicit_step(const DiscretePath& p, const PathVector& dir, double h) {
    DiscretePath out = p;
    const int n = p.segments();
    const bool periodic = p.boundary.periodic_kind();
    for (int j = 0; j <= n; ++j) {
        const Vec2 step = (periodic && j == n) ? dir.node[0] : dir.node[j];
        out.nodes[j].xy += h * step;
    }
    const double dT = h * dir.dT;
    if (p.T + dT > 0.25 * p.T)
        out.T = p.T + dT;
    else  // log-space fallback keeps T > 0 structurally
        out.T = p.T * std::exp(dT / p.T);
    return out;
}

}  // namespace detail

// One explicit Euler step along the truncated conformal field
// X = -kappa_delta * sharp(eta_k)/sqrt(1+|eta_k|^2); the displacement is
// bounded by the step size because the field has norm < 1.
inline DiscretePath flow_step(const LagrangianModel& m, const DiscretePath& path, double k,
                              const FlowConfig& cfg) {
    path.validate();
    double eps = cfg.cutoff.epsilon;
    if (cfg.cutoff.enabled && eps < 0) {
        const double delta =
            cfg.cutoff.delta > 0 ? cfg.cutoff.delta : default_vdelta(m.surface);
        eps = estimate_epsilon(m, k, delta);
    }
    const auto info = detail::truncated_field(m, path, k, cfg, eps);
    if (path.T < cfg.T_floor) throw PreconditionError("duration under the T-floor");
    return detail::explicit_step(path, info.direction, cfg.step);
}

struct FlowResult {
    DiscretePath path;
    FlowTrace trace;
};

inline FlowResult flow_until(const LagrangianModel& m, DiscretePath path, double k,
                             FlowConfig cfg) {
    path.validate();
    if (m.surface.kind == SurfaceKind::FlatTorus) canonicalize_lift(m.surface, path);
    canonicalize_chart(m.surface, path);

    if (cfg.cutoff.enabled && cfg.cutoff.epsilon < 0) {
        const double delta =
            cfg.cutoff.delta > 0 ? cfg.cutoff.delta : default_vdelta(m.surface);
        cfg.cutoff.epsilon = estimate_epsilon(m, k, delta);
    }

    FlowResult res;
    res.trace.reason = TerminationReason::MaxIters;
    double cumulative_dS = 0.0;

    auto tracked_value = [&](const DiscretePath& p) -> double {
        try {
            if (m.theta_global) return action(m, p, k);
            if (detail::contractible_loop(m.surface, p)) return s_k_value(m, p, k);
        } catch (const std::exception&) {
        }
        return std::numeric_limits<double>::quiet_NaN();
    };

    for (int it = 0; it < cfg.max_iters; ++it) {
        detail::StepInfo info;
        try {
            info = detail::truncated_field(m, path, k, cfg, cfg.cutoff.epsilon);
        } catch (const DomainError&) {
            res.trace.reason = TerminationReason::LeftDomain;
            break;
        }

        FlowSample s;
        s.iter = it;
        s.value = tracked_value(path);
        s.grad_norm = info.eta_norm;
        s.T = path.T;
        s.e = kinetic(m.surface, path);
        s.delta_S = cumulative_dS;
        res.trace.samples.push_back(s);

        if (info.eta_norm <= cfg.tol) {
            res.trace.reason = TerminationReason::Converged;
            break;
        }
        if (info.kappa == 0.0) {
            res.trace.reason = TerminationReason::TCollapse;
            res.trace.frozen_at_cutoff = true;
            break;
        }
        if (path.T < cfg.T_floor) {
            res.trace.reason = TerminationReason::TCollapse;
            break;
        }

        const double predicted = pairing(info.eta, info.direction, path.boundary.periodic_kind());
        double h = cfg.step;
        bool accepted = false;
        for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
            DiscretePath cand = detail::explicit_step(path, info.direction, h);
            PathVector disp = PathVector::zero(static_cast<int>(path.nodes.size()));
            for (size_t j = 0; j < disp.node.size(); ++j)
                disp.node[j] = cand.nodes[j].xy - path.nodes[j].xy;
            disp.dT = cand.T - path.T;
            double dS;
            try {
                const PathVector eta2 = eta_k(m, cand, k);
                dS = 0.5 * (pairing(info.eta, disp, path.boundary.periodic_kind()) +
                            pairing(eta2, disp, path.boundary.periodic_kind()));
            } catch (const DomainError&) {
                if (cfg.policy == StepPolicy::Fixed) {
                    res.trace.reason = TerminationReason::LeftDomain;
                    break;
                }
                h *= 0.5;
                continue;
            }
            if (cfg.policy == StepPolicy::Fixed || dS <= cfg.armijo_c1 * h * predicted) {
                path = cand;
                cumulative_dS += dS;
                res.trace.flow_time += h;
                accepted = true;
                break;
            }
            h *= 0.5;
        }
        if (res.trace.reason == TerminationReason::LeftDomain) break;
        if (!accepted) {
            res.trace.stalled = true;
            break;
        }
    }
    res.path = std::move(path);
    return res;
}

struct PsDiagnostics {
    bool bounded_T = true;
    bool T_away_from_zero = true;
    bool grad_to_zero = false;
    enum class Class { Convergent, CollapseAtZeroLevel, PeriodBlowup, Indeterminate } cls =
        Class::Indeterminate;
};

inline const char* to_string(PsDiagnostics::Class c) {
    switch (c) {
        case PsDiagnostics::Class::Convergent: return "convergent";
        case PsDiagnostics::Class::CollapseAtZeroLevel: return "collapse-at-zero-level";
        case PsDiagnostics::Class::PeriodBlowup: return "period-blowup";
        case PsDiagnostics::Class::Indeterminate: return "indeterminate";
    }
    return "?";
}

inline PsDiagnostics ps_monitor(const FlowTrace& trace, double T_blowup = 50.0,
                                double zero_level_tol = 1e-3) {
    if (trace.samples.empty()) throw PreconditionError("ps_monitor needs a nonempty trace");
    PsDiagnostics d;
    const auto& first = trace.samples.front();
    const auto& last = trace.samples.back();
    double T_max = 0.0, T_min = std::numeric_limits<double>::infinity();
    for (const auto& s : trace.samples) {
        T_max = std::max(T_max, s.T);
        T_min = std::min(T_min, s.T);
    }
    d.bounded_T = T_max < std::max(T_blowup, 10.0 * first.T);
    d.T_away_from_zero = T_min > 1e-3 && trace.reason != TerminationReason::TCollapse;
    d.grad_to_zero = trace.reason == TerminationReason::Converged ||
                     last.grad_norm < 1e-2 * std::max(first.grad_norm, 1e-12);

    if (trace.reason == TerminationReason::Converged) {
        d.cls = PsDiagnostics::Class::Convergent;
    } else if (trace.reason == TerminationReason::TCollapse) {
        const double lvl = std::isnan(last.value) ? 0.0 : std::abs(last.value);
        d.cls = (lvl < zero_level_tol) ? PsDiagnostics::Class::CollapseAtZeroLevel
                                       : PsDiagnostics::Class::Indeterminate;
    } else if (!d.bounded_T ||
               (trace.reason == TerminationReason::LeftDomain && last.T > 2.0 * first.T)) {
        d.cls = PsDiagnostics::Class::PeriodBlowup;
    }
    return d;
}

}  // namespace critorb
