#pragma once

#include "critorb/critical.hpp"
#include "critorb/families.hpp"

namespace critorb {

namespace detail {

inline std::vector<ChartPoint> sample_grid(const SurfaceModel& s, int n) {
    std::vector<ChartPoint> pts;
    switch (s.kind) {
        case SurfaceKind::FlatTorus:
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    pts.emplace_back((i + 0.5) / n * s.Lx, (j + 0.5) / n * s.Ly);
            break;
        case SurfaceKind::HyperbolicHalfPlane:
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double y =
                        s.box.ymin * std::pow(s.box.ymax / s.box.ymin, (j + 0.5) / n);
                    pts.emplace_back(s.box.xmin + (i + 0.5) / n * (s.box.xmax - s.box.xmin),
                                     y);
                }
            break;
        case SurfaceKind::RoundSphere:
            for (int c = 0; c < 2; ++c)
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) {
                        const ChartPoint q(-1.0 + (2.0 * i + 1) / n, -1.0 + (2.0 * j + 1) / n,
                                           static_cast<std::int8_t>(c));
                        if (q.xy.norm() <= 1.0) pts.push_back(q);
                    }
            break;
    }
    return pts;
}

// Local refinement of max f by coordinate-wise golden section.
template <class F>
double refine_max(const F& f, ChartPoint q, double radius, int rounds = 40) {
    double best = f(q);
    for (int r = 0; r < rounds; ++r) {
        bool improved = false;
        for (int d = 0; d < 2; ++d) {
            for (double sgn : {-1.0, 1.0}) {
                ChartPoint cand = q;
                cand.xy[d] += sgn * radius;
                const double v = f(cand);
                if (v > best) {
                    best = v;
                    q = cand;
                    improved = true;
                }
            }
        }
        if (!improved) radius *= 0.5;
        if (radius < 1e-12) break;
    }
    return best;
}

}  // namespace detail

// e0(L) = max_q E(q, 0): grid sampling plus local refinement. For
// electromagnetic models this is the maximum of the potential.
inline double e0(const LagrangianModel& m, int grid = 64) {
    auto f = [&](const ChartPoint& q) -> double {
        if (!m.surface.admissible(q)) return -std::numeric_limits<double>::infinity();
        return energy(m, q, Vec2::Zero());
    };
    double best = -std::numeric_limits<double>::infinity();
    ChartPoint argbest;
    for (const auto& q : detail::sample_grid(m.surface, grid)) {
        const double v = f(q);
        if (v > best) {
            best = v;
            argbest = q;
        }
    }
    const double cell = (m.surface.kind == SurfaceKind::FlatTorus)
                            ? std::max(m.surface.Lx, m.surface.Ly) / grid
                            : 2.0 / grid;
    return detail::refine_max(f, argbest, cell);
}

// Numerically intersect two circle submanifolds by dense sampling of Q0 and
// projection onto Q1, de-duplicated, refined by bisection on the distance.
inline std::vector<ChartPoint> intersection_points(const SurfaceModel& s, const CircleSpec& Q0,
                                                   const CircleSpec& Q1, int samples = 4096,
                                                   double tol = 1e-10) {
    std::vector<ChartPoint> out;
    auto push_unique = [&](const ChartPoint& p) {
        for (const auto& q : out)
            if (chart_difference(s, q, p).norm() < 1e-6) return;
        out.push_back(p);
    };
    if (Q0.kind == CircleSpec::Kind::Point) {
        if (Q1.chart_distance(s, Q0.center) < 1e-9) push_unique(Q0.center);
        return out;
    }
    auto dist = [&](double t) { return Q1.chart_distance(s, Q0.at(t, s)); };
    double prev = dist(0.0);
    for (int i = 1; i <= samples; ++i) {
        const double t = double(i) / samples;
        const double d = dist(t);
        if (d < 1e-12) {
            push_unique(Q0.at(t, s));
        } else if (prev > 0 && d > 0) {
            // local minimum bracket: refine by golden section
            if (i >= 2) {
                const double dm = dist((i - 1.0) / samples);
                const double dp = d;
                const double dmm = dist((i - 2.0) / samples);
                if (dm <= dmm && dm <= dp && dm < 0.05) {
                    double lo = (i - 2.0) / samples, hi = double(i) / samples;
                    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
                    double c = hi - gr * (hi - lo), dd = lo + gr * (hi - lo);
                    for (int it = 0; it < 80; ++it) {
                        if (dist(c) < dist(dd)) hi = dd; else lo = c;
                        c = hi - gr * (hi - lo);
                        dd = lo + gr * (hi - lo);
                    }
                    const double tm = 0.5 * (lo + hi);
                    if (dist(tm) < tol) push_unique(Q0.at(tm, s));
                }
            }
        }
        prev = d;
    }
    // degenerate axis-aligned overlaps (identical circles) are handled by
    // the dense-sample branch above
    return out;
}

// k_{Q0 cap Q1} and its lower variant per the convexity constant a:
//   k^-   = min_{q in I} E(q,0) + max_{q in I} |theta_q|^2 / (4a)
//   k     = max_{q in I} E(q,0) + max_{q in I} |theta_q|^2 / (4a)
// with theta_q = d_v L(q, 0) and I = Q0 cap Q1.
inline std::pair<double, double> kQ(const LagrangianModel& m, const CircleSpec& Q0,
                                    const CircleSpec& Q1) {
    const auto pts = intersection_points(m.surface, Q0, Q1);
    if (pts.empty()) throw PreconditionError("Q0 and Q1 do not intersect");
    double emin = std::numeric_limits<double>::infinity();
    double emax = -std::numeric_limits<double>::infinity();
    double th2 = 0.0;
    for (const auto& q : pts) {
        const double e = energy(m, q, Vec2::Zero());
        emin = std::min(emin, e);
        emax = std::max(emax, e);
        // dual-metric norm of the covector theta_q
        const Vec2 th = fiber_derivative(m, q, Vec2::Zero());
        const double n = th.norm() / m.surface.conformal_factor(q);
        th2 = std::max(th2, n * n);
    }
    const double shift = th2 / (4.0 * m.convexity_a);
    return {emin + shift, emax + shift};
}

// -------------------------------------------------------------------------
// Lower-bound loop search: seeded families minimized over their parameters,
// optionally polished by a short descent. Finding a negative-action loop at
// energy k certifies k < c.
// -------------------------------------------------------------------------

enum class ManeVariant { Full, Contractible, NullHomologous };

struct LoopSearchConfig {
    int nodes = 256;
    int descent_iters = 60;     // short polish of the best seed
    double descent_step = 0.2;
    int radius_samples = 24;
    ManeVariant variant = ManeVariant::Contractible;
    double hyperbolic_r_max = 5.8;
};

namespace detail {

// Evaluates the loop value used by the Mane search: the theta-augmented
// action for exact models, the lift action S_k for contractible loops of
// non-exact models. Non-contractible loops of non-exact models are skipped
// (no well-defined action).
inline std::optional<double> loop_value(const LagrangianModel& m, const DiscretePath& p,
                                        double k) {
    if (m.theta_global) return action(m, p, k);
    if (contractible_loop(m.surface, p)) return s_k_value(m, p, k);
    return std::nullopt;
}

// Best over free time: evaluate the loop at a few T values around the
// kinetic optimum T* = sqrt(e / 2(k - V)); constant loops get a fixed grid.
inline double best_over_T(const LagrangianModel& m, DiscretePath p, double k,
                          double* best_T = nullptr) {
    const double e = kinetic(m.surface, p);
    std::vector<double> times;
    if (e < 1e-12) {
        times = {0.5, 1.0, 2.0, 4.0, 8.0};
    } else {
        const double denom = std::max(1e-9, k - m.V(p.nodes[0]));
        const double t_star = std::sqrt(e / (2.0 * denom));
        for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) times.push_back(t_star * f);
    }
    double best = std::numeric_limits<double>::infinity();
    for (double t : times) {
        p.T = t;
        if (const auto v = loop_value(m, p, k)) {
            if (*v < best) {
                best = *v;
                if (best_T) *best_T = p.T;
            }
        }
    }
    return best;
}

}  // namespace detail

struct LoopSearchOutcome {
    bool negative_found = false;
    double best_value = std::numeric_limits<double>::infinity();
    DiscretePath best_loop;
};

// Seeded search for loops with negative (L+k)-action. Seeds: constant/small
// loops at potential maxima, sigma-extremal circles of both orientations,
// lattice geodesics (exact torus models), the thesis's gamma_r family
// (hyperbolic) and path a (psi-cutoff torus).
inline LoopSearchOutcome mane_lower_search(const LagrangianModel& m, double k,
                                           const LoopSearchConfig& cfg) {
    LoopSearchOutcome out;
    auto consider = [&](const DiscretePath& p) {
        double bt = p.T;
        DiscretePath q = p;
        const double v = detail::best_over_T(m, q, k, &bt);
        if (v < out.best_value) {
            out.best_value = v;
            q.T = bt;
            out.best_loop = q;
        }
    };

    const auto& s = m.surface;
    if (s.kind == SurfaceKind::HyperbolicHalfPlane) {
        for (int i = 0; i < cfg.radius_samples; ++i) {
            const double r = 0.4 + (cfg.hyperbolic_r_max - 0.4) * i / (cfg.radius_samples - 1);
            // larger circles carry a big action cancellation; refine the grid
            const int n = std::max(cfg.nodes, 128 * static_cast<int>(std::ceil(r)));
            for (bool cw : {true, false}) {
                try {
                    consider(hyperbolic_circle_loop(s, 0.0, 1.0, r, n,
                                                    2 * M_PI * std::sinh(r), cw));
                } catch (const DomainError&) {
                }
            }
        }
    } else if (s.kind == SurfaceKind::FlatTorus) {
        if (m.theta_global && cfg.variant == ManeVariant::Full) {
            for (int mw = -2; mw <= 2; ++mw)
                for (int nw = -2; nw <= 2; ++nw) {
                    if (mw == 0 && nw == 0) continue;
                    for (double y0 : {0.125, 0.375, 0.5, 0.625, 0.875})
                        consider(lattice_loop(s, mw, nw, ChartPoint(0.0, y0), cfg.nodes, 1.0));
                }
        }
        // sigma-extremal and potential-extremal circles (contractible)
        auto fval = [&](const ChartPoint& q) { return m.sigma_density(q); };
        ChartPoint best_pos(0.25, 0.25), best_neg(0.75, 0.75), best_v(0, 0);
        double fp = -1e300, fn = 1e300, vb = -1e300;
        for (const auto& q : detail::sample_grid(s, 32)) {
            const double f = fval(q);
            if (f > fp) fp = f, best_pos = q;
            if (f < fn) fn = f, best_neg = q;
            const double v = m.V(q);
            if (v > vb) vb = v, best_v = q;
        }
        const double rho_max = 0.45 * std::min(s.Lx, s.Ly);
        for (const ChartPoint& c : {best_pos, best_neg, best_v}) {
            for (int i = 1; i <= cfg.radius_samples; ++i) {
                const double rho = rho_max * i / cfg.radius_samples;
                for (bool cw : {true, false})
                    consider(circle_loop(s, c, rho, cfg.nodes, 1.0, cw));
            }
            consider(constant_loop(s, c, cfg.nodes, 1.0));
        }
    } else {
        // sphere: chart circles around the density extrema (small caps)
        for (std::int8_t chart : {std::int8_t(0), std::int8_t(1)}) {
            for (int i = 1; i <= cfg.radius_samples; ++i) {
                const double rho = 0.95 * i / cfg.radius_samples;
                for (bool cw : {true, false})
                    consider(circle_loop(s, ChartPoint(0, 0, chart), rho, cfg.nodes, 1.0, cw));
            }
        }
    }

    if (!std::isfinite(out.best_value)) return out;

    // short descent polish from the best seed (already negative seeds skip it)
    if (out.best_value >= 0.0 && cfg.descent_iters > 0) {
        FlowConfig fc;
        fc.max_iters = cfg.descent_iters;
        fc.step = cfg.descent_step;
        fc.tol = 1e-10;
        fc.cutoff.enabled = false;
        try {
            auto fr = flow_until(m, out.best_loop, k, fc);
            if (const auto v = detail::loop_value(m, fr.path, k)) {
                if (*v < out.best_value) {
                    out.best_value = *v;
                    out.best_loop = fr.path;
                }
            }
        } catch (const std::exception&) {
        }
    }
    out.negative_found = out.best_value < 0.0;
    return out;
}

inline bool mane_lower(const LagrangianModel& m, double k, const LoopSearchConfig& cfg = {}) {
    return mane_lower_search(m, k, cfg).negative_found;
}

struct ManeBracket {
    double lo = 0.0;  // certified: a negative-action loop exists at lo
    double hi = 0.0;  // heuristic: no negative loop found within the budget
    bool lo_certified = false;
    std::string method;

    double width() const { return hi - lo; }
    bool contains(double v) const { return lo <= v && v <= hi; }
};

// Bisection bracket for the Mane critical value (variant-restricted loop
// classes). The lower side is certified by an exhibited negative loop; the
// upper side is heuristic (search-budget-limited), as no numerical search
// can certify the absence of negative loops.
inline ManeBracket mane_bracket(const LagrangianModel& m, double k_lo, double k_hi,
                                ManeVariant variant = ManeVariant::Contractible,
                                double width_target = 0.02, int max_bisections = 24,
                                LoopSearchConfig cfg = {}) {
    if (!(k_lo < k_hi)) throw PreconditionError("mane_bracket needs k_lo < k_hi");
    cfg.variant = variant;
    ManeBracket br;
    br.method = m.theta_global ? "seeded loop search"
                               : "seeded loop search (contractible lift proxy)";
    // widen downward until a negative loop exists at k_lo
    int guard = 0;
    while (!mane_lower(m, k_lo, cfg)) {
        k_lo -= std::max(k_hi - k_lo, 0.1);
        if (++guard > 8) {
            // give up on certifying the lower side; degenerate bracket
            br.lo = k_lo;
            br.hi = k_hi;
            br.lo_certified = false;
            return br;
        }
    }
    // make sure the top is above c within budget
    guard = 0;
    while (mane_lower(m, k_hi, cfg) && ++guard <= 8) k_hi += std::max(k_hi - k_lo, 0.1);

    br.lo = k_lo;
    br.hi = k_hi;
    br.lo_certified = true;
    for (int it = 0; it < max_bisections && br.width() > width_target; ++it) {
        const double mid = 0.5 * (br.lo + br.hi);
        if (mane_lower(m, mid, cfg)) {
            br.lo = mid;
        } else {
            br.hi = mid;
        }
    }
    return br;
}

// -------------------------------------------------------------------------
// Hamiltonian upper bound: c <= inf_u sup_q [ 1/2 |d_q u - theta_q|^2 + V ].
// Minimized over a finite basis with a log-sum-exp smoothed sup and
// decreasing temperature; any trial u yields a rigorous bound through the
// final hard sup on a fine grid.
// -------------------------------------------------------------------------

struct PotentialBasis {
    // gradient fields of the basis functions (the functions themselves are
    // irrelevant: only d_q u enters)
    std::vector<CovectorField> gradients;
    std::vector<double> coefficients;  // seed
};

// Fourier/linear basis on the torus lift: gradients of x, y, and the first
// Fourier modes in each coordinate.
inline PotentialBasis torus_lift_basis(const SurfaceModel& s, int order = 2) {
    PotentialBasis b;
    b.gradients.push_back([](const ChartPoint&) { return Vec2(1.0, 0.0); });
    b.gradients.push_back([](const ChartPoint&) { return Vec2(0.0, 1.0); });
    for (int n = 1; n <= order; ++n) {
        const double wx = 2 * M_PI * n / s.Lx;
        const double wy = 2 * M_PI * n / s.Ly;
        b.gradients.push_back(
            [wx](const ChartPoint& q) { return Vec2(wx * std::cos(wx * q.x()), 0.0); });
        b.gradients.push_back(
            [wx](const ChartPoint& q) { return Vec2(-wx * std::sin(wx * q.x()), 0.0); });
        b.gradients.push_back(
            [wy](const ChartPoint& q) { return Vec2(0.0, wy * std::cos(wy * q.y())); });
        b.gradients.push_back(
            [wy](const ChartPoint& q) { return Vec2(0.0, -wy * std::sin(wy * q.y())); });
    }
    b.coefficients.assign(b.gradients.size(), 0.0);
    return b;
}

// Box-supported bump gradients for the hyperbolic working region.
inline PotentialBasis hyperbolic_bump_basis(const SurfaceModel& s, int nx = 3, int ny = 3) {
    PotentialBasis b;
    const auto& box = s.box;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const double cx = box.xmin + (i + 0.5) / nx * (box.xmax - box.xmin);
            const double cy = box.ymin * std::pow(box.ymax / box.ymin, (j + 0.5) / ny);
            const double sx = (box.xmax - box.xmin) / nx;
            const double sy = cy;  // metric-adapted width
            b.gradients.push_back([cx, cy, sx, sy](const ChartPoint& q) {
                const double u = (q.x() - cx) / sx, v = (q.y() - cy) / sy;
                const double g = std::exp(-0.5 * (u * u + v * v));
                return Vec2(-u / sx * g, -v / sy * g);
            });
        }
    b.coefficients.assign(b.gradients.size(), 0.0);
    return b;
}

struct ManeUpperResult {
    double bound = std::numeric_limits<double>::infinity();  // hard sup, rigorous
    std::vector<double> coefficients;
};

inline ManeUpperResult mane_upper(const LagrangianModel& m, PotentialBasis basis,
                                  int grid = 128, int anneal_rounds = 6,
                                  int iters_per_round = 120) {
    if (!m.theta_global)
        throw UnsupportedError("mane_upper needs a global (lift) primitive theta");
    const auto pts = detail::sample_grid(m.surface, grid / 2);
    auto hval = [&](const ChartPoint& q, const std::vector<double>& c) {
        if (!m.surface.admissible(q)) return -std::numeric_limits<double>::infinity();
        Vec2 du = Vec2::Zero();
        for (size_t i = 0; i < basis.gradients.size(); ++i)
            du += c[i] * basis.gradients[i](q);
        const Vec2 diff = du - m.theta(q);
        const double lam = m.surface.conformal_factor(q);
        return 0.5 * diff.squaredNorm() / (lam * lam) + m.V(q);
    };

    std::vector<double> c = basis.coefficients;
    const int n = static_cast<int>(c.size());
    double temperature = 1.0;
    for (int round = 0; round < anneal_rounds; ++round, temperature *= 0.3) {
        // smoothed objective: T log sum exp(h/T); gradient by FD in coefficients
        auto lse = [&](const std::vector<double>& cc) {
            double mx = -1e300;
            for (const auto& q : pts) mx = std::max(mx, hval(q, cc));
            double acc = 0.0;
            for (const auto& q : pts) acc += std::exp((hval(q, cc) - mx) / temperature);
            return mx + temperature * std::log(acc);
        };
        double step = 0.25 * std::pow(0.5, round);
        double cur = lse(c);
        for (int it = 0; it < iters_per_round; ++it) {
            std::vector<double> g(n);
            const double h = 1e-4;
            for (int i = 0; i < n; ++i) {
                auto cp = c, cm = c;
                cp[i] += h;
                cm[i] -= h;
                g[i] = (lse(cp) - lse(cm)) / (2 * h);
            }
            double gn = 0;
            for (double v : g) gn += v * v;
            gn = std::sqrt(gn);
            if (gn < 1e-10) break;
            auto cand = c;
            for (int i = 0; i < n; ++i) cand[i] -= step * g[i] / gn;
            const double cv = lse(cand);
            if (cv < cur) {
                c = cand;
                cur = cv;
                step *= 1.2;
            } else {
                step *= 0.5;
                if (step < 1e-10) break;
            }
        }
    }

    // rigorous bound: hard sup on a finer grid with local refinement; the
    // optimizer can only help, so keep the seed if it beats the final point
    ManeUpperResult res;
    const auto fine = detail::sample_grid(m.surface, grid);
    auto hard_sup = [&](const std::vector<double>& cc) {
        double sup = -1e300;
        ChartPoint arg;
        for (const auto& q : fine) {
            const double v = hval(q, cc);
            if (v > sup) {
                sup = v;
                arg = q;
            }
        }
        const double cell = (m.surface.kind == SurfaceKind::FlatTorus)
                                ? std::max(m.surface.Lx, m.surface.Ly) / grid
                                : 2.0 / grid;
        return detail::refine_max([&](const ChartPoint& q) { return hval(q, cc); }, arg,
                                  cell);
    };
    const double opt_bound = hard_sup(c);
    const double seed_bound = hard_sup(basis.coefficients);
    if (seed_bound <= opt_bound) {
        res.bound = seed_bound;
        res.coefficients = basis.coefficients;
    } else {
        res.bound = opt_bound;
        res.coefficients = c;
    }
    return res;
}

}  // namespace critorb
