#pragma once

#include "critorb/critical.hpp"

namespace critorb {

struct InvalidFamilyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Generic string-minimax loop: deform every member of a one-parameter family
// by one bounded descent step per round, freezing members below a quarter of
// the current minimax level (the discrete stand-in for a flow that vanishes
// on the low sublevel), family ends pinned. The minimax value is the min
// over rounds of the max over members. `System` provides:
//   std::vector<double> values(const std::vector<Member>&)
//   Member step(const Member&)
//   double period(const Member&)   - recorded alongside values
template <class Member>
struct StringMinimaxResult {
    double c_value = std::numeric_limits<double>::infinity();
    int best_round = 0;
    int argmax_index = 0;  // at the final round
    std::vector<Member> family;
    std::vector<std::vector<std::pair<double, double>>> history;  // (value, T) per round
};

template <class Member, class System>
StringMinimaxResult<Member> string_minimax(System& sys, std::vector<Member> family,
                                           int rounds, bool record_history = false) {
    if (family.size() < 3) throw InvalidFamilyError("family needs at least 3 members");
    StringMinimaxResult<Member> res;
    const int M = static_cast<int>(family.size());
    for (int r = 0; r < rounds; ++r) {
        const std::vector<double> vals = sys.values(family);
        double vmax = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < M; ++j) {
            if (vals[j] > vmax) {
                vmax = vals[j];
                res.argmax_index = j;
            }
        }
        if (record_history) {
            auto& h = res.history.emplace_back();
            h.reserve(M);
            for (int j = 0; j < M; ++j) h.emplace_back(vals[j], sys.period(family[j]));
        }
        if (vmax < 0.0)
            throw InvalidFamilyError("family degenerated: every member has negative value");
        if (vmax < res.c_value) {
            res.c_value = vmax;
            res.best_round = r;
        }
        if (r + 1 == rounds) break;
        const double freeze_level = std::max(0.0, res.c_value / 4.0);
        for (int j = 1; j + 1 < M; ++j) {
            if (vals[j] <= freeze_level) continue;
            family[j] = sys.step(family[j]);
        }
    }
    res.family = std::move(family);
    return res;
}

enum class FamilyKind { GammaConormal, SphereSweep, LoopFamily };

struct MinimaxFamily {
    FamilyKind kind = FamilyKind::GammaConormal;
    std::vector<DiscretePath> members;
    double base_value = 0.0;  // S_k at the anchor member (non-exact tracking)
};

namespace detail {

// Tracked value per member: the action for exact models; for non-exact
// models the cumulative eta line integral along the family anchored at
// S_k(member 0).
inline std::vector<double> family_values(const LagrangianModel& m,
                                         const MinimaxFamily& fam, double k) {
    const int M = static_cast<int>(fam.members.size());
    std::vector<double> vals(M);
    if (m.theta_global) {
        for (int j = 0; j < M; ++j) vals[j] = action(m, fam.members[j], k);
        return vals;
    }
    vals[0] = s_k_value(m, fam.members[0], k);
    for (int j = 0; j + 1 < M; ++j) {
        DiscretePath a = fam.members[j];
        DiscretePath b = fam.members[j + 1];
        canonicalize_chart(m.surface, a);
        // bring b into a's chart so the difference is a genuine tangent
        for (auto& nd : b.nodes) nd = to_chart(m.surface, nd, a.nodes[0].chart);
        if (a.segments() != b.segments())
            throw InvalidFamilyError("family members must share the node count");
        PathVector d = PathVector::zero(static_cast<int>(a.nodes.size()));
        for (size_t i = 0; i < a.nodes.size(); ++i) d.node[i] = b.nodes[i].xy - a.nodes[i].xy;
        d.dT = b.T - a.T;
        const PathVector ea = eta_k(m, a, k);
        const PathVector eb = eta_k(m, b, k);
        vals[j + 1] = vals[j] + 0.5 * (pairing(ea, d, a.boundary.periodic_kind()) +
                                       pairing(eb, d, b.boundary.periodic_kind()));
    }
    return vals;
}

struct PathStringSystem {
    const LagrangianModel& m;
    double k;
    FlowConfig flow;

    std::vector<double> values(const std::vector<DiscretePath>& members) const {
        MinimaxFamily f;
        f.members = members;
        return family_values(m, f, k);
    }
    double period(const DiscretePath& p) const { return p.T; }

    DiscretePath step(const DiscretePath& p) const {
        try {
            return flow_step(m, p, k, flow);
        } catch (const std::exception&) {
            return p;  // stuck members stay put rather than derailing the family
        }
    }
};

}  // namespace detail

struct MountainPassConfig {
    int rounds = 300;
    double step = 0.03;
    GradMetric metric = GradMetric::H1;
    double certify_tol = 1e-4;
    double polish_tol = 1e-7;
    bool compute_index = false;
    double cutoff_epsilon = -1.0;  // estimated once per run when < 0
};

struct MountainPassResult {
    double c_value = std::numeric_limits<double>::quiet_NaN();
    CriticalPointReport candidate;
    // per-round (value, T) pairs for every member; used by the sweep pooling
    std::vector<std::vector<std::pair<double, double>>> history;
};

inline MountainPassResult mountain_pass(const LagrangianModel& m, const MinimaxFamily& family0,
                                        double k, const MountainPassConfig& cfg = {}) {
    if (family0.members.size() < 3)
        throw InvalidFamilyError("mountain pass needs at least 3 family members");

    MinimaxFamily fam = family0;
    // class validity: the family must start in the zero valley and end below 0
    {
        const auto v = detail::family_values(m, fam, k);
        if (v.back() >= 0.0)
            throw InvalidFamilyError("family endpoint has non-negative action");
        if (v.front() < 0.0)
            throw InvalidFamilyError("family base has negative action (valleys merged)");
    }

    FlowConfig flow;
    flow.policy = StepPolicy::Fixed;
    flow.step = cfg.step;
    flow.metric = cfg.metric;
    flow.cutoff.enabled = true;
    flow.cutoff.epsilon = cfg.cutoff_epsilon;
    if (flow.cutoff.epsilon < 0 && !m.theta_global)
        flow.cutoff.epsilon = estimate_epsilon(m, k, default_vdelta(m.surface));
    if (flow.cutoff.epsilon < 0) flow.cutoff.epsilon = 1e-3;

    detail::PathStringSystem sys{m, k, flow};
    auto sm = string_minimax(sys, fam.members, cfg.rounds, true);

    MountainPassResult out;
    out.history = std::move(sm.history);
    out.c_value = sm.c_value;
    fam.members = std::move(sm.family);

    // polish + certify the argmax member of the final family
    CriticalPointReport rep;
    rep.path = fam.members[sm.argmax_index];
    rep.homotopy = homotopy_class(m.surface, rep.path);
    auto pol = newton_polish(m, rep.path, k, cfg.polish_tol);
    rep.path = std::move(pol.path);
    rep.eta_norm = pol.eta_norm;
    try {
        rep.certificate = certify_orbit(m, rep.path, k);
    } catch (const std::exception& ex) {
        rep.reason = std::string("certification failed: ") + ex.what();
    }
    const bool conormal_ok = rep.path.boundary.periodic_kind() ||
                             (rep.certificate.conormal_residual_0 < cfg.certify_tol &&
                              rep.certificate.conormal_residual_1 < cfg.certify_tol);
    if (rep.eta_norm < cfg.certify_tol && !rep.certificate.clipped &&
        rep.certificate.closure_residual < cfg.certify_tol && conormal_ok) {
        rep.status = OrbitStatus::Orbit;
    } else {
        rep.status = OrbitStatus::NotConverged;
    }
    try {
        rep.value = m.theta_global ? action(m, rep.path, k)
                                   : detail::family_values(m, fam, k)[sm.argmax_index];
    } catch (const std::exception&) {
    }
    if (cfg.compute_index && rep.is_orbit()) {
        try {
            rep.hessian_negative_count = hessian_index(m, rep.path, k, 10 * cfg.certify_tol);
        } catch (const std::exception&) {
        }
    }
    out.candidate = std::move(rep);
    return out;
}

// ---------------------------------------------------------------------------
// family builders
// ---------------------------------------------------------------------------

// Gamma-class family for a conormal problem: interpolates from the constant
// path at the intersection point toward a negative-action path that lingers
// at the potential maximum q_hill.
inline MinimaxFamily gamma_family_conormal(const LagrangianModel& m, const CircleSpec& Q0,
                                           const CircleSpec& Q1, const ChartPoint& p_int,
                                           const ChartPoint& q_hill, double k, int members,
                                           int nodes) {
    if (members < 3 || nodes < 16) throw PreconditionError("family too small");
    const double plateau = 0.85;  // fraction of parameter spent at the hill
    // base route: Q0-foot -> hill -> Q1-foot, feet chosen as projections
    const ChartPoint a = Q0.project(m.surface, q_hill);
    const ChartPoint b = Q1.project(m.surface, q_hill);
    auto base = [&](double t) -> Vec2 {
        const double lead = 0.5 * (1.0 - plateau);
        if (t < lead) return a.xy + (t / lead) * (q_hill.xy - a.xy);
        if (t > 1.0 - lead) return q_hill.xy + ((t - (1.0 - lead)) / lead) * (b.xy - q_hill.xy);
        return q_hill.xy;
    };
    const double T0 = 0.01;
    double T_end = 4.0;
    MinimaxFamily fam;
    fam.kind = FamilyKind::GammaConormal;
    auto build = [&](double Tend) {
        fam.members.clear();
        for (int j = 0; j < members; ++j) {
            const double xi = double(j) / (members - 1);
            DiscretePath p;
            p.surface_tag = m.surface.kind;
            p.boundary = BoundarySpec::conormal(Q0, Q1);
            p.T = (1.0 - xi) * T0 + xi * Tend;
            p.nodes.resize(nodes + 1);
            for (int i = 0; i <= nodes; ++i) {
                const double t = double(i) / nodes;
                p.nodes[i] = ChartPoint((1.0 - xi) * p_int.xy + xi * base(t));
            }
            fam.members.push_back(std::move(p));
        }
    };
    for (int attempt = 0; attempt < 5; ++attempt, T_end *= 2.0) {
        build(T_end);
        if (action(m, fam.members.back(), k) < 0.0) return fam;
    }
    throw InvalidFamilyError("could not reach the negative-action valley");
}

// Latitude sweep on S^2: a B^1-family of azimuthal circles from one pole to
// the other (constant loops at the ends, fixed small T0), traversed in the
// magnetic (clockwise-in-chart) direction.
inline MinimaxFamily sphere_latitude_family(const LagrangianModel& m, double k, int members,
                                            int nodes, double T0 = 0.05) {
    if (m.surface.kind != SurfaceKind::RoundSphere)
        throw PreconditionError("latitude family needs the sphere");
    const double T_guess = 2 * M_PI / std::sqrt(1.0 + 2.0 * k);
    MinimaxFamily fam;
    fam.kind = FamilyKind::SphereSweep;
    for (int j = 0; j < members; ++j) {
        const double xi = double(j) / (members - 1);
        const double rho = M_PI * xi;  // polar angle from the chart-0 pole
        const double chart_r = std::tan(0.5 * std::min(rho, M_PI - 1e-9));
        DiscretePath p;
        p.surface_tag = m.surface.kind;
        p.boundary = BoundarySpec::periodic();
        p.T = T0 + std::sin(M_PI * xi) * std::max(0.0, T_guess - T0);
        p.nodes.resize(nodes + 1);
        for (int i = 0; i <= nodes; ++i) {
            const double ang = -2 * M_PI * i / nodes;  // clockwise in chart 0
            ChartPoint q(chart_r * std::cos(ang), chart_r * std::sin(ang), 0);
            if (chart_r > 1.0) q = sphere_transition(q);
            p.nodes[i] = q;
        }
        canonicalize_chart(m.surface, p);
        fam.members.push_back(std::move(p));
    }
    return fam;
}

// ---------------------------------------------------------------------------
// k-sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    double k = 0.0;
    double c = std::numeric_limits<double>::quiet_NaN();
    double T_orbit = std::numeric_limits<double>::quiet_NaN();
    double slope = std::numeric_limits<double>::quiet_NaN();  // Struwe period proxy
    std::string status = "ok";
    int hessian_index = -1;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    bool monotone = true;
    double max_violation = 0.0;

    void write_csv(std::ostream& os) const {
        os << "k,c,T,slope,status\n";
        for (const auto& r : rows)
            os << std::setprecision(17) << r.k << "," << r.c << "," << r.T_orbit << ","
               << r.slope << "," << r.status << "\n";
    }
};

// Runs mountain_pass on each grid point, then reports c(k) as the pooled
// min over all histories run at k' >= k, re-evaluated at k through the exact
// affine dependence value(k) = value(k') + (k - k') T. Every pooled family
// is admissible for the smaller k, so the report stays an honest Gamma-class
// bound and is monotone by construction (Lemma-style, not cosmetics).
inline SweepResult minimax_sweep(const LagrangianModel& m,
                                 const std::function<MinimaxFamily(double)>& family_builder,
                                 const std::vector<double>& k_grid,
                                 MountainPassConfig cfg = {}) {
    for (size_t i = 1; i < k_grid.size(); ++i)
        if (!(k_grid[i] > k_grid[i - 1]))
            throw PreconditionError("k_grid must be strictly increasing");

    struct RunData {
        double k;
        bool ok = false;
        MountainPassResult mp;
    };
    std::vector<RunData> runs;
    runs.reserve(k_grid.size());
    for (const double k : k_grid) {
        RunData rd;
        rd.k = k;
        try {
            MinimaxFamily fam = family_builder(k);
            rd.mp = mountain_pass(m, fam, k, cfg);
            rd.ok = true;
        } catch (const InvalidFamilyError&) {
            rd.ok = false;
        }
        runs.push_back(std::move(rd));
    }

    SweepResult out;
    for (size_t i = 0; i < k_grid.size(); ++i) {
        SweepRow row;
        row.k = k_grid[i];
        if (!runs[i].ok) {
            row.status = "invalid-family";
            out.rows.push_back(row);
            continue;
        }
        double c = std::numeric_limits<double>::infinity();
        for (size_t j = i; j < k_grid.size(); ++j) {
            if (!runs[j].ok) continue;
            for (const auto& round : runs[j].mp.history) {
                double vmax = -std::numeric_limits<double>::infinity();
                for (const auto& [v, T] : round)
                    vmax = std::max(vmax, v + (k_grid[i] - k_grid[j]) * T);
                c = std::min(c, vmax);
            }
        }
        row.c = c;
        row.T_orbit = runs[i].mp.candidate.path.T;
        row.hessian_index = runs[i].mp.candidate.hessian_negative_count;
        row.status = runs[i].mp.candidate.is_orbit() ? "ok" : "uncertified";
        out.rows.push_back(row);
    }
    for (size_t i = 0; i + 1 < out.rows.size(); ++i) {
        if (std::isnan(out.rows[i].c) || std::isnan(out.rows[i + 1].c)) continue;
        const double slope = (out.rows[i + 1].c - out.rows[i].c) /
                             (out.rows[i + 1].k - out.rows[i].k);
        out.rows[i].slope = slope;
        const double viol = out.rows[i].c - out.rows[i + 1].c;
        out.max_violation = std::max(out.max_violation, viol);
        if (viol > 1e-6) out.monotone = false;
    }
    return out;
}

}  // namespace critorb
