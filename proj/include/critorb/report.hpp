#pragma once

#include "critorb/mane.hpp"
#include "critorb/taimanov.hpp"

namespace critorb {

struct CriticalValueReport {
    std::string model;
    double e0 = 0.0;
    ManeBracket cu_bracket;
    ManeBracket c_bracket;
    ManeBracket k0_bracket;
    double upper_cap = std::numeric_limits<double>::infinity();
    bool has_kQ = false;
    double kQ_minus = std::numeric_limits<double>::quiet_NaN();
    double kQ_value = std::numeric_limits<double>::quiet_NaN();
    TauPlusBracket tau_plus;
    std::vector<std::string> notes;

    void write_csv(std::ostream& os) const {
        os << "quantity,lo,hi,method\n" << std::setprecision(17);
        os << "e0," << e0 << "," << e0 << ",grid+refine\n";
        os << "cu," << cu_bracket.lo << "," << cu_bracket.hi << "," << cu_bracket.method
           << "\n";
        os << "c," << c_bracket.lo << "," << c_bracket.hi << "," << c_bracket.method << "\n";
        os << "k0," << k0_bracket.lo << "," << k0_bracket.hi << "," << k0_bracket.method
           << "\n";
        os << "upper_cap," << upper_cap << "," << upper_cap << ",e0+|theta|^2/(4a)\n";
        if (has_kQ) {
            os << "kQ_minus," << kQ_minus << "," << kQ_minus << ",intersection formula\n";
            os << "kQ," << kQ_value << "," << kQ_value << ",intersection formula\n";
        }
        if (tau_plus.valid)
            os << "tau_plus," << tau_plus.lo << "," << tau_plus.hi << ",film bisection\n";
    }
};

// Dual-metric sup norm of the global theta over the working region.
inline double theta_sup_norm(const LagrangianModel& m, int grid = 96) {
    if (!m.theta_global) return std::numeric_limits<double>::infinity();
    double best = 0.0;
    for (const auto& q : detail::sample_grid(m.surface, grid))
        best = std::max(best, m.theta(q).norm() / m.surface.conformal_factor(q));
    return best;
}

struct ReportOptions {
    double k_span = 1.5;            // search window above e0 when no cap exists
    double bracket_width = 0.02;
    bool with_kq = false;
    CircleSpec Q0, Q1;
    double tau_k_lo = 1e-3, tau_k_hi = 10.0;
    int tau_grid = 256;
    LoopSearchConfig search;
};

// Direct search for a negative-action Q0 -> Q1 path at energy k (the
// defining class of k0); straight connectors and hill-linger connectors.
inline bool negative_conormal_path(const LagrangianModel& m, const CircleSpec& Q0,
                                   const CircleSpec& Q1, double k, int nodes = 128) {
    if (!m.theta_global) throw UnsupportedError("k0 path search needs a global theta");
    // potential maximum as the linger target
    ChartPoint hill(0, 0);
    double vb = -1e300;
    for (const auto& q : detail::sample_grid(m.surface, 32)) {
        const double v = m.V(q);
        if (v > vb) {
            vb = v;
            hill = q;
        }
    }
    auto consider = [&](const DiscretePath& p) {
        DiscretePath q = p;
        return detail::best_over_T(m, q, k) < 0.0;
    };
    const ChartPoint a = Q0.project(m.surface, hill);
    const ChartPoint b = Q1.project(m.surface, hill);
    // straight connector
    DiscretePath straight;
    straight.surface_tag = m.surface.kind;
    straight.T = 1.0;
    straight.boundary = BoundarySpec::conormal(Q0, Q1);
    for (int i = 0; i <= nodes; ++i) {
        const double t = double(i) / nodes;
        straight.nodes.push_back(ChartPoint(a.xy + t * (b.xy - a.xy)));
    }
    if (consider(straight)) return true;
    // hill-linger connector
    const double plateau = 0.8, lead = 0.1;
    DiscretePath linger = straight;
    for (int i = 0; i <= nodes; ++i) {
        const double t = double(i) / nodes;
        Vec2 pos;
        if (t < lead)
            pos = a.xy + (t / lead) * (hill.xy - a.xy);
        else if (t > lead + plateau)
            pos = hill.xy + ((t - lead - plateau) / (1.0 - lead - plateau)) * (b.xy - hill.xy);
        else
            pos = hill.xy;
        linger.nodes[i] = ChartPoint(pos);
    }
    if (consider(linger)) return true;
    // winding connectors through the best Mane loop classes (torus only)
    if (m.surface.kind == SurfaceKind::FlatTorus) {
        for (int mw = -2; mw <= 2; ++mw)
            for (int nw = -2; nw <= 2; ++nw) {
                if (mw == 0 && nw == 0) continue;
                DiscretePath p = straight;
                for (int i = 0; i <= nodes; ++i) {
                    const double t = double(i) / nodes;
                    p.nodes[i].xy += t * Vec2(mw * m.surface.Lx, nw * m.surface.Ly);
                }
                if (consider(p)) return true;
            }
    }
    return false;
}

inline CriticalValueReport critical_value_report(const LagrangianModel& m,
                                                 ReportOptions opt = {}) {
    CriticalValueReport rep;
    rep.model = m.name;
    rep.e0 = e0(m);

    if (m.theta_global) {
        const double tn = theta_sup_norm(m);
        rep.upper_cap = rep.e0 + tn * tn / (4.0 * m.convexity_a);
    } else {
        rep.upper_cap = std::numeric_limits<double>::infinity();
        rep.notes.push_back("sigma non-exact: no bounded global primitive, cap = +inf");
    }

    const double hi0 = std::isfinite(rep.upper_cap) ? rep.upper_cap + 0.1
                                                    : rep.e0 + opt.k_span;
    const double lo0 = rep.e0 - 0.25;

    rep.cu_bracket = mane_bracket(m, lo0, hi0, ManeVariant::Contractible,
                                  opt.bracket_width, 24, opt.search);
    if (m.theta_global) {
        rep.c_bracket =
            mane_bracket(m, lo0, hi0, ManeVariant::Full, opt.bracket_width, 24, opt.search);
    } else {
        rep.c_bracket = rep.cu_bracket;
        rep.c_bracket.method += " [c proxy: contractible-restricted]";
        rep.notes.push_back("c reported as contractible-restricted proxy (sigma non-exact)");
    }

    // k0: lower side inherited from c (winding a negative loop yields a
    // negative connecting path); upper side by the direct path search when
    // circles are configured.
    rep.k0_bracket = rep.c_bracket;
    rep.k0_bracket.method = "k0-proxy: c-bracket";
    if (opt.with_kq && m.theta_global) {
        double hi = rep.c_bracket.hi;
        const double cap_hi = std::isfinite(rep.upper_cap) ? rep.upper_cap : hi + 0.5;
        for (int i = 0; i < 6; ++i) {
            if (!negative_conormal_path(m, opt.Q0, opt.Q1, hi)) break;
            hi = std::min(hi + 0.1, cap_hi + 0.05);
        }
        rep.k0_bracket.hi = std::max(hi, rep.c_bracket.hi);
        rep.k0_bracket.method = "k0-proxy: c lower side + Q0->Q1 path search upper side";
    }
    if (opt.with_kq) {
        try {
            const auto kq = kQ(m, opt.Q0, opt.Q1);
            rep.has_kQ = true;
            rep.kQ_minus = kq.first;
            rep.kQ_value = kq.second;
        } catch (const std::exception& ex) {
            rep.notes.push_back(std::string("kQ unavailable: ") + ex.what());
        }
    }

    // tau_plus only for oscillating densities on the torus
    if (m.surface.kind == SurfaceKind::FlatTorus) {
        double fmin = 1e300, fmax = -1e300;
        for (const auto& q : detail::sample_grid(m.surface, 48)) {
            const double f = m.sigma_density(q);
            fmin = std::min(fmin, f);
            fmax = std::max(fmax, f);
        }
        if (fmin < 0.0 && fmax > 0.0)
            rep.tau_plus = tau_plus_bracket(m, opt.tau_k_lo, opt.tau_k_hi, opt.tau_grid);
    }
    return rep;
}

struct ChainCheck {
    bool consistent = true;
    std::vector<std::string> lines;
};

// Bracket-aware verification of e0 <= cu <= c <= k0 <= cap: an inequality
// a <= b between bracketed quantities fails only when lo(a) > hi(b) + tol.
inline ChainCheck chain_check(const CriticalValueReport& r, double tol = 1e-9) {
    ChainCheck out;
    auto check = [&](const std::string& name, double lo_a, double hi_b) {
        const bool ok = lo_a <= hi_b + tol;
        std::ostringstream os;
        os << name << ": " << (ok ? "ok" : "VIOLATED") << " (" << lo_a << " <= " << hi_b
           << ")";
        out.lines.push_back(os.str());
        if (!ok) out.consistent = false;
    };
    check("e0 <= cu", r.e0, r.cu_bracket.hi);
    check("cu <= c", r.cu_bracket.lo, r.c_bracket.hi);
    check("c <= k0", r.c_bracket.lo, r.k0_bracket.hi);
    check("k0 <= cap", r.k0_bracket.lo, r.upper_cap);
    return out;
}

}  // namespace critorb
