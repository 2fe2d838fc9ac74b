#pragma once

#include "critorb/dynamics.hpp"

namespace critorb {

// Embedded film on an M x M torus grid: binary indicator plus the level
// function it came from (the film is {level > 0}); the level drives the
// sub-pixel boundary extraction.
struct TaimanovFilm {
    int M = 0;
    std::vector<double> level;       // node values, size M*M, periodic indexing
    std::vector<std::uint8_t> mask;  // indicator: level > 0

    double at(int i, int j) const {
        const int ii = ((i % M) + M) % M;
        const int jj = ((j % M) + M) % M;
        return level[static_cast<size_t>(jj) * M + ii];
    }

    static TaimanovFilm empty(int M) {
        TaimanovFilm f;
        f.M = M;
        f.level.assign(static_cast<size_t>(M) * M, -1.0);
        f.mask.assign(static_cast<size_t>(M) * M, 0);
        return f;
    }

    static TaimanovFilm full(int M) {
        TaimanovFilm f = empty(M);
        for (auto& v : f.level) v = 1.0;
        for (auto& v : f.mask) v = 1;
        return f;
    }

    static TaimanovFilm from_level(const SurfaceModel& s, int M,
                                   const std::function<double(const ChartPoint&)>& phi) {
        TaimanovFilm f;
        f.M = M;
        f.level.resize(static_cast<size_t>(M) * M);
        f.mask.resize(static_cast<size_t>(M) * M);
        for (int j = 0; j < M; ++j)
            for (int i = 0; i < M; ++i) {
                const ChartPoint q(i * s.Lx / M, j * s.Ly / M);
                const double v = phi(q);
                f.level[static_cast<size_t>(j) * M + i] = v;
                f.mask[static_cast<size_t>(j) * M + i] = v > 0 ? 1 : 0;
            }
        return f;
    }
};

namespace detail {

// Marching-squares boundary length of {level > 0} with linear sub-pixel
// interpolation, metric-weighted.
inline double film_boundary_length(const LagrangianModel& m, const TaimanovFilm& f) {
    const auto& s = m.surface;
    const double hx = s.Lx / f.M, hy = s.Ly / f.M;
    double total = 0.0;
    auto cut = [](double a, double b) { return a / (a - b); };  // zero of the edge
    for (int j = 0; j < f.M; ++j) {
        for (int i = 0; i < f.M; ++i) {
            const double v00 = f.at(i, j), v10 = f.at(i + 1, j);
            const double v01 = f.at(i, j + 1), v11 = f.at(i + 1, j + 1);
            int idx = (v00 > 0 ? 1 : 0) | (v10 > 0 ? 2 : 0) | (v11 > 0 ? 4 : 0) |
                      (v01 > 0 ? 8 : 0);
            if (idx == 0 || idx == 15) continue;
            // edge crossing points in cell-local coordinates
            std::vector<Vec2> pts;
            auto edge = [&](double a, double b, int which) {
                const double t = cut(a, b);
                switch (which) {
                    case 0: pts.emplace_back(t, 0.0); break;      // bottom
                    case 1: pts.emplace_back(1.0, t); break;      // right
                    case 2: pts.emplace_back(1.0 - t, 1.0); break;  // top (v11->v01)
                    case 3: pts.emplace_back(0.0, 1.0 - t); break;  // left (v01->v00)
                }
            };
            if (((idx & 1) != 0) != ((idx & 2) != 0)) edge(v00, v10, 0);
            if (((idx & 2) != 0) != ((idx & 4) != 0)) edge(v10, v11, 1);
            if (((idx & 4) != 0) != ((idx & 8) != 0)) edge(v11, v01, 2);
            if (((idx & 8) != 0) != ((idx & 1) != 0)) edge(v01, v00, 3);
            if (pts.size() < 2) continue;
            auto seg_len = [&](const Vec2& a, const Vec2& b) {
                const Vec2 pa(i * hx + a.x() * hx, j * hy + a.y() * hy);
                const Vec2 pb(i * hx + b.x() * hx, j * hy + b.y() * hy);
                const ChartPoint mid(0.5 * (pa + pb));
                return s.conformal_factor(wrap(s, mid)) * (pb - pa).norm();
            };
            if (pts.size() == 2) {
                total += seg_len(pts[0], pts[1]);
            } else {
                // ambiguous saddle cell (cases 5/10): resolve by the center value
                const double vc = 0.25 * (v00 + v10 + v01 + v11);
                const bool connect_first = (vc > 0) == ((idx & 1) != 0);
                if (connect_first) {
                    total += seg_len(pts[0], pts[3]) + seg_len(pts[1], pts[2]);
                } else {
                    total += seg_len(pts[0], pts[1]) + seg_len(pts[2], pts[3]);
                }
            }
        }
    }
    return total;
}

// sigma mass of the film: per-cell coverage fraction of the bilinear level
// interpolant (4x4 subsamples) times the density at the cell center.
inline double film_sigma_integral(const LagrangianModel& m, const TaimanovFilm& f) {
    const auto& s = m.surface;
    const double hx = s.Lx / f.M, hy = s.Ly / f.M;
    double total = 0.0;
    for (int j = 0; j < f.M; ++j) {
        for (int i = 0; i < f.M; ++i) {
            const double v00 = f.at(i, j), v10 = f.at(i + 1, j);
            const double v01 = f.at(i, j + 1), v11 = f.at(i + 1, j + 1);
            double cover;
            if (v00 > 0 && v10 > 0 && v01 > 0 && v11 > 0) {
                cover = 1.0;
            } else if (v00 <= 0 && v10 <= 0 && v01 <= 0 && v11 <= 0) {
                continue;
            } else {
                int inside = 0;
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b) {
                        const double u = (a + 0.5) / 4, w = (b + 0.5) / 4;
                        const double v = (1 - u) * (1 - w) * v00 + u * (1 - w) * v10 +
                                         (1 - u) * w * v01 + u * w * v11;
                        if (v > 0) ++inside;
                    }
                cover = inside / 16.0;
            }
            if (cover == 0.0) continue;
            const ChartPoint c(wrap(s, ChartPoint((i + 0.5) * hx, (j + 0.5) * hy)));
            total += cover * m.sigma_density(c) * sq(s.conformal_factor(c)) * hx * hy;
        }
    }
    return total;
}

}  // namespace detail

// Taimanov functional T_k(Pi) = sqrt(2k) l(boundary) + int_Pi sigma.
inline double taimanov_value(const LagrangianModel& m, const TaimanovFilm& film, double k) {
    if (m.surface.kind != SurfaceKind::FlatTorus)
        throw UnsupportedError("Taimanov films live on the torus grid");
    if (k < 0) throw PreconditionError("taimanov_value needs k >= 0");
    return std::sqrt(2.0 * k) * detail::film_boundary_length(m, film) +
           detail::film_sigma_integral(m, film);
}

// The searched film family: sub- and superlevel sets of the sigma density
// (the local-boundary-move knob is the fine threshold grid).
inline std::vector<TaimanovFilm> density_film_family(const LagrangianModel& m, int M,
                                                     int thresholds = 48) {
    std::vector<TaimanovFilm> fams;
    double fmin = 1e300, fmax = -1e300;
    for (int j = 0; j < M; ++j)
        for (int i = 0; i < M; ++i) {
            const double v =
                m.sigma_density(ChartPoint(i * m.surface.Lx / M, j * m.surface.Ly / M));
            fmin = std::min(fmin, v);
            fmax = std::max(fmax, v);
        }
    fams.push_back(TaimanovFilm::empty(M));
    fams.push_back(TaimanovFilm::full(M));
    for (int t = 0; t < thresholds; ++t) {
        const double thr = fmin + (fmax - fmin) * (t + 0.5) / thresholds;
        fams.push_back(TaimanovFilm::from_level(
            m.surface, M, [&](const ChartPoint& q) { return thr - m.sigma_density(q); }));
        fams.push_back(TaimanovFilm::from_level(
            m.surface, M, [&](const ChartPoint& q) { return m.sigma_density(q) - thr; }));
    }
    return fams;
}

inline double taimanov_inf(const LagrangianModel& m, const std::vector<TaimanovFilm>& films,
                           double k) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : films) best = std::min(best, taimanov_value(m, f, k));
    return best;
}

struct TauPlusBracket {
    double lo = 0.0;  // certified: some searched film is negative at lo
    double hi = 0.0;  // inf over the searched family is >= 0 at hi
    bool valid = false;
};

// tau_+ bracketed by the sign of the film-family infimum, bisected in k.
inline TauPlusBracket tau_plus_bracket(const LagrangianModel& m, double k_lo, double k_hi,
                                       int M = 256, int bisections = 28) {
    const auto films = density_film_family(m, M);
    TauPlusBracket br;
    if (!(taimanov_inf(m, films, k_lo) < 0.0) || !(taimanov_inf(m, films, k_hi) >= 0.0))
        return br;  // not bracketed in the given range
    br.valid = true;
    br.lo = k_lo;
    br.hi = k_hi;
    for (int i = 0; i < bisections; ++i) {
        const double mid = 0.5 * (br.lo + br.hi);
        if (taimanov_inf(m, films, mid) < 0.0)
            br.lo = mid;
        else
            br.hi = mid;
    }
    return br;
}

}  // namespace critorb
