#pragma once

#include "critorb/surface.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace critorb {

// One-dimensional submanifold used as a conormal boundary. Point degenerates
// the circle to a fixed endpoint (tangent space {0}).
struct CircleSpec {
    enum class Kind { LatticeHorizontal, LatticeVertical, Round, Point } kind = Kind::Point;
    ChartPoint center{};   // Round: center; Point: the point
    double level = 0.0;    // LatticeHorizontal: y = level; LatticeVertical: x = level
    double radius = 0.0;   // Round (chart/Euclidean radius)

    static CircleSpec horizontal(double y) {
        CircleSpec c;
        c.kind = Kind::LatticeHorizontal;
        c.level = y;
        return c;
    }
    static CircleSpec vertical(double x) {
        CircleSpec c;
        c.kind = Kind::LatticeVertical;
        c.level = x;
        return c;
    }
    static CircleSpec round(const ChartPoint& center, double r) {
        CircleSpec c;
        c.kind = Kind::Round;
        c.center = center;
        c.radius = r;
        return c;
    }
    static CircleSpec point(const ChartPoint& p) {
        CircleSpec c;
        c.kind = Kind::Point;
        c.center = p;
        return c;
    }

    ChartPoint at(double t, const SurfaceModel& s) const {
        switch (kind) {
            case Kind::LatticeHorizontal:
                return ChartPoint(t * s.Lx, level);
            case Kind::LatticeVertical:
                return ChartPoint(level, t * s.Ly);
            case Kind::Round:
                return ChartPoint(center.xy + radius * Vec2(std::cos(2 * M_PI * t),
                                                            std::sin(2 * M_PI * t)),
                                  center.chart);
            case Kind::Point:
                return center;
        }
        return center;
    }

    // Chart tangent direction at a point of the circle (not normalized);
    // zero for Point.
    Vec2 tangent_at(const ChartPoint& q) const {
        switch (kind) {
            case Kind::LatticeHorizontal:
                return Vec2(1.0, 0.0);
            case Kind::LatticeVertical:
                return Vec2(0.0, 1.0);
            case Kind::Round: {
                Vec2 r = q.xy - center.xy;
                return Vec2(-r.y(), r.x());
            }
            case Kind::Point:
                return Vec2::Zero();
        }
        return Vec2::Zero();
    }

    // Chart-coordinate distance from q to the circle (torus-wrapped where
    // appropriate).
    double chart_distance(const SurfaceModel& s, const ChartPoint& q) const {
        switch (kind) {
            case Kind::LatticeHorizontal: {
                double d = q.y() - level;
                if (s.kind == SurfaceKind::FlatTorus) d -= std::round(d / s.Ly) * s.Ly;
                return std::abs(d);
            }
            case Kind::LatticeVertical: {
                double d = q.x() - level;
                if (s.kind == SurfaceKind::FlatTorus) d -= std::round(d / s.Lx) * s.Lx;
                return std::abs(d);
            }
            case Kind::Round:
                return std::abs(chart_difference(s, center, q).norm() - radius);
            case Kind::Point:
                return chart_difference(s, center, q).norm();
        }
        return 0.0;
    }

    // Closest point on the circle (same chart conventions).
    ChartPoint project(const SurfaceModel& s, const ChartPoint& q) const {
        switch (kind) {
            case Kind::LatticeHorizontal: {
                double d = q.y() - level;
                if (s.kind == SurfaceKind::FlatTorus) d -= std::round(d / s.Ly) * s.Ly;
                return ChartPoint(q.x(), q.y() - d, q.chart);
            }
            case Kind::LatticeVertical: {
                double d = q.x() - level;
                if (s.kind == SurfaceKind::FlatTorus) d -= std::round(d / s.Lx) * s.Lx;
                return ChartPoint(q.x() - d, q.y(), q.chart);
            }
            case Kind::Round: {
                Vec2 r = chart_difference(s, center, q);
                double n = r.norm();
                if (n < 1e-300) r = Vec2(radius, 0.0), n = radius;
                return ChartPoint(q.xy + (radius / n - 1.0) * r, q.chart);
            }
            case Kind::Point: {
                Vec2 r = chart_difference(s, center, q);
                return ChartPoint(q.xy - r, q.chart);
            }
        }
        return q;
    }
};

struct BoundarySpec {
    enum class Kind { Periodic, Conormal } kind = Kind::Periodic;
    CircleSpec Q0, Q1;
    // Lattice generators of <H0, H1> for the torus winding quotient.
    std::vector<Eigen::Vector2i> subgroup;

    static BoundarySpec periodic() { return {}; }
    static BoundarySpec conormal(const CircleSpec& q0, const CircleSpec& q1,
                                 std::vector<Eigen::Vector2i> sub = {}) {
        BoundarySpec b;
        b.kind = Kind::Conormal;
        b.Q0 = q0;
        b.Q1 = q1;
        if (sub.empty()) {
            auto gen_of = [](const CircleSpec& c) -> std::optional<Eigen::Vector2i> {
                if (c.kind == CircleSpec::Kind::LatticeHorizontal) return Eigen::Vector2i(1, 0);
                if (c.kind == CircleSpec::Kind::LatticeVertical) return Eigen::Vector2i(0, 1);
                return std::nullopt;  // Round/Point circles are contractible
            };
            if (auto g = gen_of(q0)) sub.push_back(*g);
            if (auto g = gen_of(q1)) sub.push_back(*g);
        }
        b.subgroup = sub;
        return b;
    }

    bool periodic_kind() const { return kind == Kind::Periodic; }
};

// Discretized path: N+1 nodes in chart coordinates plus the duration T.
// Torus nodes are stored on the R^2 lift (node 0 in the fundamental domain,
// successors continued by nearest representative); a periodic path in class
// (m,n) therefore ends at node0 + (m Lx, n Ly).
struct DiscretePath {
    std::vector<ChartPoint> nodes;  // size N+1
    double T = 1.0;
    BoundarySpec boundary;
    SurfaceKind surface_tag = SurfaceKind::FlatTorus;

    int segments() const { return static_cast<int>(nodes.size()) - 1; }

    void validate() const {
        if (T <= 0.0) throw PreconditionError("path duration T must be positive");
        if (nodes.size() < 2) throw PreconditionError("path needs at least two nodes");
    }
};

// Re-lift torus nodes so consecutive gaps are nearest representatives and
// node 0 sits in the fundamental domain. Throws ResolutionError when a raw
// gap is half a lattice vector or more.
inline void canonicalize_lift(const SurfaceModel& s, DiscretePath& p) {
    if (s.kind != SurfaceKind::FlatTorus) return;
    ChartPoint prev_raw = p.nodes[0];
    p.nodes[0] = wrap(s, p.nodes[0]);
    for (size_t i = 1; i < p.nodes.size(); ++i) {
        Vec2 gap = p.nodes[i].xy - prev_raw.xy;
        prev_raw = p.nodes[i];
        Vec2 d = gap;
        d.x() -= std::round(d.x() / s.Lx) * s.Lx;
        d.y() -= std::round(d.y() / s.Ly) * s.Ly;
        if (std::abs(d.x()) >= 0.5 * s.Lx - 1e-12 || std::abs(d.y()) >= 0.5 * s.Ly - 1e-12)
            throw ResolutionError("node gap too large to lift unambiguously");
        p.nodes[i] = ChartPoint(p.nodes[i - 1].xy + d, p.nodes[i].chart);
    }
}

// Bring a sphere path into a single chart (majority vote). Throws when a
// node cannot be represented there.
inline void canonicalize_chart(const SurfaceModel& s, DiscretePath& p) {
    if (s.kind != SurfaceKind::RoundSphere) return;
    int votes = 0;
    for (const auto& n : p.nodes) votes += (n.chart == 0) ? 1 : -1;
    const std::int8_t chart = votes >= 0 ? 0 : 1;
    for (auto& n : p.nodes) {
        if (n.chart != chart) n = sphere_transition(n);
        if (n.xy.norm() > SurfaceModel::overflow_radius)
            throw DomainError("sphere path does not fit in a single stereographic chart");
    }
}

inline double length(const SurfaceModel& s, const DiscretePath& p) {
    double l = 0.0;
    for (int i = 0; i < p.segments(); ++i) {
        const Vec2 d = p.nodes[i + 1].xy - p.nodes[i].xy;
        ChartPoint mid(0.5 * (p.nodes[i].xy + p.nodes[i + 1].xy), p.nodes[i].chart);
        l += s.conformal_factor(mid) * d.norm();
    }
    return l;
}

// Kinetic energy e(x) = int |x'(s)|^2 ds of the unit-interval parametrization.
inline double kinetic(const SurfaceModel& s, const DiscretePath& p) {
    const double ds = 1.0 / p.segments();
    double e = 0.0;
    for (int i = 0; i < p.segments(); ++i) {
        const Vec2 d = p.nodes[i + 1].xy - p.nodes[i].xy;
        ChartPoint mid(0.5 * (p.nodes[i].xy + p.nodes[i + 1].xy), p.nodes[i].chart);
        e += sq(s.conformal_factor(mid)) * d.squaredNorm() / ds;
    }
    return e;
}

inline DiscretePath resample(const DiscretePath& p, int n_new) {
    if (n_new < 8) throw PreconditionError("resample needs at least 8 segments");
    p.validate();
    const int n = p.segments();
    DiscretePath out;
    out.T = p.T;
    out.boundary = p.boundary;
    out.surface_tag = p.surface_tag;
    out.nodes.resize(n_new + 1);
    for (int j = 0; j <= n_new; ++j) {
        double t = double(j) / n_new * n;
        int i = std::min(static_cast<int>(t), n - 1);
        double a = t - i;
        out.nodes[j] = ChartPoint((1.0 - a) * p.nodes[i].xy + a * p.nodes[i + 1].xy,
                                  p.nodes[i].chart);
    }
    out.nodes.back().chart = p.nodes.back().chart;
    return out;
}

inline HomotopyClass homotopy_class(const SurfaceModel& s, const DiscretePath& path) {
    if (s.kind != SurfaceKind::FlatTorus) return HomotopyClass{};
    DiscretePath p = path;
    canonicalize_lift(s, p);
    const Vec2 disp = p.nodes.back().xy - p.nodes.front().xy;
    HomotopyClass h;
    h.trivial_marker = false;
    if (p.boundary.periodic_kind()) {
        const Vec2 w(disp.x() / s.Lx, disp.y() / s.Ly);
        Eigen::Vector2i wi(static_cast<int>(std::lround(w.x())),
                           static_cast<int>(std::lround(w.y())));
        if ((w - wi.cast<double>()).norm() > 1e-6)
            throw ResolutionError("periodic path does not close after wrap");
        h.winding = wi;
    } else {
        // Lift displacement minus the wrapped displacement is a lattice
        // vector; moving endpoints along Q0/Q1 shifts it by subgroup
        // elements, which the reduction quotients out.
        const ChartPoint w_end = wrap(s, p.nodes.back());
        const Vec2 lat = p.nodes.back().xy - w_end.xy;
        Eigen::Vector2i wi(static_cast<int>(std::lround(lat.x() / s.Lx)),
                           static_cast<int>(std::lround(lat.y() / s.Ly)));
        h.winding = reduce_mod_subgroup(wi, p.boundary.subgroup);
    }
    return h;
}

// --- construction helpers -------------------------------------------------

inline DiscretePath make_loop(const SurfaceModel& s,
                              const std::function<ChartPoint(double)>& f, int n, double T) {
    DiscretePath p;
    p.surface_tag = s.kind;
    p.T = T;
    p.boundary = BoundarySpec::periodic();
    p.nodes.resize(n + 1);
    for (int i = 0; i <= n; ++i) p.nodes[i] = f(double(i) / n);
    if (s.kind == SurfaceKind::FlatTorus) canonicalize_lift(s, p);
    return p;
}

inline DiscretePath constant_loop(const SurfaceModel& s, const ChartPoint& q, int n, double T) {
    return make_loop(
        s, [&](double) { return q; }, n, T);
}

inline DiscretePath circle_loop(const SurfaceModel& s, const ChartPoint& center, double r,
                                int n, double T, bool clockwise = false) {
    const double sgn = clockwise ? -1.0 : 1.0;
    return make_loop(
        s,
        [&](double t) {
            const double a = sgn * 2.0 * M_PI * t;
            return ChartPoint(center.xy + r * Vec2(std::cos(a), std::sin(a)), center.chart);
        },
        n, T);
}

// --- CSV serialization ------------------------------------------------------

inline std::string boundary_to_string(const BoundarySpec& b) {
    if (b.periodic_kind()) return "periodic";
    auto circ = [](const CircleSpec& c) {
        std::ostringstream os;
        switch (c.kind) {
            case CircleSpec::Kind::LatticeHorizontal: os << "y=" << c.level; break;
            case CircleSpec::Kind::LatticeVertical: os << "x=" << c.level; break;
            case CircleSpec::Kind::Round:
                os << "round(" << c.center.x() << "," << c.center.y() << ";" << c.radius << ")";
                break;
            case CircleSpec::Kind::Point:
                os << "point(" << c.center.x() << "," << c.center.y() << ")";
                break;
        }
        return os.str();
    };
    return "conormal " + circ(b.Q0) + " -> " + circ(b.Q1);
}

inline void write_path_csv(std::ostream& os, const DiscretePath& p, double k) {
    os << "# T=" << std::setprecision(17) << p.T << " k=" << k
       << " boundary=" << boundary_to_string(p.boundary) << "\n";
    os << "s,x,y,chart\n";
    const int n = p.segments();
    for (int i = 0; i <= n; ++i) {
        os << std::setprecision(17) << double(i) / n << "," << p.nodes[i].x() << ","
           << p.nodes[i].y() << "," << int(p.nodes[i].chart) << "\n";
    }
}

inline void write_path_csv(const std::string& file, const DiscretePath& p, double k) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file);
    write_path_csv(os, p, k);
}

// Reads the CSV written above. Boundary metadata beyond periodic/conormal
// tags is not reconstructed; callers re-attach circle specs if needed.
inline std::pair<DiscretePath, double> read_path_csv(std::istream& is) {
    DiscretePath p;
    double k = 0.0;
    std::string line;
    if (!std::getline(is, line) || line.rfind("# T=", 0) != 0)
        throw PreconditionError("path CSV: missing header line");
    {
        std::istringstream hs(line.substr(2));
        std::string tok;
        while (hs >> tok) {
            if (tok.rfind("T=", 0) == 0) p.T = std::stod(tok.substr(2));
            if (tok.rfind("k=", 0) == 0) k = std::stod(tok.substr(2));
        }
    }
    if (!std::getline(is, line) || line != "s,x,y,chart")
        throw PreconditionError("path CSV: missing column header");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double s, x, y;
        int chart;
        if (!(ls >> s >> x >> y >> chart)) throw PreconditionError("path CSV: bad row");
        p.nodes.emplace_back(x, y, static_cast<std::int8_t>(chart));
    }
    if (p.nodes.size() < 2) throw PreconditionError("path CSV: too few nodes");
    return {p, k};
}

}  // namespace critorb
