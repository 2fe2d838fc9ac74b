#include "critorb/surface.hpp"
#include "critorb/path.hpp"

#include <doctest.h>
#include <random>

using namespace critorb;

namespace {

ChartPoint random_point(const SurfaceModel& s, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    switch (s.kind) {
        case SurfaceKind::FlatTorus:
            return ChartPoint(u(rng) * s.Lx, u(rng) * s.Ly);
        case SurfaceKind::HyperbolicHalfPlane:
            return ChartPoint(s.box.xmin + u(rng) * (s.box.xmax - s.box.xmin),
                              s.box.ymin + u(rng) * (s.box.ymax - s.box.ymin));
        case SurfaceKind::RoundSphere: {
            const double r = 1.4 * std::sqrt(u(rng));
            const double a = 2 * M_PI * u(rng);
            return ChartPoint(r * std::cos(a), r * std::sin(a),
                              u(rng) < 0.5 ? std::int8_t(0) : std::int8_t(1));
        }
    }
    return {};
}

// Finite-difference Christoffel from the metric: Gamma^i_{jk} =
// 1/2 g^{il} (d_j g_{lk} + d_k g_{lj} - d_l g_{jk}).
Christoffel christoffel_fd(const SurfaceModel& s, const ChartPoint& q, double h = 1e-6) {
    Mat2 dg[2];
    for (int d = 0; d < 2; ++d) {
        ChartPoint qp = q, qm = q;
        qp.xy[d] += h;
        qm.xy[d] -= h;
        dg[d] = (metric_at(s, qp) - metric_at(s, qm)) / (2 * h);
    }
    const Mat2 ginv = metric_inverse_at(s, q);
    Christoffel c;
    for (int i = 0; i < 2; ++i) {
        Mat2 gi = Mat2::Zero();
        for (int j = 0; j < 2; ++j)
            for (int kk = 0; kk < 2; ++kk) {
                double v = 0;
                for (int l = 0; l < 2; ++l)
                    v += 0.5 * ginv(i, l) * (dg[j](l, kk) + dg[kk](l, j) - dg[l](j, kk));
                gi(j, kk) = v;
            }
        (i == 0 ? c.gx : c.gy) = gi;
    }
    return c;
}

}  // namespace

TEST_CASE("metric values on the three models") {
    const auto torus = SurfaceModel::flat_torus();
    CHECK(metric_at(torus, ChartPoint(0.3, 0.7)).isApprox(Mat2::Identity()));

    HyperbolicBox box;
    box.xmin = -5;
    box.xmax = 5;
    box.ymin = 0.1;
    box.ymax = 10;
    const auto hyp = SurfaceModel::hyperbolic(box);
    const Mat2 gh = metric_at(hyp, ChartPoint(0.0, 2.0));
    CHECK(gh(0, 0) == doctest::Approx(0.25));
    CHECK(gh(1, 1) == doctest::Approx(0.25));
    CHECK(gh(0, 1) == 0.0);

    const auto sph = SurfaceModel::sphere(1.0);
    const Mat2 gs = metric_at(sph, ChartPoint(0.0, 0.0));
    CHECK(gs(0, 0) == doctest::Approx(4.0));
    CHECK(gs(1, 1) == doctest::Approx(4.0));
}

TEST_CASE("metric is SPD at random admissible points") {
    std::mt19937_64 rng(7);
    HyperbolicBox box;
    box.ymin = 0.05;
    box.ymax = 30;
    for (const auto& s : {SurfaceModel::flat_torus(2.0, 0.7), SurfaceModel::hyperbolic(box),
                          SurfaceModel::sphere(1.3)}) {
        for (int i = 0; i < 1000; ++i) {
            const auto q = random_point(s, rng);
            const Mat2 g = metric_at(s, q);
            CHECK(g(0, 1) == doctest::Approx(g(1, 0)));
            CHECK(g(0, 0) > 0);
            CHECK(g.determinant() > 0);
        }
    }
}

TEST_CASE("domain errors") {
    HyperbolicBox box;
    const auto hyp = SurfaceModel::hyperbolic(box);
    CHECK_THROWS_AS(metric_at(hyp, ChartPoint(0.0, -1.0)), DomainError);
    CHECK_THROWS_AS(metric_at(hyp, ChartPoint(0.0, 0.0)), DomainError);
    const auto sph = SurfaceModel::sphere();
    CHECK_THROWS_AS(metric_at(sph, ChartPoint(10.0, 0.0)), DomainError);
    CHECK_THROWS_AS(wrap(sph, ChartPoint(0, 0)), UnsupportedError);
}

TEST_CASE("christoffel symbols") {
    const auto torus = SurfaceModel::flat_torus();
    const auto c0 = christoffel_at(torus, ChartPoint(0.4, 0.9));
    CHECK(c0.gx.isZero());
    CHECK(c0.gy.isZero());

    HyperbolicBox box;
    box.ymin = 0.05;
    box.ymax = 30;
    const auto hyp = SurfaceModel::hyperbolic(box);
    const auto ch = christoffel_at(hyp, ChartPoint(0.0, 2.0));
    CHECK(ch.gx(0, 1) == doctest::Approx(-0.5));  // Gamma^x_{xy} = -1/y

    std::mt19937_64 rng(3);
    for (const auto& s : {SurfaceModel::flat_torus(), SurfaceModel::hyperbolic(box),
                          SurfaceModel::sphere(0.8)}) {
        for (int i = 0; i < 100; ++i) {
            const auto q = random_point(s, rng);
            const auto ca = christoffel_at(s, q);
            // symmetry in the lower indices
            CHECK(ca.gx(0, 1) == doctest::Approx(ca.gx(1, 0)));
            CHECK(ca.gy(0, 1) == doctest::Approx(ca.gy(1, 0)));
            // agreement with finite differences of metric_at
            const auto cf = christoffel_fd(s, q);
            const double scale = std::max(1.0, cf.gx.norm() + cf.gy.norm());
            CHECK((ca.gx - cf.gx).norm() / scale < 1e-6);
            CHECK((ca.gy - cf.gy).norm() / scale < 1e-6);
        }
    }
}

TEST_CASE("torus wrap") {
    const auto t = SurfaceModel::flat_torus();
    auto w = wrap(t, ChartPoint(1.3, -0.2));
    CHECK(w.x() == doctest::Approx(0.3));
    CHECK(w.y() == doctest::Approx(0.8));
    w = wrap(t, ChartPoint(0.0, 0.0));
    CHECK(w.x() == 0.0);
    CHECK(w.y() == 0.0);
    w = wrap(t, ChartPoint(2.0, 3.0));
    CHECK(w.x() == 0.0);
    CHECK(w.y() == 0.0);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-8.0, 8.0);
    for (int i = 0; i < 200; ++i) {
        const ChartPoint q(u(rng), u(rng));
        const auto w1 = wrap(t, q);
        const auto w2 = wrap(t, w1);
        CHECK(w1.xy == w2.xy);  // idempotent
        CHECK(w1.x() >= 0.0);
        CHECK(w1.x() < t.Lx);
    }
}

TEST_CASE("sphere chart transition consistency") {
    const auto s = SurfaceModel::sphere(1.7);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.3, 1.3);
    for (int i = 0; i < 100; ++i) {
        ChartPoint q(u(rng), u(rng), 0);
        if (q.xy.norm() < 0.3) continue;
        const ChartPoint p = sphere_transition(q);
        // transition is an isometry: pull back the metric norm of a vector
        const Vec2 v(0.3, -0.8);
        const Vec2 vt = sphere_transition_tangent(q, v);
        CHECK(metric_norm(s, q, v) == doctest::Approx(metric_norm(s, p, vt)).epsilon(1e-10));
        const ChartPoint back = sphere_transition(p);
        CHECK((back.xy - q.xy).norm() < 1e-12);
    }
}

TEST_CASE("homotopy classes on the torus") {
    const auto t = SurfaceModel::flat_torus();
    auto loop10 = make_loop(
        t, [](double s) { return ChartPoint(s, 0.0); }, 64, 1.0);
    auto h = homotopy_class(t, loop10);
    CHECK(h.winding == Eigen::Vector2i(1, 0));

    auto cst = constant_loop(t, ChartPoint(0.4, 0.4), 32, 1.0);
    CHECK(homotopy_class(t, cst).winding == Eigen::Vector2i(0, 0));

    // concatenation of (1,0) and (0,1) loops winds (1,1)
    auto concat = make_loop(
        t,
        [](double s) {
            return s < 0.5 ? ChartPoint(2 * s, 0.0) : ChartPoint(1.0, 2 * (s - 0.5));
        },
        128, 1.0);
    CHECK(homotopy_class(t, concat).winding == Eigen::Vector2i(1, 1));

    // invariance under small node-wise perturbations
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    auto pert = loop10;
    for (size_t i = 1; i + 1 < pert.nodes.size(); ++i)
        pert.nodes[i].xy += Vec2(u(rng), u(rng));
    CHECK(homotopy_class(t, pert).winding == Eigen::Vector2i(1, 0));

    // unliftable path
    DiscretePath bad;
    bad.surface_tag = SurfaceKind::FlatTorus;
    bad.T = 1.0;
    bad.nodes = {ChartPoint(0, 0), ChartPoint(0.5, 0), ChartPoint(0, 0)};
    CHECK_THROWS_AS(homotopy_class(t, bad), ResolutionError);
}

TEST_CASE("homotopy class of conormal paths modulo the endpoint subgroup") {
    const auto t = SurfaceModel::flat_torus();
    const auto Q0 = CircleSpec::point(ChartPoint(0.5, 0.5));
    const auto Q1 = CircleSpec::horizontal(0.5);
    DiscretePath p;
    p.surface_tag = SurfaceKind::FlatTorus;
    p.T = 1.0;
    p.boundary = BoundarySpec::conormal(Q0, Q1);
    const int n = 64;
    // wind twice vertically, drift in x (killed by H1 = <(1,0)>)
    p.nodes.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        const double s = double(i) / n;
        p.nodes[i] = ChartPoint(0.5 + 0.7 * s, 0.5 + 2.0 * s);
    }
    const auto h = homotopy_class(t, p);
    CHECK(h.winding.y() == 2);
    CHECK(h.winding.x() == 0);  // reduced mod (1,0)
}

TEST_CASE("subgroup reduction") {
    using V = Eigen::Vector2i;
    CHECK(reduce_mod_subgroup(V(3, 5), {}) == V(3, 5));
    CHECK(reduce_mod_subgroup(V(3, 5), {V(1, 0)}) == V(0, 5));
    CHECK(reduce_mod_subgroup(V(3, 5), {V(1, 0), V(0, 1)}) == V(0, 0));
    CHECK(reduce_mod_subgroup(V(-4, 7), {V(0, 1)}) == V(-4, 0));
    CHECK(reduce_mod_subgroup(V(5, 5), {V(2, 0)}) == V(1, 5));
}
