#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "voromesh/voroloss.hpp"
#include "voromesh/voronoi.hpp"

using namespace voromesh;

namespace {

GeneratorSet random_generators(Rng& rng, int n, double lo = -0.5, double hi = 0.5) {
    std::vector<Vec3> pos(n);
    for (auto& p : pos) p = uniform_vec(rng, lo, hi);
    return GeneratorSet::from_positions(std::move(pos));
}

} // namespace

TEST_CASE("kNN: single generator and cube corners") {
    GeneratorSet one = GeneratorSet::from_positions({{0.1, 0.2, 0.3}});
    KdTree t1 = build_index(one);
    CHECK(t1.nearest({5, 5, 5}).index == 0);

    std::vector<Vec3> corners;
    for (int i = 0; i < 8; ++i)
        corners.push_back({(i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5});
    KdTree t8(corners);
    auto nn = t8.query({0.5, 0.5, 0.5}, 2);
    CHECK(nn[0].index == 7);
    CHECK(nn[0].dist_sq == 0.0);
}

TEST_CASE("kNN matches brute force on 1000 random points") {
    Rng rng(99);
    std::vector<Vec3> pts(1000);
    for (auto& p : pts) p = uniform_vec(rng, -1, 1);
    KdTree tree(pts);
    for (int trial = 0; trial < 100; ++trial) {
        Vec3 q = uniform_vec(rng, -1.2, 1.2);
        int k = 1 + static_cast<int>(uniform_index(rng, 24));
        auto got = tree.query(q, k);
        auto want = oracles::brute_force_knn(pts, q, k);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].index == want[i].second);
            CHECK(got[i].dist_sq == want[i].first);
        }
    }
}

TEST_CASE("bisector distance: axis pair") {
    Vec3 qi{-1, 0, 0}, qj{1, 0, 0};
    CHECK(bisector_distance({0.25, 0.7, -0.3}, qi, qj) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(bisector_distance({0.0, 3.0, -2.0}, qi, qj) == doctest::Approx(0.0));
    CHECK_THROWS(bisector_distance({0, 0, 0}, qi, qi));
}

TEST_CASE("bisector distance matches the projection oracle") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        Vec3 qi = uniform_vec(rng, -1, 1), qj = uniform_vec(rng, -1, 1);
        if (dist(qi, qj) < 1e-6) continue;
        Vec3 x = uniform_vec(rng, -1, 1);
        // Independent route: subtract the orthogonal projection onto the plane.
        Vec3 m = (qi + qj) * 0.5;
        Vec3 u = normalized(qj - qi);
        Vec3 projected = x - u * dot(x - m, u);
        double want = dist(x, projected);
        CHECK(bisector_distance(x, qi, qj) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("voroloss: two generators, one sample") {
    GeneratorSet q = GeneratorSet::from_positions({{-1, 0, 0}, {1, 0, 0}});
    std::vector<Vec3> x{{0.3, 0, 0}};
    CHECK(voroloss(x, q, 2) == doctest::Approx(0.09).epsilon(1e-14));

    std::vector<Vec3> on_face{{0.0, 0.4, -0.2}};
    CHECK(voroloss(on_face, q, 2) == doctest::Approx(0.0));
}

TEST_CASE("voroloss argument validation") {
    GeneratorSet one = GeneratorSet::from_positions({{0, 0, 0}});
    std::vector<Vec3> x{{1, 2, 3}};
    CHECK_THROWS(voroloss(x, one, 2));
    GeneratorSet two = GeneratorSet::from_positions({{0, 0, 0}, {1, 0, 0}});
    CHECK_THROWS(voroloss(x, two, 1));
    CHECK_THROWS(voroloss(x, two, 3));
}

TEST_CASE("voroloss with k=|Q| equals exact distance to the full diagram") {
    Rng rng(31);
    GeneratorSet q = random_generators(rng, 30);
    std::vector<Vec3> probes(200);
    ClipBox probe_box = ClipBox::around(q.positions);
    for (auto& p : probes)
        p = Vec3{uniform_in(rng, probe_box.lo.x, probe_box.hi.x),
                 uniform_in(rng, probe_box.lo.y, probe_box.hi.y),
                 uniform_in(rng, probe_box.lo.z, probe_box.hi.z)};

    // Oracle diagram on a widely inflated box so truncation cannot matter.
    VoronoiDiagram diagram = compute_diagram(q, ClipBox::around(q.positions, 2.0));
    double want = 0.0;
    for (const auto& p : probes) {
        double d = distance_to_faces(diagram, p);
        want += d * d;
    }
    double got = voroloss(probes, q, static_cast<int>(q.size()));
    CHECK(std::abs(got - want) <= 1e-9 * want);
}

TEST_CASE("gradient: two-generator finite difference") {
    GeneratorSet q = GeneratorSet::from_positions({{-1, 0, 0}, {1, 0, 0}});
    std::vector<Vec3> x{{0.3, 0, 0}};
    VoroLossGrad lg = voroloss_with_grad(x, q, 2);
    CHECK(lg.loss == doctest::Approx(0.09).epsilon(1e-14));

    const double h = 1e-6;
    for (int gi = 0; gi < 2; ++gi)
        for (int a = 0; a < 3; ++a) {
            GeneratorSet qp = q, qm = q;
            qp.positions[gi][a] += h;
            qm.positions[gi][a] -= h;
            double fd = (voroloss(x, qp, 2) - voroloss(x, qm, 2)) / (2 * h);
            CHECK(lg.gradient[gi][a] == doctest::Approx(fd).epsilon(1e-5));
        }
}

TEST_CASE("gradient: empty sample set and samples on faces") {
    GeneratorSet q = GeneratorSet::from_positions({{-1, 0, 0}, {1, 0, 0}});
    VoroLossGrad empty = voroloss_with_grad(std::vector<Vec3>{}, q, 2);
    CHECK(empty.loss == 0.0);
    for (const auto& g : empty.gradient) CHECK(norm(g) == 0.0);

    std::vector<Vec3> on_face{{0.0, 0.1, 0.2}, {0.0, -0.3, 0.4}};
    VoroLossGrad zero = voroloss_with_grad(on_face, q, 2);
    CHECK(zero.loss == doctest::Approx(0.0));
    for (const auto& g : zero.gradient) CHECK(norm(g) < 1e-15);
}

TEST_CASE("gradient matches finite differences on random instances") {
    Rng rng(47);
    long long total = 0, failed = 0;
    const double h = 1e-6;
    for (int inst = 0; inst < 8; ++inst) {
        int n = 6 + static_cast<int>(uniform_index(rng, 20));
        GeneratorSet q = random_generators(rng, n);
        std::vector<Vec3> samples(40);
        for (auto& s : samples) s = uniform_vec(rng, -0.5, 0.5);
        int k = std::min(n, 6);
        VoroLossGrad lg = voroloss_with_grad(samples, q, k);
        for (int gi = 0; gi < n; ++gi)
            for (int a = 0; a < 3; ++a) {
                GeneratorSet qp = q, qm = q;
                qp.positions[gi][a] += h;
                qm.positions[gi][a] -= h;
                double fd = (voroloss(samples, qp, k) - voroloss(samples, qm, k)) / (2 * h);
                double an = lg.gradient[gi][a];
                double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
                ++total;
                if (rel > 1e-5) ++failed;
            }
    }
    CHECK(static_cast<double>(failed) <= 0.01 * static_cast<double>(total));
}

TEST_CASE("k=32 equals k=|Q| on dense random instances") {
    Rng rng(53);
    for (int inst = 0; inst < 3; ++inst) {
        GeneratorSet q = random_generators(rng, 1000);
        std::vector<Vec3> probes(300);
        for (auto& p : probes) p = uniform_vec(rng, -0.45, 0.45);
        double truncated = voroloss(probes, q, 32);
        double full = voroloss(probes, q, 1000);
        CHECK(truncated == full); // bit-identical
    }
}

TEST_CASE("translation and scale equivariance") {
    Rng rng(61);
    GeneratorSet q = random_generators(rng, 40);
    std::vector<Vec3> x(100);
    for (auto& p : x) p = uniform_vec(rng, -0.5, 0.5);
    double base = voroloss(x, q, 8);

    Vec3 t{0.37, -1.2, 0.05};
    GeneratorSet qt = q;
    for (auto& p : qt.positions) p += t;
    std::vector<Vec3> xt = x;
    for (auto& p : xt) p += t;
    CHECK(voroloss(xt, qt, 8) == doctest::Approx(base).epsilon(1e-9));

    const double s = 2.5;
    GeneratorSet qs = q;
    for (auto& p : qs.positions) p *= s;
    std::vector<Vec3> xs = x;
    for (auto& p : xs) p *= s;
    CHECK(voroloss(xs, qs, 8) == doctest::Approx(base * s * s).epsilon(1e-12));
}

TEST_CASE("loss and gradient are thread-count independent") {
    Rng rng(71);
    GeneratorSet q = random_generators(rng, 200);
    std::vector<Vec3> x(5000);
    for (auto& p : x) p = uniform_vec(rng, -0.5, 0.5);

    VoroLossGrad serial = voroloss_with_grad(x, q, 16, nullptr, 1);
    VoroLossGrad parallel = voroloss_with_grad(x, q, 16, nullptr, 0);
    CHECK(serial.loss == parallel.loss);
    for (std::size_t i = 0; i < q.size(); ++i)
        CHECK(serial.gradient[i] == parallel.gradient[i]);
}
