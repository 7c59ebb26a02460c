#include <doctest.h>

#include <cmath>
#include <set>

#include "voromesh/optimizer.hpp"
#include "voromesh/rng.hpp"
#include "voromesh/shapes.hpp"

using namespace voromesh;

namespace {

SurfacePointSet points_only(std::vector<Vec3> pts) {
    SurfacePointSet s;
    s.normals.assign(pts.size(), Vec3{0, 0, 1});
    s.face_ids.assign(pts.size(), 0);
    s.points = std::move(pts);
    return s;
}

FitConfig small_config(int grid, int steps, std::uint64_t seed = 0) {
    FitConfig c;
    c.grid_resolution = grid;
    c.steps = steps;
    c.halving_steps = {steps / 4, steps / 2};
    c.k = 16;
    c.seed = seed;
    c.full_loss_every = std::max(steps / 4, 1);
    return c;
}

} // namespace

TEST_CASE("init: one sample marks one voxel -> 8 corner generators") {
    SurfacePointSet s = points_only({{-0.25, -0.25, -0.25}});
    GeneratorSet g = init_generators(s, 2);
    CHECK(g.size() == 8);
    for (const auto& p : g.positions) {
        CHECK((p.x == -0.5 || p.x == 0.0));
        CHECK((p.y == -0.5 || p.y == 0.0));
        CHECK((p.z == -0.5 || p.z == 0.0));
    }
    CHECK(g.initial_positions == g.positions);
}

TEST_CASE("init: face-adjacent voxels share 4 nodes -> 12 generators") {
    SurfacePointSet s = points_only({{-0.25, -0.25, -0.25}, {0.25, -0.25, -0.25}});
    CHECK(init_generators(s, 2).size() == 12);
}

TEST_CASE("init matches a dense voxel-scan oracle on the icosphere") {
    TriangleMesh sphere = icosphere(3, 0.5);
    SurfacePointSet s = sample_surface(sphere, 30000, 9);
    const int g = 16;
    GeneratorSet got = init_generators(s, g);

    // Brute-force scan: mark voxels, collect nodes over a dense flag grid.
    std::vector<char> voxel(g * g * g, 0);
    const double h = 1.0 / g;
    for (const auto& p : s.points) {
        int ix = std::min(g - 1, std::max(0, static_cast<int>(std::floor((p.x + 0.5) / h))));
        int iy = std::min(g - 1, std::max(0, static_cast<int>(std::floor((p.y + 0.5) / h))));
        int iz = std::min(g - 1, std::max(0, static_cast<int>(std::floor((p.z + 0.5) / h))));
        voxel[(ix * g + iy) * g + iz] = 1;
    }
    std::set<std::array<int, 3>> nodes;
    for (int x = 0; x < g; ++x)
        for (int y = 0; y < g; ++y)
            for (int z = 0; z < g; ++z)
                if (voxel[(x * g + y) * g + z])
                    for (int dx = 0; dx <= 1; ++dx)
                        for (int dy = 0; dy <= 1; ++dy)
                            for (int dz = 0; dz <= 1; ++dz)
                                nodes.insert({x + dx, y + dy, z + dz});

    REQUIRE(got.size() == nodes.size());
    std::set<std::array<int, 3>> got_nodes;
    for (const auto& p : got.positions)
        got_nodes.insert({static_cast<int>(std::lround((p.x + 0.5) / h)),
                          static_cast<int>(std::lround((p.y + 0.5) / h)),
                          static_cast<int>(std::lround((p.z + 0.5) / h))});
    CHECK(got_nodes == nodes);
}

TEST_CASE("init clamps out-of-box samples with a count") {
    SurfacePointSet s = points_only({{0.75, 0.0, 0.0}});
    int clamped = 0;
    GeneratorSet g = init_generators(s, 2, &clamped);
    CHECK(clamped == 1);
    CHECK(g.size() == 8);
}

TEST_CASE("offset regularizer value and subgradient") {
    GeneratorSet g = GeneratorSet::from_positions({{0, 0, 0}, {1, 1, 1}});
    RegularizerTerm zero = offset_regularizer(g);
    CHECK(zero.value == 0.0);
    CHECK(norm(zero.gradient[0]) == 0.0);

    g.positions[0] += Vec3{0.3, 0, 0};
    RegularizerTerm r = offset_regularizer(g);
    CHECK(r.value == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(dist(r.gradient[0], {1, 0, 0}) < 1e-12);
    CHECK(norm(r.gradient[1]) == 0.0);
}

TEST_CASE("offset regularizer equals a brute-force max") {
    Rng rng(13);
    GeneratorSet g;
    for (int i = 0; i < 50; ++i) {
        g.initial_positions.push_back(uniform_vec(rng, -0.5, 0.5));
        g.positions.push_back(g.initial_positions.back() + uniform_vec(rng, -0.1, 0.1));
    }
    double want = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        want = std::max(want, dist(g.positions[i], g.initial_positions[i]));
    CHECK(offset_regularizer(g).value == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("adam: zero gradient leaves parameters untouched") {
    std::vector<Vec3> params{{1, 2, 3}, {4, 5, 6}};
    auto before = params;
    AdamState adam(params.size());
    adam.step(params, {{0, 0, 0}, {0, 0, 0}}, 0.1);
    CHECK(params == before);
}

TEST_CASE("adam: first-step displacement is ~lr for a constant gradient") {
    std::vector<Vec3> params{{0, 0, 0}};
    AdamState adam(1);
    adam.step(params, {{3.7, 0, 0}}, 0.01);
    // Bias-corrected first step is lr * g / (|g| + eps') ~= lr.
    CHECK(std::abs(params[0].x + 0.01) < 1e-6);
}

TEST_CASE("adam: 1-D quadratic matches an independent scalar recurrence") {
    // Optimize (x-3)^2 with lr 0.1 and compare against a direct recurrence.
    double x_ref = 0.0, m = 0.0, v = 0.0;
    const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int t = 1; t <= 500; ++t) {
        double g = 2.0 * (x_ref - 3.0);
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        double mhat = m / (1 - std::pow(b1, t));
        double vhat = v / (1 - std::pow(b2, t));
        x_ref -= lr * mhat / (std::sqrt(vhat) + eps);
    }
    CHECK(std::abs(x_ref - 3.0) < 1e-3);

    std::vector<Vec3> params{{0, 0, 0}};
    AdamState adam(1);
    for (int t = 1; t <= 500; ++t)
        adam.step(params, {{2.0 * (params[0].x - 3.0), 0, 0}}, lr);
    CHECK(params[0].x == doctest::Approx(x_ref).epsilon(1e-12));
}

TEST_CASE("adam rejects non-finite gradients") {
    std::vector<Vec3> params{{0, 0, 0}};
    AdamState adam(1);
    CHECK_THROWS(adam.step(params, {{std::nan(""), 0, 0}}, 0.1));
}

TEST_CASE("fit with steps=0 returns the initial generators") {
    TriangleMesh sphere = icosphere(1, 0.5);
    SurfacePointSet s = sample_surface(sphere, 2000, 1);
    GeneratorSet q0 = init_generators(s, 4);
    FitConfig c = small_config(4, 0);
    FitResult r = fit(s, q0, c);
    CHECK(r.generators.positions == q0.positions);
}

TEST_CASE("learning rate halves cumulatively at the configured steps") {
    TriangleMesh sphere = icosphere(1, 0.5);
    SurfacePointSet s = sample_surface(sphere, 1500, 2);
    GeneratorSet q0 = init_generators(s, 4);

    FitConfig c;
    c.grid_resolution = 4;
    c.steps = 160;
    c.halving_steps = {80, 120, 200, 250}; // defaults; 200/250 never fire here
    c.k = 8;
    c.seed = 3;
    c.full_loss_every = 0;
    FitResult r = fit(s, q0, c);
    CHECK(r.trace[0].lr == doctest::Approx(0.005).epsilon(1e-15));
    CHECK(r.trace[79].lr == doctest::Approx(0.005).epsilon(1e-15));
    CHECK(r.trace[80].lr == doctest::Approx(0.0025).epsilon(1e-15));
    CHECK(r.trace[150].lr == doctest::Approx(0.00125).epsilon(1e-15)); // 0.005/4
}

TEST_CASE("fit is bit-deterministic and thread-count independent") {
    TriangleMesh torus = torus_mesh(0.35, 0.15, 16, 8);
    SurfacePointSet s = sample_surface(torus, 4000, 5);
    GeneratorSet q0 = init_generators(s, 8);
    FitConfig c = small_config(8, 40, 7);

    FitResult a = fit(s, q0, c);
    FitResult b = fit(s, q0, c);
    CHECK(a.generators.positions == b.generators.positions);

    FitConfig cp = c;
    cp.threads = 0; // all cores
    FitResult par = fit(s, q0, cp);
    CHECK(a.generators.positions == par.generators.positions);
}

TEST_CASE("fit reduces the full-set loss on a small sphere") {
    TriangleMesh sphere = icosphere(2, 0.5);
    SurfacePointSet s = sample_surface(sphere, 10000, 11);
    GeneratorSet q0 = init_generators(s, 8);
    FitConfig c = small_config(8, 100, 11);
    FitResult r = fit(s, q0, c);

    REQUIRE(r.trace.front().full_loss.has_value());
    REQUIRE(r.trace.back().full_loss.has_value());
    double initial = *r.trace.front().full_loss;
    double final_loss = *r.trace.back().full_loss;
    CHECK(final_loss < 0.5 * initial);

    // Checkpointed full losses never rise by more than 5%.
    double prev = -1.0;
    for (const auto& tp : r.trace)
        if (tp.full_loss) {
            if (prev >= 0.0) CHECK(*tp.full_loss <= 1.05 * prev);
            prev = *tp.full_loss;
        }
}

TEST_CASE("offset cap: lambda > 0 does not increase the max offset") {
    TriangleMesh sphere = icosphere(2, 0.5);
    SurfacePointSet s = sample_surface(sphere, 20000, 19);
    GeneratorSet q0 = init_generators(s, 16);

    FitConfig base = small_config(16, 120, 19);
    FitResult free_run = fit(s, q0, base);

    FitConfig reg = base;
    reg.lambda = 0.5;
    FitResult reg_run = fit(s, q0, reg);

    CHECK(offset_regularizer(reg_run.generators).value <=
          offset_regularizer(free_run.generators).value + 1e-12);
}

TEST_CASE("fit validation errors") {
    TriangleMesh sphere = icosphere(1, 0.5);
    SurfacePointSet s = sample_surface(sphere, 100, 0);
    GeneratorSet q0 = init_generators(s, 4);

    FitConfig bad = small_config(4, 10);
    bad.minibatch_fraction = 0.0;
    CHECK_THROWS(fit(s, q0, bad));
    bad = small_config(4, 10);
    bad.lambda = -1.0;
    CHECK_THROWS(fit(s, q0, bad));
    bad = small_config(4, 10);
    bad.learning_rate = 0.0;
    CHECK_THROWS(fit(s, q0, bad));
}
