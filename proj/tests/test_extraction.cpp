#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "oracles.hpp"
#include "voromesh/extraction.hpp"
#include "voromesh/sampling.hpp"
#include "voromesh/shapes.hpp"

using namespace voromesh;

namespace {

GeneratorSet random_generators(Rng& rng, int n, double lo = -0.5, double hi = 0.5) {
    std::vector<Vec3> pos(n);
    for (auto& p : pos) p = uniform_vec(rng, lo, hi);
    return GeneratorSet::from_positions(std::move(pos));
}

GeneratorSet lattice3() {
    std::vector<Vec3> pos;
    for (double x : {-0.25, 0.0, 0.25})
        for (double y : {-0.25, 0.0, 0.25})
            for (double z : {-0.25, 0.0, 0.25}) pos.push_back({x, y, z});
    return GeneratorSet::from_positions(std::move(pos));
}

// Closed-surface signed volume (positive for outward orientation).
double surface_volume(const PolygonMesh& mesh) {
    double v = 0.0;
    std::vector<Vec3> loop;
    for (const auto& f : mesh.faces) {
        loop.clear();
        for (int idx : f) loop.push_back(mesh.vertices[idx]);
        v += polygon_fan_signed_volume(loop);
    }
    return v;
}

// A cube surface as a polygon mesh, vertices offset by `shift`, indices by `base`.
void append_cube(PolygonMesh& mesh, const Vec3& shift, double side) {
    int base = static_cast<int>(mesh.vertices.size());
    double h = side / 2;
    for (int i = 0; i < 8; ++i)
        mesh.vertices.push_back(shift + Vec3{(i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? h : -h});
    const int quads[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
                             {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
    for (const auto& q : quads)
        mesh.faces.push_back({base + q[0], base + q[1], base + q[2], base + q[3]});
}

} // namespace

TEST_CASE("occupancy: two-generator diagram is all-outside") {
    GeneratorSet q = GeneratorSet::from_positions({{-0.25, 0, 0}, {0.25, 0, 0}});
    ClipBox box{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
    VoronoiDiagram d = compute_diagram(q, box);
    auto occ = assign_occupancy(d, box_mesh({0.2, 0.2, 0.2}));
    CHECK(occ == std::vector<std::uint8_t>{0, 0});
}

TEST_CASE("occupancy: lattice center cell inside a small cube") {
    GeneratorSet q = lattice3();
    ClipBox box = ClipBox::around(q.positions);
    VoronoiDiagram d = compute_diagram(q, box);
    auto occ = assign_occupancy(d, box_mesh({0.2, 0.2, 0.2}));
    int inside = 0;
    for (std::size_t i = 0; i < occ.size(); ++i)
        if (occ[i]) {
            ++inside;
            CHECK(norm(q.positions[i]) < 1e-12);
        }
    CHECK(inside == 1);
}

TEST_CASE("occupancy equals an independent re-query on a fitted-scale diagram") {
    TriangleMesh sphere = icosphere(3, 0.5);
    Rng rng(211);
    GeneratorSet q = random_generators(rng, 400, -0.55, 0.55);
    ClipBox box = ClipBox::around(q.positions);
    VoronoiDiagram d = compute_diagram(q, box);
    auto occ = assign_occupancy(d, sphere, 2);

    int inside = 0;
    for (std::size_t i = 0; i < occ.size(); ++i) {
        bool want = !d.cells[i].clipped && point_occupancy(sphere, d.cells[i].barycenter);
        CHECK(occ[i] == (want ? 1 : 0));
        inside += occ[i];
        // Spot-check against the ray-parity oracle as well.
        if (i % 20 == 0 && !d.cells[i].clipped)
            CHECK((occ[i] != 0) == oracles::parity_occupancy(sphere, d.cells[i].barycenter, rng));
    }
    CHECK(inside > 0);
}

TEST_CASE("single inside cell extracts to its boundary with Euler characteristic 2") {
    Rng rng(223);
    GeneratorSet q = random_generators(rng, 20);
    ClipBox box = ClipBox::around(q.positions);
    VoronoiDiagram d = compute_diagram(q, box);

    int target = -1;
    for (std::size_t i = 0; i < d.cells.size(); ++i)
        if (!d.cells[i].clipped) { target = static_cast<int>(i); break; }
    REQUIRE(target >= 0);

    std::vector<std::uint8_t> occ(d.cells.size(), 0);
    occ[target] = 1;
    VoroMeshSurface surf = extract_voromesh(d, occ);

    CHECK(surf.mesh.faces.size() == d.cells[target].face_ids.size());
    std::set<std::pair<int, int>> edges;
    for (const auto& f : surf.mesh.faces)
        for (std::size_t i = 0; i < f.size(); ++i) {
            int a = f[i], b = f[(i + 1) % f.size()];
            edges.insert({std::min(a, b), std::max(a, b)});
        }
    long long V = static_cast<long long>(surf.mesh.vertices.size());
    long long E = static_cast<long long>(edges.size());
    long long F = static_cast<long long>(surf.mesh.faces.size());
    CHECK(V - E + F == 2);

    CHECK(surface_volume(surf.mesh) == doctest::Approx(d.cells[target].volume).epsilon(1e-9));
    for (const auto& [in, out] : surf.face_pairs) CHECK(in == target);
}

TEST_CASE("face count equals the opposite-occupancy adjacency count") {
    Rng rng(227);
    GeneratorSet q = random_generators(rng, 200);
    ClipBox box = ClipBox::around(q.positions);
    VoronoiDiagram d = compute_diagram(q, box);

    std::vector<std::uint8_t> occ(d.cells.size(), 0);
    for (std::size_t i = 0; i < occ.size(); ++i)
        occ[i] = (!d.cells[i].clipped && uniform01(rng) < 0.5) ? 1 : 0;

    long long expected = 0;
    for (const auto& f : d.faces)
        if (occ[f.a] != occ[f.b]) ++expected;

    VoroMeshSurface surf = extract_voromesh(d, occ);
    CHECK(static_cast<long long>(surf.mesh.faces.size()) == expected);

    // Orientation: every face normal points from the inside generator out.
    for (std::size_t f = 0; f < surf.mesh.faces.size(); ++f) {
        std::vector<Vec3> pts;
        for (int v : surf.mesh.faces[f]) pts.push_back(surf.mesh.vertices[v]);
        auto [in, out] = surf.face_pairs[f];
        CHECK(dot(newell_normal(pts), q.positions[out] - q.positions[in]) > 0.0);
    }

    // Signed volume = total inside volume.
    double inside_volume = 0.0;
    for (std::size_t i = 0; i < occ.size(); ++i)
        if (occ[i]) inside_volume += d.cells[i].volume;
    CHECK(surface_volume(surf.mesh) == doctest::Approx(inside_volume).epsilon(1e-6));
}

TEST_CASE("extraction with uniform occupancy is empty") {
    GeneratorSet q = GeneratorSet::from_positions({{-0.25, 0, 0}, {0.25, 0, 0}});
    ClipBox box{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
    VoronoiDiagram d = compute_diagram(q, box);
    std::vector<std::uint8_t> occ{0, 0};
    CHECK(extract_voromesh(d, occ).empty());
    std::vector<std::uint8_t> bad{0};
    CHECK_THROWS(extract_voromesh(d, bad));
}

TEST_CASE("repair: manifold input is returned unchanged") {
    PolygonMesh cube;
    append_cube(cube, {0, 0, 0}, 1.0);
    VoroMeshSurface surf;
    surf.mesh = cube;
    surf.face_pairs.assign(cube.faces.size(), {0, 1});

    RepairStats stats;
    VoroMeshSurface out = repair_nonmanifold(surf, &stats);
    CHECK(stats.vertices_duplicated == 0);
    CHECK(stats.nonmanifold_edges_split == 0);
    CHECK(out.mesh.vertices.size() == cube.vertices.size());
    CHECK(out.mesh.faces == cube.faces);
}

TEST_CASE("repair: bowtie vertex is duplicated into two") {
    // Two cubes sharing exactly one vertex: (0.5,0.5,0.5) of the first is
    // (-0.5,-0.5,-0.5)+shift of the second; weld them into one index.
    PolygonMesh mesh;
    append_cube(mesh, {0, 0, 0}, 1.0);
    append_cube(mesh, {1, 1, 1}, 1.0);
    // Weld vertex 8+0 (the second cube's (-,-,-) corner at (0.5,0.5,0.5))
    // onto vertex 7 (the first cube's (+,+,+) corner).
    for (auto& f : mesh.faces)
        for (int& v : f)
            if (v == 8) v = 7;

    VoroMeshSurface surf;
    surf.mesh = mesh;
    surf.face_pairs.assign(mesh.faces.size(), {0, 1});
    RepairStats stats;
    VoroMeshSurface out = repair_nonmanifold(surf, &stats);
    CHECK(stats.vertices_duplicated == 1);
    CHECK(out.mesh.vertices.size() == mesh.vertices.size() + 1);

    WatertightReport rep = check_watertight(out);
    CHECK(rep.edge_manifold);
    CHECK(rep.closed);
}

TEST_CASE("repair: four faces on one edge are split into two sheets") {
    // Two unit cubes diagonal to each other sharing exactly the edge
    // (0,0,0)-(0,0,1): their surfaces contribute four faces to that edge.
    PolygonMesh mesh;
    append_cube(mesh, {0.5, 0.5, 0.5}, 1.0);
    append_cube(mesh, {-0.5, -0.5, 0.5}, 1.0);
    // First cube corner indices: 0 at (0,0,0), 4 at (0,0,1).
    // Second cube: base 8; corner (+,+,-) = idx 3 at (0,0,0), (+,+,+) = idx 7 at (0,0,1).
    for (auto& f : mesh.faces)
        for (int& v : f) {
            if (v == 8 + 3) v = 0;
            if (v == 8 + 7) v = 4;
        }

    auto count_edge_faces = [](const PolygonMesh& m, int a, int b) {
        int count = 0;
        for (const auto& f : m.faces)
            for (std::size_t i = 0; i < f.size(); ++i) {
                int u = f[i], v = f[(i + 1) % f.size()];
                if ((u == a && v == b) || (u == b && v == a)) ++count;
            }
        return count;
    };
    REQUIRE(count_edge_faces(mesh, 0, 4) == 4);

    VoroMeshSurface surf;
    surf.mesh = mesh;
    surf.face_pairs.assign(mesh.faces.size(), {0, 1});
    RepairStats stats;
    VoroMeshSurface out = repair_nonmanifold(surf, &stats);
    CHECK(stats.nonmanifold_edges_split == 1);

    WatertightReport rep = check_watertight(out);
    CHECK(rep.edge_manifold);
    CHECK(rep.closed);
    CHECK(rep.consistent_orientation);
    CHECK(rep.self_intersections == 0);
}

TEST_CASE("check_watertight: convex cell boundary passes") {
    Rng rng(233);
    GeneratorSet q = random_generators(rng, 15);
    ClipBox box = ClipBox::around(q.positions);
    VoronoiDiagram d = compute_diagram(q, box);
    int target = -1;
    for (std::size_t i = 0; i < d.cells.size(); ++i)
        if (!d.cells[i].clipped) { target = static_cast<int>(i); break; }
    REQUIRE(target >= 0);
    std::vector<std::uint8_t> occ(d.cells.size(), 0);
    occ[target] = 1;
    WatertightReport rep = check_watertight(extract_voromesh(d, occ));
    CHECK(rep.watertight());
    CHECK(rep.self_intersections == 0);
}

TEST_CASE("check_watertight: a deleted face shows up as boundary edges") {
    PolygonMesh cube;
    append_cube(cube, {0, 0, 0}, 1.0);
    cube.faces.pop_back();
    VoroMeshSurface surf;
    surf.mesh = cube;
    surf.face_pairs.assign(cube.faces.size(), {0, 1});
    WatertightReport rep = check_watertight(surf);
    CHECK_FALSE(rep.edge_manifold);
    CHECK_FALSE(rep.closed);
    CHECK(rep.boundary_edges == 4);
}

TEST_CASE("check_watertight: interpenetrating tetrahedra count intersections") {
    // Two tets crossing through each other, disjoint index sets.
    PolygonMesh mesh;
    auto add_tet = [&](Vec3 a, Vec3 b, Vec3 c, Vec3 d) {
        int base = static_cast<int>(mesh.vertices.size());
        mesh.vertices.insert(mesh.vertices.end(), {a, b, c, d});
        mesh.faces.push_back({base + 0, base + 2, base + 1});
        mesh.faces.push_back({base + 0, base + 1, base + 3});
        mesh.faces.push_back({base + 1, base + 2, base + 3});
        mesh.faces.push_back({base + 0, base + 3, base + 2});
    };
    add_tet({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1});
    add_tet({0.5, 0.5, 0.5}, {-0.5, 0.2, 0.1}, {0.3, -0.4, 0.2}, {0.2, 0.3, -0.5});

    VoroMeshSurface surf;
    surf.mesh = mesh;
    surf.face_pairs.assign(mesh.faces.size(), {0, 1});
    WatertightReport rep = check_watertight(surf);
    CHECK(rep.self_intersections > 0);

    // Brute-force all-pairs oracle over the same fan triangles.
    TriangleMesh tris = mesh.triangulated();
    long long expected = 0;
    for (std::size_t i = 0; i < tris.faces.size(); ++i)
        for (std::size_t j = i + 1; j < tris.faces.size(); ++j) {
            const auto& a = tris.faces[i];
            const auto& b = tris.faces[j];
            bool shared = false;
            for (int u : a)
                for (int v : b)
                    if (u == v) shared = true;
            if (shared) continue;
            if (triangles_intersect(tris.vertices[a[0]], tris.vertices[a[1]], tris.vertices[a[2]],
                                    tris.vertices[b[0]], tris.vertices[b[1]], tris.vertices[b[2]]))
                ++expected;
        }
    CHECK(rep.self_intersections == expected);
}

TEST_CASE("watertight property over randomized occupancies") {
    Rng rng(239);
    for (int inst = 0; inst < 20; ++inst) {
        int n = 10 + static_cast<int>(uniform_index(rng, 141));
        GeneratorSet q = random_generators(rng, n);
        ClipBox box = ClipBox::around(q.positions);
        VoronoiDiagram d = compute_diagram(q, box);
        std::vector<std::uint8_t> occ(d.cells.size(), 0);
        for (std::size_t i = 0; i < occ.size(); ++i)
            occ[i] = (!d.cells[i].clipped && uniform01(rng) < 0.5) ? 1 : 0;
        VoroMeshSurface surf = repair_nonmanifold(extract_voromesh(d, occ));
        if (surf.empty()) continue;
        WatertightReport rep = check_watertight(surf, 2);
        CHECK(rep.watertight());
    }
}
