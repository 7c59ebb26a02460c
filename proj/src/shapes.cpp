#include "voromesh/shapes.hpp"

#include <cmath>
#include <map>

namespace voromesh {

TriangleMesh icosphere(int subdivisions, double radius) {
    const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
    TriangleMesh mesh;
    mesh.vertices = {
        {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
        {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
        {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1},
    };
    mesh.faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto [it, inserted] = midpoint.try_emplace(key, static_cast<int>(mesh.vertices.size()));
            if (inserted)
                mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]) * 0.5);
            return it->second;
        };
        std::vector<std::array<int, 3>> faces;
        faces.reserve(mesh.faces.size() * 4);
        for (const auto& t : mesh.faces) {
            int ab = mid(t[0], t[1]), bc = mid(t[1], t[2]), ca = mid(t[2], t[0]);
            faces.push_back({t[0], ab, ca});
            faces.push_back({t[1], bc, ab});
            faces.push_back({t[2], ca, bc});
            faces.push_back({ab, bc, ca});
        }
        mesh.faces = std::move(faces);
    }

    for (auto& v : mesh.vertices) v = normalized(v) * radius;
    return mesh;
}

TriangleMesh box_mesh(const Vec3& extent) {
    Vec3 h = extent * 0.5;
    TriangleMesh mesh;
    for (int i = 0; i < 8; ++i)
        mesh.vertices.push_back({(i & 1) ? h.x : -h.x, (i & 2) ? h.y : -h.y, (i & 4) ? h.z : -h.z});
    const int quads[6][4] = {
        {0, 4, 6, 2}, // x = -h
        {1, 3, 7, 5}, // x = +h
        {0, 1, 5, 4}, // y = -h
        {2, 6, 7, 3}, // y = +h
        {0, 2, 3, 1}, // z = -h
        {4, 5, 7, 6}, // z = +h
    };
    for (const auto& q : quads) {
        mesh.faces.push_back({q[0], q[1], q[2]});
        mesh.faces.push_back({q[0], q[2], q[3]});
    }
    return mesh;
}

TriangleMesh torus_mesh(double major_radius, double minor_radius, int major_segments,
                        int minor_segments) {
    TriangleMesh mesh;
    for (int i = 0; i < major_segments; ++i) {
        double u = 2.0 * M_PI * i / major_segments;
        for (int j = 0; j < minor_segments; ++j) {
            double v = 2.0 * M_PI * j / minor_segments;
            double r = major_radius + minor_radius * std::cos(v);
            mesh.vertices.push_back({r * std::cos(u), r * std::sin(u), minor_radius * std::sin(v)});
        }
    }
    auto vid = [&](int i, int j) {
        return (i % major_segments) * minor_segments + (j % minor_segments);
    };
    for (int i = 0; i < major_segments; ++i) {
        for (int j = 0; j < minor_segments; ++j) {
            int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
            mesh.faces.push_back({a, b, c});
            mesh.faces.push_back({a, c, d});
        }
    }
    return mesh;
}

} // namespace voromesh
