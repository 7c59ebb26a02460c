#pragma once

#include <array>
#include <vector>

#include "voromesh/geometry.hpp"
#include "voromesh/vec3.hpp"

namespace voromesh {

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;

    bool empty() const { return vertices.empty() || faces.empty(); }

    Vec3 face_normal(std::size_t f) const {
        const auto& t = faces[f];
        return normalized(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
    }

    double face_area(std::size_t f) const {
        const auto& t = faces[f];
        return 0.5 * norm(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
    }

    double total_area() const {
        double a = 0.0;
        for (std::size_t f = 0; f < faces.size(); ++f) a += face_area(f);
        return a;
    }

    Aabb bounds() const {
        Aabb b;
        for (const auto& v : vertices) b.expand(v);
        return b;
    }
};

// General polygonal mesh; faces are ordered vertex-index loops.
struct PolygonMesh {
    std::vector<Vec3> vertices;
    std::vector<std::vector<int>> faces;

    bool empty() const { return vertices.empty() || faces.empty(); }

    TriangleMesh triangulated() const {
        TriangleMesh out;
        out.vertices = vertices;
        for (const auto& loop : faces)
            for (std::size_t i = 1; i + 1 < loop.size(); ++i)
                out.faces.push_back({loop[0], loop[i], loop[i + 1]});
        return out;
    }
};

// Maps model space into the normalized frame: p' = scale * (p + translation).
struct NormalizationTransform {
    double scale = 1.0;
    Vec3 translation{0.0, 0.0, 0.0};

    Vec3 apply(const Vec3& p) const { return (p + translation) * scale; }
    Vec3 invert(const Vec3& p) const { return p / scale - translation; }
};

} // namespace voromesh
