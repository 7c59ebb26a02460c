#include "voromesh/sampling.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

#include "voromesh/parallel.hpp"
#include "voromesh/rng.hpp"

namespace voromesh {

SurfacePointSet sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
    if (mesh.empty()) throw std::invalid_argument("sample_surface: empty mesh");

    std::vector<double> cumulative(mesh.faces.size());
    double total = 0.0;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        total += mesh.face_area(f);
        cumulative[f] = total;
    }
    if (total <= 0.0) throw std::invalid_argument("sample_surface: zero total area");

    SurfacePointSet out;
    out.points.reserve(count);
    out.normals.reserve(count);
    out.face_ids.reserve(count);

    Rng rng(seed);
    for (std::size_t s = 0; s < count; ++s) {
        double r = uniform01(rng) * total;
        auto it = std::lower_bound(cumulative.begin(), cumulative.end(), r);
        std::size_t f = std::min<std::size_t>(
            static_cast<std::size_t>(it - cumulative.begin()), mesh.faces.size() - 1);

        double u = uniform01(rng);
        double v = uniform01(rng);
        if (u + v > 1.0) { u = 1.0 - u; v = 1.0 - v; }

        const auto& tri = mesh.faces[f];
        const Vec3& a = mesh.vertices[tri[0]];
        const Vec3& b = mesh.vertices[tri[1]];
        const Vec3& c = mesh.vertices[tri[2]];
        out.points.push_back(a + (b - a) * u + (c - a) * v);
        out.normals.push_back(mesh.face_normal(f));
        out.face_ids.push_back(static_cast<int>(f));
    }
    return out;
}

double winding_number(const TriangleMesh& mesh, const Vec3& p) {
    double sum = 0.0;
    for (const auto& t : mesh.faces)
        sum += triangle_solid_angle(p, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    return sum / (4.0 * M_PI);
}

bool point_occupancy(const TriangleMesh& mesh, const Vec3& p) {
    return winding_number(mesh, p) > 0.5;
}

std::vector<std::uint8_t> batch_occupancy(const TriangleMesh& mesh, std::span<const Vec3> points,
                                          int threads) {
    std::vector<std::uint8_t> out(points.size(), 0);
    parallel_for(points.size(), threads, [&](std::size_t i) {
        out[i] = point_occupancy(mesh, points[i]) ? 1 : 0;
    });
    return out;
}

void save_xyz(const SurfacePointSet& points, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Vec3& p = points.points[i];
        const Vec3& n = points.normals[i];
        std::fprintf(f, "%.17g %.17g %.17g %.9g %.9g %.9g\n", p.x, p.y, p.z, n.x, n.y, n.z);
    }
    std::fclose(f);
}

} // namespace voromesh
