#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "voromesh/mesh.hpp"

namespace voromesh {

// Dense area-weighted surface sampling. Normals are the flat normals of the
// source triangles.
struct SurfacePointSet {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;
    std::vector<int> face_ids;

    std::size_t size() const { return points.size(); }
};

// Triangle choice proportional to area, uniform barycentric coordinates,
// bit-deterministic for a fixed (mesh, count, seed).
SurfacePointSet sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed);

// Generalized winding number: sum of signed solid angles over 4*pi.
double winding_number(const TriangleMesh& mesh, const Vec3& p);

// Inside iff winding number > 0.5 (boundary ties classify as outside).
bool point_occupancy(const TriangleMesh& mesh, const Vec3& p);

std::vector<std::uint8_t> batch_occupancy(const TriangleMesh& mesh, std::span<const Vec3> points,
                                          int threads = 1);

// Debug dump: "x y z nx ny nz" per line.
void save_xyz(const SurfacePointSet& points, const std::string& path);

} // namespace voromesh
