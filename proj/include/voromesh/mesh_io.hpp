#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "voromesh/mesh.hpp"

namespace voromesh {

struct MeshIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadReport {
    int degenerate_faces_dropped = 0; // faces with a repeated vertex index
    int zero_area_faces = 0;          // kept, but flagged
    int polygons_triangulated = 0;    // input faces with > 3 vertices
};

// ASCII OBJ or OFF, chosen by extension (fallback: content sniff).
// Polygons are fan-triangulated; degenerate faces are dropped and counted.
TriangleMesh load_mesh(const std::string& path, LoadReport* report = nullptr);

// Center the bounding box at the origin and scale the longest side to 1.
std::pair<TriangleMesh, NormalizationTransform> normalize(const TriangleMesh& mesh);

// OBJ with polygonal `f` records, coordinates at 9 significant digits.
void save_polygon_mesh(const PolygonMesh& mesh, const std::string& path);
void save_triangle_mesh(const TriangleMesh& mesh, const std::string& path);

} // namespace voromesh
