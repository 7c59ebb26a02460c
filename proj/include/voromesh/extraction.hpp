#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "voromesh/mesh.hpp"
#include "voromesh/voronoi.hpp"

namespace voromesh {

// The extracted boundary: exactly the Voronoi faces separating an inside cell
// from an outside cell, oriented so normals point inside -> outside.
struct VoroMeshSurface {
    PolygonMesh mesh;
    std::vector<std::pair<int, int>> face_pairs; // (inside generator, outside generator)

    bool empty() const { return mesh.faces.empty(); }
};

// Clipped cells are outside; all other cells take the ground-truth occupancy
// of their barycenter.
std::vector<std::uint8_t> assign_occupancy(const VoronoiDiagram& diagram, const TriangleMesh& gt,
                                           int threads = 1);

VoroMeshSurface extract_voromesh(const VoronoiDiagram& diagram,
                                 std::span<const std::uint8_t> occupancy);

struct RepairStats {
    int nonmanifold_edges_split = 0;
    int vertices_duplicated = 0;
};

// Duplicate bowtie vertices per edge-connected fan and split edges with more
// than two incident faces into per-sheet copies. No-op on manifold input.
VoroMeshSurface repair_nonmanifold(const VoroMeshSurface& surface, RepairStats* stats = nullptr);

struct WatertightReport {
    bool edge_manifold = false;        // every undirected edge in exactly 2 faces
    bool closed = false;               // no boundary (1-face) edges
    bool consistent_orientation = false;
    int boundary_edges = 0;
    int nonmanifold_edges = 0;
    long long self_intersections = 0;
    std::size_t n_vertices = 0, n_faces = 0, n_edges = 0;

    bool watertight() const {
        return edge_manifold && closed && consistent_orientation && self_intersections == 0;
    }
    std::string to_json() const;
};

// Self-intersections are exact-style triangle tests over the fan-triangulated
// surface at tolerance 1e-12, excluding pairs that share a vertex index.
WatertightReport check_watertight(const VoroMeshSurface& surface, int threads = 1);

} // namespace voromesh
