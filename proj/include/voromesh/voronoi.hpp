#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "voromesh/knn.hpp"
#include "voromesh/voroloss.hpp"

namespace voromesh {

// Finite stand-in for the unbounded diagram: cells touching this box play the
// role of infinite cells.
struct ClipBox {
    Vec3 lo{-0.75, -0.75, -0.75};
    Vec3 hi{0.75, 0.75, 0.75};

    // Bounding box of the points padded on every axis by margin * (largest
    // axis extent), so clipped cells are guaranteed to be hull-exterior.
    static ClipBox around(std::span<const Vec3> points, double margin = 0.25);

    bool contains(const Vec3& p, double tol = 0.0) const;
    double volume() const;
    Vec3 extent() const { return hi - lo; }
};

// Plane ids: >= 0 is the bisector with that generator, negative is a clip-box
// plane, -(2*axis + (high_side ? 2 : 1)).
constexpr int box_plane_id(int axis, bool high_side) {
    return -(2 * axis + (high_side ? 2 : 1));
}

struct CellVertex {
    Vec3 pos;
    std::array<int, 3> planes; // sorted ids of the three defining planes
};

struct CellFace {
    int plane = 0;         // neighbor generator id or box plane id
    std::vector<int> loop; // indices into ConvexCell::vertices, CCW outward
};

// One generator's cell: the clip box cut by bisector half-spaces, processed
// in increasing neighbor distance until the security radius criterion holds.
struct ConvexCell {
    int generator = -1;
    std::vector<CellVertex> vertices;
    std::vector<CellFace> faces;
    bool ok = true;
    int neighbors_clipped = 0;
};

ConvexCell compute_cell(std::span<const Vec3> positions, int i, const ClipBox& box,
                        const KdTree& index);

struct VoronoiFace {
    int a = -1, b = -1;    // generator pair, a < b; loop normal points a -> b
    std::vector<int> loop; // global vertex ids
};

struct VoronoiCell {
    std::vector<int> face_ids;               // shared faces touching this cell
    std::vector<std::vector<int>> box_faces; // this cell's clip-box polygons, outward
    bool clipped = false;
    double volume = 0.0;
    Vec3 barycenter;
    bool barycenter_degenerate = false;
};

// Globally consistent clipped Voronoi diagram. Vertices are keyed by the
// sorted 4-tuple of defining plane ids (owning generator included); shared
// vertices are physically identical because coordinates are solved once from
// the key. Near-coincident keys (cospherical degeneracies) are merged when
// closer than 1e-9.
struct VoronoiDiagram {
    ClipBox box;
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 4>> vertex_keys;
    std::vector<VoronoiFace> faces;
    std::vector<VoronoiCell> cells;
    std::unordered_map<std::uint64_t, int> pair_to_face;

    int face_index(int i, int j) const;

    // Oriented loops bounding cell c (shared faces flipped as needed plus the
    // cell's own box polygons); all normals point out of the cell.
    std::vector<std::vector<int>> cell_boundary_loops(int c) const;
};

VoronoiDiagram compute_diagram(const GeneratorSet& generators, const ClipBox& box,
                               int threads = 1);

Vec3 cell_barycenter(const VoronoiDiagram& diagram, int cell);

// Distance from p to the nearest shared Voronoi face polygon.
double distance_to_faces(const VoronoiDiagram& diagram, const Vec3& p);

// Plain-text debug dump (vertices, then one line per face pair with its loop).
void save_diagram_dump(const VoronoiDiagram& diagram, const std::string& path);

} // namespace voromesh
