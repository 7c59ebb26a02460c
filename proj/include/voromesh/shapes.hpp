#pragma once

#include "voromesh/mesh.hpp"

namespace voromesh {

// Canonical watertight test shapes, already normalized (bounding box centered
// at the origin, longest side 1).

// Subdivided icosahedron projected to the sphere of the given radius.
TriangleMesh icosphere(int subdivisions, double radius = 0.5);

// Axis-aligned box; default is the unit cube.
TriangleMesh box_mesh(const Vec3& extent = {1.0, 1.0, 1.0});

// Ring torus around the z axis; R + r = 0.5 keeps it normalized.
TriangleMesh torus_mesh(double major_radius = 0.35, double minor_radius = 0.15,
                        int major_segments = 48, int minor_segments = 24);

} // namespace voromesh
