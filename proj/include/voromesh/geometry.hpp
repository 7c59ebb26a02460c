#pragma once

#include <span>
#include <vector>

#include "voromesh/vec3.hpp"

namespace voromesh {

struct Aabb {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void expand(const Vec3& p) { lo = cwise_min(lo, p); hi = cwise_max(hi, p); }
    void expand(const Aabb& b) { lo = cwise_min(lo, b.lo); hi = cwise_max(hi, b.hi); }

    bool overlaps(const Aabb& b, double tol = 0.0) const {
        return lo.x <= b.hi.x + tol && b.lo.x <= hi.x + tol &&
               lo.y <= b.hi.y + tol && b.lo.y <= hi.y + tol &&
               lo.z <= b.hi.z + tol && b.lo.z <= hi.z + tol;
    }

    Vec3 center() const { return (lo + hi) * 0.5; }
    Vec3 extent() const { return hi - lo; }
};

double point_segment_distance_sq(const Vec3& p, const Vec3& a, const Vec3& b);

double point_triangle_distance_sq(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// Distance from p to a planar convex polygon given by its vertex loop.
double point_convex_polygon_distance_sq(const Vec3& p, std::span<const Vec3> loop);

// Signed solid angle of triangle (a,b,c) seen from p (Van Oosterom-Strackee).
double triangle_solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

// True if the two triangles intersect in more than a point/segment touch of
// measure <= tol. Shared-vertex handling is the caller's business.
bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                         const Vec3& b0, const Vec3& b1, const Vec3& b2,
                         double tol = 1e-12);

// Newell normal (unnormalized; magnitude = 2x polygon area).
Vec3 newell_normal(std::span<const Vec3> loop);

double polygon_area(std::span<const Vec3> loop);

// Signed volume contribution of one oriented polygon fan w.r.t. the origin.
double polygon_fan_signed_volume(std::span<const Vec3> loop);

struct VolumeCentroid {
    double volume = 0.0;
    Vec3 centroid{0.0, 0.0, 0.0};
    bool degenerate = false; // near-zero volume, centroid fell back to vertex average
};

// Volume and volumetric centroid of a closed polytope boundary. Each face is a
// vertex-index loop into `points`, oriented outward. Tetrahedra are fanned from
// the average of the referenced vertices.
VolumeCentroid polytope_volume_centroid(std::span<const Vec3> points,
                                        std::span<const std::vector<int>> faces);

} // namespace voromesh
