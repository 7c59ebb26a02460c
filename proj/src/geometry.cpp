#include "voromesh/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace voromesh {

double point_segment_distance_sq(const Vec3& p, const Vec3& a, const Vec3& b) {
    Vec3 ab = b - a;
    double t = dot(p - a, ab);
    double len2 = norm_sq(ab);
    if (len2 <= 0.0 || t <= 0.0) return dist_sq(p, a);
    if (t >= len2) return dist_sq(p, b);
    return dist_sq(p, a + ab * (t / len2));
}

// Ericson, Real-Time Collision Detection, closest point on triangle.
double point_triangle_distance_sq(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return dist_sq(p, a);

    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return dist_sq(p, b);

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        double v = d1 / (d1 - d3);
        return dist_sq(p, a + ab * v);
    }

    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return dist_sq(p, c);

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        double w = d2 / (d2 - d6);
        return dist_sq(p, a + ac * w);
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return dist_sq(p, b + (c - b) * w);
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return dist_sq(p, a + ab * v + ac * w);
}

double point_convex_polygon_distance_sq(const Vec3& p, std::span<const Vec3> loop) {
    const std::size_t n = loop.size();
    if (n == 0) return 1e300;
    if (n == 1) return dist_sq(p, loop[0]);
    if (n == 2) return point_segment_distance_sq(p, loop[0], loop[1]);

    Vec3 nrm = newell_normal(loop);
    double n2 = norm_sq(nrm);
    if (n2 <= 0.0) {
        double best = 1e300;
        for (std::size_t i = 0; i < n; ++i)
            best = std::min(best, point_segment_distance_sq(p, loop[i], loop[(i + 1) % n]));
        return best;
    }

    // Projection onto the polygon plane; inside iff left of every edge.
    double d = dot(p - loop[0], nrm) / n2;
    Vec3 proj = p - nrm * d;
    bool inside = true;
    for (std::size_t i = 0; i < n && inside; ++i) {
        Vec3 e = loop[(i + 1) % n] - loop[i];
        if (dot(cross(e, proj - loop[i]), nrm) < 0.0) inside = false;
    }
    if (inside) return d * d * n2;

    double best = 1e300;
    for (std::size_t i = 0; i < n; ++i)
        best = std::min(best, point_segment_distance_sq(p, loop[i], loop[(i + 1) % n]));
    return best;
}

double triangle_solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ra = a - p, rb = b - p, rc = c - p;
    double la = norm(ra), lb = norm(rb), lc = norm(rc);
    double num = dot(ra, cross(rb, rc));
    double den = la * lb * lc + dot(ra, rb) * lc + dot(rb, rc) * la + dot(rc, ra) * lb;
    return 2.0 * std::atan2(num, den);
}

Vec3 newell_normal(std::span<const Vec3> loop) {
    Vec3 n{0.0, 0.0, 0.0};
    const std::size_t k = loop.size();
    for (std::size_t i = 0; i < k; ++i) {
        const Vec3& a = loop[i];
        const Vec3& b = loop[(i + 1) % k];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    return n;
}

double polygon_area(std::span<const Vec3> loop) {
    return 0.5 * norm(newell_normal(loop));
}

double polygon_fan_signed_volume(std::span<const Vec3> loop) {
    double v = 0.0;
    for (std::size_t i = 1; i + 1 < loop.size(); ++i)
        v += dot(loop[0], cross(loop[i], loop[i + 1])) / 6.0;
    return v;
}

VolumeCentroid polytope_volume_centroid(std::span<const Vec3> points,
                                        std::span<const std::vector<int>> faces) {
    VolumeCentroid out;

    // Apex = average of the referenced vertices (not all of `points`).
    Vec3 apex{0.0, 0.0, 0.0};
    std::size_t count = 0;
    std::vector<char> seen(points.size(), 0);
    for (const auto& f : faces) {
        for (int vi : f) {
            if (!seen[static_cast<std::size_t>(vi)]) {
                seen[static_cast<std::size_t>(vi)] = 1;
                apex += points[static_cast<std::size_t>(vi)];
                ++count;
            }
        }
    }
    if (count == 0) { out.degenerate = true; return out; }
    apex = apex / static_cast<double>(count);

    double vol = 0.0;
    Vec3 moment{0.0, 0.0, 0.0};
    for (const auto& f : faces) {
        for (std::size_t i = 1; i + 1 < f.size(); ++i) {
            Vec3 a = points[static_cast<std::size_t>(f[0])] - apex;
            Vec3 b = points[static_cast<std::size_t>(f[i])] - apex;
            Vec3 c = points[static_cast<std::size_t>(f[i + 1])] - apex;
            double v = dot(a, cross(b, c)) / 6.0;
            vol += v;
            // Tet centroid = apex + (a+b+c)/4 relative to apex.
            moment += (a + b + c) * (0.25 * v);
        }
    }

    out.volume = vol;
    if (std::abs(vol) < 1e-15) {
        out.degenerate = true;
        out.centroid = apex;
    } else {
        out.centroid = apex + moment / vol;
    }
    return out;
}

namespace {

// Interval of triangle (v0,v1,v2) on the intersection line, given signed
// distances to the other plane. Projection along the dominant axis of d.
void interval_on_line(const Vec3& v0, const Vec3& v1, const Vec3& v2,
                      double d0, double d1, double d2, const Vec3& dir,
                      double& tmin, double& tmax) {
    double p0 = dot(dir, v0), p1 = dot(dir, v1), p2 = dot(dir, v2);
    double ts[2];
    int k = 0;
    auto cut = [&](double pa, double da, double pb, double db) {
        if ((da > 0.0) != (db > 0.0) && k < 2) {
            ts[k++] = pa + (pb - pa) * (da / (da - db));
        }
    };
    cut(p0, d0, p1, d1);
    cut(p1, d1, p2, d2);
    cut(p2, d2, p0, d0);
    if (k < 2) { tmin = 1.0; tmax = 0.0; return; } // grazing; treat as empty
    tmin = std::min(ts[0], ts[1]);
    tmax = std::max(ts[0], ts[1]);
}

bool coplanar_overlap(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                      const Vec3& b0, const Vec3& b1, const Vec3& b2,
                      const Vec3& n, double tol) {
    // Project to the dominant axis plane and run a 2D SAT on both triangles.
    int axis = 0;
    Vec3 an{std::abs(n.x), std::abs(n.y), std::abs(n.z)};
    if (an.y > an.x) axis = 1;
    if (an.z > (&an.x)[axis]) axis = 2;
    int u = (axis + 1) % 3, v = (axis + 2) % 3;

    double ax[3] = {a0[u], a1[u], a2[u]}, ay[3] = {a0[v], a1[v], a2[v]};
    double bx[3] = {b0[u], b1[u], b2[u]}, by[3] = {b0[v], b1[v], b2[v]};

    auto separated = [&](const double* px, const double* py, const double* qx, const double* qy) {
        for (int i = 0; i < 3; ++i) {
            int j = (i + 1) % 3;
            double ex = px[j] - px[i], ey = py[j] - py[i];
            // Edge normal
            double nx = -ey, ny = ex;
            double pmin = 1e300, pmax = -1e300, qmin = 1e300, qmax = -1e300;
            for (int m = 0; m < 3; ++m) {
                double dp = nx * px[m] + ny * py[m];
                double dq = nx * qx[m] + ny * qy[m];
                pmin = std::min(pmin, dp); pmax = std::max(pmax, dp);
                qmin = std::min(qmin, dq); qmax = std::max(qmax, dq);
            }
            if (pmax <= qmin + tol || qmax <= pmin + tol) return true;
        }
        return false;
    };
    return !separated(ax, ay, bx, by) && !separated(bx, by, ax, ay);
}

} // namespace

bool triangles_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2,
                         const Vec3& b0, const Vec3& b1, const Vec3& b2,
                         double tol) {
    Vec3 nb = cross(b1 - b0, b2 - b0);
    double da0 = dot(nb, a0 - b0), da1 = dot(nb, a1 - b0), da2 = dot(nb, a2 - b0);
    double sb = norm(nb);
    double ea = tol * std::max(1.0, sb);

    Vec3 na = cross(a1 - a0, a2 - a0);
    double db0 = dot(na, b0 - a0), db1 = dot(na, b1 - a0), db2 = dot(na, b2 - a0);
    double sa = norm(na);
    double eb = tol * std::max(1.0, sa);

    if (sa <= tol || sb <= tol) return false; // degenerate triangle: ignore

    bool coplanar = std::abs(da0) <= ea && std::abs(da1) <= ea && std::abs(da2) <= ea;
    if (coplanar) return coplanar_overlap(a0, a1, a2, b0, b1, b2, nb, tol);

    // Interpenetration needs each triangle strictly on both sides of the
    // other's plane; tangential contact (shared edges or vertices of repaired
    // sheets) does not count.
    bool a_spans = (da0 > ea || da1 > ea || da2 > ea) && (da0 < -ea || da1 < -ea || da2 < -ea);
    bool b_spans = (db0 > eb || db1 > eb || db2 > eb) && (db0 < -eb || db1 < -eb || db2 < -eb);
    if (!a_spans || !b_spans) return false;

    Vec3 dir = cross(na, nb);
    double dl = norm(dir);
    if (dl < tol * sa * sb) return false; // parallel, not coplanar

    double amin, amax, bmin, bmax;
    interval_on_line(a0, a1, a2, da0, da1, da2, dir, amin, amax);
    interval_on_line(b0, b1, b2, db0, db1, db2, dir, bmin, bmax);
    if (amin > amax || bmin > bmax) return false;

    // Require genuine interval overlap (scaled) as well.
    double overlap = std::min(amax, bmax) - std::max(amin, bmin);
    return overlap > tol * std::max(1.0, dl);
}

} // namespace voromesh
