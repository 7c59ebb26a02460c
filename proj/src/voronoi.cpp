#include "voromesh/voronoi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <string>

#include "voromesh/geometry.hpp"
#include "voromesh/parallel.hpp"

namespace voromesh {

namespace {

// Cut decisions are strict float comparisons (d > 0), not epsilon bands: an
// epsilon band flips independently between the two cells sharing a plane, and
// near-coplanar incidences amplify a flip's combinatorial reach by band/theta.
// Strict comparisons leave only ~1e-16 evaluation noise, which the vertex
// merge below absorbs; exactly-degenerate inputs (lattices) stay consistent
// because their signed distances are exact zeros in both cells.
constexpr double kVertexMergeTol = 1e-9;

struct Plane {
    Vec3 n;       // unit normal
    double c = 0; // plane: n.x = c; inside halfspace: n.x - c <= 0
    int id = 0;
};

Plane bisector_plane(std::span<const Vec3> q, int i, int j) {
    // Built from the sorted pair so every cell sees the identical equation.
    int a = std::min(i, j), b = std::max(i, j);
    Vec3 e = q[b] - q[a];
    double len = norm(e);
    Plane p;
    p.n = e / len;
    p.c = dot(p.n, (q[a] + q[b]) * 0.5);
    p.id = j;
    if (j < i) { p.n = -p.n; p.c = -p.c; } // flip so the inside halfspace holds q_i
    return p;
}

std::array<int, 3> sorted3(int a, int b, int c) {
    std::array<int, 3> t{a, b, c};
    std::sort(t.begin(), t.end());
    return t;
}

// ---- cell clipping -------------------------------------------------------

struct CellBuilder {
    ConvexCell cell;
    std::map<std::array<int, 3>, int> vertex_by_planes;
    std::vector<double> dist; // per-vertex signed distance scratch

    int intern(const std::array<int, 3>& planes, const Vec3& pos) {
        auto [it, inserted] = vertex_by_planes.try_emplace(planes, static_cast<int>(cell.vertices.size()));
        if (inserted) cell.vertices.push_back({pos, planes});
        return it->second;
    }

    void init_box(const ClipBox& box) {
        int corner_ids[8];
        for (int cix = 0; cix < 8; ++cix) {
            int ix = cix & 1, iy = (cix >> 1) & 1, iz = (cix >> 2) & 1;
            Vec3 pos{ix ? box.hi.x : box.lo.x, iy ? box.hi.y : box.lo.y, iz ? box.hi.z : box.lo.z};
            auto planes = sorted3(box_plane_id(0, ix), box_plane_id(1, iy), box_plane_id(2, iz));
            corner_ids[cix] = intern(planes, pos);
        }
        auto corner = [&](int ix, int iy, int iz) { return corner_ids[ix | (iy << 1) | (iz << 2)]; };
        auto face = [&](int plane, std::array<int, 4> loop) {
            cell.faces.push_back({plane, {loop[0], loop[1], loop[2], loop[3]}});
        };
        face(box_plane_id(0, false), {corner(0, 0, 0), corner(0, 0, 1), corner(0, 1, 1), corner(0, 1, 0)});
        face(box_plane_id(0, true),  {corner(1, 0, 0), corner(1, 1, 0), corner(1, 1, 1), corner(1, 0, 1)});
        face(box_plane_id(1, false), {corner(0, 0, 0), corner(1, 0, 0), corner(1, 0, 1), corner(0, 0, 1)});
        face(box_plane_id(1, true),  {corner(0, 1, 0), corner(0, 1, 1), corner(1, 1, 1), corner(1, 1, 0)});
        face(box_plane_id(2, false), {corner(0, 0, 0), corner(0, 1, 0), corner(1, 1, 0), corner(1, 0, 0)});
        face(box_plane_id(2, true),  {corner(0, 0, 1), corner(1, 0, 1), corner(1, 1, 1), corner(0, 1, 1)});
    }

    // Clip by `plane`, keeping the n.x - c <= 0 side. Returns true if cut.
    bool clip(const Plane& plane) {
        dist.resize(cell.vertices.size());
        bool any_out = false, any_in = false;
        for (std::size_t v = 0; v < cell.vertices.size(); ++v)
            dist[v] = dot(plane.n, cell.vertices[v].pos) - plane.c;
        for (const auto& f : cell.faces)
            for (int v : f.loop) {
                if (dist[v] > 0.0) any_out = true;
                else any_in = true;
            }
        if (!any_out) return false;
        if (!any_in) { cell.ok = false; return false; }

        auto is_out = [&](int v) { return dist[v] > 0.0; };

        // Crossing vertex on edge (a,b) of face f; the edge's second plane is
        // the one a and b share besides f's own.
        auto crossing = [&](int a, int b, int face_plane) {
            const auto& pa = cell.vertices[a].planes;
            const auto& pb = cell.vertices[b].planes;
            int other = face_plane;
            for (int p : pa) {
                if (p == face_plane) continue;
                if (p == pb[0] || p == pb[1] || p == pb[2]) { other = p; break; }
            }
            double da = dist[a], db = dist[b];
            double t = da / (da - db);
            t = std::clamp(t, 0.0, 1.0);
            Vec3 pos = cell.vertices[a].pos + (cell.vertices[b].pos - cell.vertices[a].pos) * t;
            return intern(sorted3(face_plane, other, plane.id), pos);
        };

        std::vector<CellFace> kept;
        kept.reserve(cell.faces.size() + 1);
        std::map<int, int> chord; // new-face edge: enter vertex -> exit vertex

        for (auto& f : cell.faces) {
            const auto& loop = f.loop;
            bool all_in = true, all_out = true;
            for (int v : loop) (is_out(v) ? all_in : all_out) = false;
            if (all_in) { kept.push_back(std::move(f)); continue; }
            if (all_out) continue;

            std::vector<int> out_loop;
            out_loop.reserve(loop.size() + 2);
            int enter = -1, exit = -1;
            for (std::size_t i = 0; i < loop.size(); ++i) {
                int prev = loop[(i + loop.size() - 1) % loop.size()];
                int cur = loop[i];
                bool pout = is_out(prev), cout = is_out(cur);
                if (!pout && !cout) {
                    out_loop.push_back(cur);
                } else if (!pout && cout) {
                    exit = crossing(prev, cur, f.plane);
                    out_loop.push_back(exit);
                } else if (pout && !cout) {
                    enter = crossing(prev, cur, f.plane);
                    out_loop.push_back(enter);
                    out_loop.push_back(cur);
                }
            }
            if (enter >= 0 && exit >= 0 && enter != exit) chord[enter] = exit;
            if (out_loop.size() >= 3) kept.push_back({f.plane, std::move(out_loop)});
        }

        // Stitch the chords into the polygon of the cutting plane. In the
        // clean case every chord's exit is another chord's enter.
        if (chord.size() >= 3) {
            std::vector<int> loop;
            loop.reserve(chord.size());
            int start = chord.begin()->first;
            int cur = start;
            for (std::size_t guard = 0; guard <= chord.size(); ++guard) {
                loop.push_back(cur);
                auto it = chord.find(cur);
                if (it == chord.end()) break;
                cur = it->second;
                if (cur == start) break;
            }
            if (cur != start || loop.size() < chord.size()) {
                // Inconsistent eps decisions on a grazing cut: fall back to
                // angular order around the plane normal.
                loop.clear();
                for (const auto& [a, b] : chord) { loop.push_back(a); loop.push_back(b); }
                std::sort(loop.begin(), loop.end());
                loop.erase(std::unique(loop.begin(), loop.end()), loop.end());
                Vec3 centroid{};
                for (int v : loop) centroid += cell.vertices[v].pos;
                centroid = centroid / static_cast<double>(loop.size());
                Vec3 ref = normalized(cell.vertices[loop[0]].pos - centroid);
                Vec3 up = cross(plane.n, ref);
                std::sort(loop.begin(), loop.end(), [&](int a, int b) {
                    Vec3 da = cell.vertices[a].pos - centroid;
                    Vec3 db = cell.vertices[b].pos - centroid;
                    double ta = std::atan2(dot(da, up), dot(da, ref));
                    double tb = std::atan2(dot(db, up), dot(db, ref));
                    if (ta != tb) return ta < tb;
                    return a < b;
                });
                // Normal orientation: Newell normal must align with plane.n.
                std::vector<Vec3> pts;
                for (int v : loop) pts.push_back(cell.vertices[v].pos);
                if (dot(newell_normal(pts), plane.n) < 0.0)
                    std::reverse(loop.begin(), loop.end());
            }
            if (loop.size() >= 3) kept.push_back({plane.id, std::move(loop)});
        }

        cell.faces = std::move(kept);
        return true;
    }

    // Drop orphaned pool vertices and remap loops.
    void compact() {
        std::vector<int> remap(cell.vertices.size(), -1);
        std::vector<CellVertex> verts;
        for (auto& f : cell.faces)
            for (int& v : f.loop) {
                if (remap[v] < 0) {
                    remap[v] = static_cast<int>(verts.size());
                    verts.push_back(cell.vertices[v]);
                }
                v = remap[v];
            }
        cell.vertices = std::move(verts);
    }

    double max_vertex_dist_sq(const Vec3& q) const {
        double best = 0.0;
        for (const auto& f : cell.faces)
            for (int v : f.loop) best = std::max(best, dist_sq(cell.vertices[v].pos, q));
        return best;
    }
};

} // namespace

ClipBox ClipBox::around(std::span<const Vec3> points, double margin) {
    Aabb b;
    for (const auto& p : points) b.expand(p);
    if (points.empty()) return ClipBox{};
    Vec3 e = b.extent();
    double pad = margin * std::max({e.x, e.y, e.z});
    if (pad <= 0.0) pad = 0.5; // degenerate input: all points coincide
    return ClipBox{b.lo - Vec3{pad, pad, pad}, b.hi + Vec3{pad, pad, pad}};
}

bool ClipBox::contains(const Vec3& p, double tol) const {
    return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol &&
           p.z >= lo.z - tol && p.z <= hi.z + tol;
}

double ClipBox::volume() const {
    Vec3 e = extent();
    return e.x * e.y * e.z;
}

ConvexCell compute_cell(std::span<const Vec3> positions, int i, const ClipBox& box,
                        const KdTree& index) {
    const int n = static_cast<int>(positions.size());
    CellBuilder builder;
    builder.cell.generator = i;
    builder.init_box(box);

    const Vec3 qi = positions[i];
    double max_r2 = builder.max_vertex_dist_sq(qi);

    int fetched = 0;
    int k = std::min(n, 9);
    std::vector<Neighbor> nn;
    bool done = false;
    while (!done) {
        index.query_into(qi, k, nn);
        int start = fetched;
        fetched = static_cast<int>(nn.size());
        for (int c = start; c < fetched; ++c) {
            const Neighbor& nb = nn[c];
            if (nb.index == i) continue;
            if (nb.dist_sq > 4.0 * max_r2) { done = true; break; } // security radius
            if (nb.dist_sq <= 0.0) { builder.cell.ok = false; done = true; break; }
            if (builder.clip(bisector_plane(positions, i, nb.index))) {
                ++builder.cell.neighbors_clipped;
                max_r2 = builder.max_vertex_dist_sq(qi);
            }
            if (!builder.cell.ok) { done = true; break; }
        }
        if (fetched >= n) done = true;
        k = std::min(n, k * 2);
    }

    builder.compact();
    return builder.cell;
}

// ---- diagram assembly ----------------------------------------------------

namespace {

struct Key4Hash {
    std::size_t operator()(const std::array<int, 4>& k) const {
        std::uint64_t h = 1469598103934665603ull;
        for (int v : k) {
            h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(v));
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

std::array<int, 4> global_key(int owner, const std::array<int, 3>& planes) {
    std::array<int, 4> k{owner, planes[0], planes[1], planes[2]};
    std::sort(k.begin(), k.end());
    return k;
}

std::uint64_t pair_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(b));
}

// Merge vertices closer than tol via a quantized hash grid (27-cell probe).
// Returns the representative id (lowest id in each group) per vertex.
std::vector<int> merge_close_vertices(const std::vector<Vec3>& verts, double tol) {
    struct CellHash {
        std::size_t operator()(const std::array<long long, 3>& c) const {
            std::uint64_t h = 1469598103934665603ull;
            for (long long v : c) {
                h ^= static_cast<std::uint64_t>(v);
                h *= 1099511628211ull;
            }
            return static_cast<std::size_t>(h);
        }
    };
    std::unordered_map<std::array<long long, 3>, std::vector<int>, CellHash> grid;
    grid.reserve(verts.size() * 2);
    auto cell_of = [&](const Vec3& p) {
        return std::array<long long, 3>{static_cast<long long>(std::floor(p.x / tol)),
                                        static_cast<long long>(std::floor(p.y / tol)),
                                        static_cast<long long>(std::floor(p.z / tol))};
    };

    std::vector<int> rep(verts.size());
    for (std::size_t v = 0; v < verts.size(); ++v) {
        rep[v] = static_cast<int>(v);
        auto c = cell_of(verts[v]);
        int found = -1;
        for (long long dx = -1; dx <= 1 && found < 0; ++dx)
            for (long long dy = -1; dy <= 1 && found < 0; ++dy)
                for (long long dz = -1; dz <= 1 && found < 0; ++dz) {
                    auto it = grid.find({c[0] + dx, c[1] + dy, c[2] + dz});
                    if (it == grid.end()) continue;
                    for (int u : it->second)
                        if (dist_sq(verts[u], verts[v]) <= tol * tol) { found = rep[u]; break; }
                }
        if (found >= 0) rep[v] = found;
        else grid[c].push_back(static_cast<int>(v));
    }
    return rep;
}

// Remap a loop, collapse consecutive duplicates (cyclically).
std::vector<int> clean_loop(const std::vector<int>& loop, const std::vector<int>& remap) {
    std::vector<int> out;
    out.reserve(loop.size());
    for (int v : loop) {
        int r = remap[v];
        if (out.empty() || out.back() != r) out.push_back(r);
    }
    while (out.size() > 1 && out.front() == out.back()) out.pop_back();
    return out;
}

} // namespace

int VoronoiDiagram::face_index(int i, int j) const {
    auto it = pair_to_face.find(pair_key(std::min(i, j), std::max(i, j)));
    return it == pair_to_face.end() ? -1 : it->second;
}

std::vector<std::vector<int>> VoronoiDiagram::cell_boundary_loops(int c) const {
    std::vector<std::vector<int>> loops;
    const VoronoiCell& cell = cells[c];
    for (int f : cell.face_ids) {
        const VoronoiFace& face = faces[f];
        if (face.a == c) {
            loops.push_back(face.loop);
        } else {
            loops.emplace_back(face.loop.rbegin(), face.loop.rend());
        }
    }
    for (const auto& bf : cell.box_faces) loops.push_back(bf);
    return loops;
}

VoronoiDiagram compute_diagram(const GeneratorSet& generators, const ClipBox& box, int threads) {
    const std::size_t n = generators.size();
    if (n < 1) throw std::invalid_argument("compute_diagram: no generators");
    std::span<const Vec3> q(generators.positions);
    for (const auto& p : q)
        if (!box.contains(p)) throw std::invalid_argument("compute_diagram: generator outside clip box");

    KdTree index(q);
    if (n >= 2 && index.min_pairwise_distance() <= 1e-12)
        throw std::invalid_argument("compute_diagram: coincident generators");

    std::vector<ConvexCell> local(n);
    parallel_for(n, threads, [&](std::size_t i) {
        local[i] = compute_cell(q, static_cast<int>(i), box, index);
    });
    for (const auto& c : local)
        if (!c.ok) throw std::runtime_error("compute_diagram: degenerate cell configuration");

    VoronoiDiagram d;
    d.box = box;
    d.cells.resize(n);

    std::unordered_map<std::array<int, 4>, int, Key4Hash> key_to_id;
    key_to_id.reserve(n * 8);

    // Shared vertices are interned by canonical key; the first incident cell's
    // locally clipped position is stored once and reused bit-identically by
    // every other cell. (Local positions come from near-orthogonal plane
    // intersections, so they stay well conditioned even when the key's four
    // generators are almost cospherical.)
    auto intern_vertex = [&](int owner, const CellVertex& cv) {
        auto key = global_key(owner, cv.planes);
        auto [it, inserted] = key_to_id.try_emplace(key, static_cast<int>(d.vertices.size()));
        if (inserted) {
            d.vertices.push_back(cv.pos);
            d.vertex_keys.push_back(key);
        }
        return it->second;
    };

    // Gather faces; the lower-indexed cell of each pair wins (cells are merged
    // in ascending order, so a first write comes from the smaller cell if it
    // saw the face at all).
    for (std::size_t i = 0; i < n; ++i) {
        const ConvexCell& cell = local[i];
        std::vector<int> vert_map(cell.vertices.size());
        for (std::size_t v = 0; v < cell.vertices.size(); ++v)
            vert_map[v] = intern_vertex(static_cast<int>(i), cell.vertices[v]);

        for (const auto& f : cell.faces) {
            std::vector<int> loop(f.loop.size());
            for (std::size_t v = 0; v < f.loop.size(); ++v) loop[v] = vert_map[f.loop[v]];

            if (f.plane < 0) {
                d.cells[i].box_faces.push_back(std::move(loop));
                continue;
            }
            int a = std::min<int>(static_cast<int>(i), f.plane);
            int b = std::max<int>(static_cast<int>(i), f.plane);
            auto [it, inserted] = d.pair_to_face.try_emplace(pair_key(a, b),
                                                             static_cast<int>(d.faces.size()));
            if (!inserted) continue;
            if (static_cast<int>(i) != a) std::reverse(loop.begin(), loop.end());
            d.faces.push_back({a, b, std::move(loop)});
        }
    }

    // Cospherical safety net: collapse near-coincident vertices.
    std::vector<int> rep = merge_close_vertices(d.vertices, kVertexMergeTol);

    std::vector<VoronoiFace> faces;
    faces.reserve(d.faces.size());
    std::unordered_map<std::uint64_t, int> pair_to_face;
    pair_to_face.reserve(d.faces.size() * 2);
    for (auto& f : d.faces) {
        std::vector<int> loop = clean_loop(f.loop, rep);
        if (loop.size() < 3) continue;
        pair_to_face[pair_key(f.a, f.b)] = static_cast<int>(faces.size());
        faces.push_back({f.a, f.b, std::move(loop)});
    }
    d.faces = std::move(faces);
    d.pair_to_face = std::move(pair_to_face);

    for (auto& cell : d.cells) {
        std::vector<std::vector<int>> box_faces;
        for (const auto& bf : cell.box_faces) {
            std::vector<int> loop = clean_loop(bf, rep);
            if (loop.size() >= 3) box_faces.push_back(std::move(loop));
        }
        cell.box_faces = std::move(box_faces);
    }

    // Compact vertices to the referenced set.
    std::vector<int> compacted(d.vertices.size(), -1);
    std::vector<Vec3> verts;
    std::vector<std::array<int, 4>> keys;
    auto touch = [&](std::vector<int>& loop) {
        for (int& v : loop) {
            if (compacted[v] < 0) {
                compacted[v] = static_cast<int>(verts.size());
                verts.push_back(d.vertices[v]);
                keys.push_back(d.vertex_keys[v]);
            }
            v = compacted[v];
        }
    };
    for (auto& f : d.faces) touch(f.loop);
    for (auto& cell : d.cells)
        for (auto& bf : cell.box_faces) touch(bf);
    d.vertices = std::move(verts);
    d.vertex_keys = std::move(keys);

    // Per-cell assembly: shared-face references, clip flag, volume, centroid.
    for (int f = 0; f < static_cast<int>(d.faces.size()); ++f) {
        d.cells[d.faces[f].a].face_ids.push_back(f);
        d.cells[d.faces[f].b].face_ids.push_back(f);
    }

    for (std::size_t i = 0; i < n; ++i) {
        VoronoiCell& cell = d.cells[i];
        auto loops = d.cell_boundary_loops(static_cast<int>(i));

        for (const auto& loop : loops) {
            for (int v : loop) {
                const Vec3& p = d.vertices[v];
                for (int a = 0; a < 3 && !cell.clipped; ++a)
                    if (std::abs(p[a] - box.lo[a]) <= 1e-9 || std::abs(p[a] - box.hi[a]) <= 1e-9)
                        cell.clipped = true;
            }
            if (cell.clipped) break;
        }

        VolumeCentroid vc = polytope_volume_centroid(d.vertices, loops);
        cell.volume = vc.volume;
        cell.barycenter = vc.centroid;
        cell.barycenter_degenerate = vc.degenerate;
    }
    return d;
}

Vec3 cell_barycenter(const VoronoiDiagram& diagram, int cell) {
    return diagram.cells[cell].barycenter;
}

double distance_to_faces(const VoronoiDiagram& diagram, const Vec3& p) {
    double best = 1e300;
    std::vector<Vec3> loop;
    for (const auto& f : diagram.faces) {
        loop.clear();
        for (int v : f.loop) loop.push_back(diagram.vertices[v]);
        best = std::min(best, point_convex_polygon_distance_sq(p, loop));
    }
    return std::sqrt(best);
}

void save_diagram_dump(const VoronoiDiagram& diagram, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    std::fprintf(f, "vertices %zu\n", diagram.vertices.size());
    for (const auto& v : diagram.vertices)
        std::fprintf(f, "%.17g %.17g %.17g\n", v.x, v.y, v.z);
    std::fprintf(f, "faces %zu\n", diagram.faces.size());
    for (const auto& face : diagram.faces) {
        std::fprintf(f, "%d %d :", face.a, face.b);
        for (int v : face.loop) std::fprintf(f, " %d", v);
        std::fputc('\n', f);
    }
    std::fclose(f);
}

} // namespace voromesh
