#include "voromesh/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "voromesh/parallel.hpp"
#include "voromesh/sampling.hpp"

namespace voromesh {

std::vector<std::uint8_t> assign_occupancy(const VoronoiDiagram& diagram, const TriangleMesh& gt,
                                           int threads) {
    std::vector<std::uint8_t> occ(diagram.cells.size(), 0);
    parallel_for(diagram.cells.size(), threads, [&](std::size_t i) {
        const VoronoiCell& cell = diagram.cells[i];
        occ[i] = (!cell.clipped && point_occupancy(gt, cell.barycenter)) ? 1 : 0;
    });
    return occ;
}

VoroMeshSurface extract_voromesh(const VoronoiDiagram& diagram,
                                 std::span<const std::uint8_t> occupancy) {
    if (occupancy.size() != diagram.cells.size())
        throw std::invalid_argument("extract_voromesh: occupancy length != cell count");

    VoroMeshSurface out;
    std::vector<int> vertex_map(diagram.vertices.size(), -1);
    for (const auto& face : diagram.faces) {
        if (occupancy[face.a] == occupancy[face.b]) continue;
        const bool a_inside = occupancy[face.a] != 0;

        std::vector<int> loop(face.loop.size());
        for (std::size_t v = 0; v < face.loop.size(); ++v) {
            int g = face.loop[v];
            if (vertex_map[g] < 0) {
                vertex_map[g] = static_cast<int>(out.mesh.vertices.size());
                out.mesh.vertices.push_back(diagram.vertices[g]);
            }
            loop[v] = vertex_map[g];
        }
        // Stored loops have normals a -> b; flip when b is the inside cell.
        if (!a_inside) std::reverse(loop.begin(), loop.end());
        out.mesh.faces.push_back(std::move(loop));
        out.face_pairs.emplace_back(a_inside ? face.a : face.b, a_inside ? face.b : face.a);
    }
    return out;
}

// ---- repair ----------------------------------------------------------------

namespace {

struct EdgeUse {
    int face = -1;
    bool forward = false; // traversed min(u,v) -> max(u,v)
};

struct EdgeRecord {
    int u = 0, v = 0; // u < v
    std::vector<EdgeUse> uses;
};

std::map<std::pair<int, int>, EdgeRecord> collect_edges(const std::vector<std::vector<int>>& faces) {
    std::map<std::pair<int, int>, EdgeRecord> edges;
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& loop = faces[f];
        for (std::size_t i = 0; i < loop.size(); ++i) {
            int a = loop[i], b = loop[(i + 1) % loop.size()];
            int u = std::min(a, b), v = std::max(a, b);
            EdgeRecord& rec = edges[{u, v}];
            rec.u = u;
            rec.v = v;
            rec.uses.push_back({static_cast<int>(f), a == u});
        }
    }
    return edges;
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) {
        a = find(a); b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

// Pair the faces around a nonmanifold edge into sheets: sort them angularly
// around the edge and join the two faces bounding each solid wedge (the solid
// side of a face is opposite its normal).
std::vector<std::pair<int, int>> pair_edge_faces(const EdgeRecord& rec, const PolygonMesh& mesh) {
    const std::size_t m = rec.uses.size();
    if (m == 2) return {{rec.uses[0].face, rec.uses[1].face}};

    Vec3 d = normalized(mesh.vertices[rec.v] - mesh.vertices[rec.u]);

    struct Ray {
        int use = -1;
        double angle = 0.0;
        bool solid_ccw = false;
    };
    std::vector<Ray> rays(m);
    Vec3 b1{}, b2{};
    for (std::size_t i = 0; i < m; ++i) {
        const EdgeUse& use = rec.uses[i];
        const auto& loop = mesh.faces[use.face];
        std::vector<Vec3> pts;
        pts.reserve(loop.size());
        for (int v : loop) pts.push_back(mesh.vertices[v]);
        Vec3 n = normalized(newell_normal(pts));
        Vec3 t = use.forward ? d : -d;
        Vec3 w = cross(n, t); // in-face wing direction, away from the edge
        w = normalized(w - d * dot(w, d));
        if (i == 0) { b1 = w; b2 = cross(d, b1); }
        rays[i].use = static_cast<int>(i);
        rays[i].angle = std::atan2(dot(w, b2), dot(w, b1));
        rays[i].solid_ccw = dot(cross(d, w), n) < 0.0;
    }
    std::sort(rays.begin(), rays.end(), [&](const Ray& a, const Ray& b) {
        if (a.angle != b.angle) return a.angle < b.angle;
        return rec.uses[a.use].face < rec.uses[b.use].face;
    });

    std::vector<std::pair<int, int>> pairs;
    std::vector<int> used(m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        if (!rays[i].solid_ccw) continue;
        std::size_t j = (i + 1) % m;
        pairs.emplace_back(rec.uses[rays[i].use].face, rec.uses[rays[j].use].face);
        ++used[i];
        ++used[j];
    }
    bool ok = pairs.size() * 2 == m;
    for (std::size_t i = 0; i < m && ok; ++i) ok = used[i] == 1;
    if (!ok) {
        // Inconsistent orientation data: fall back to angular-adjacent pairs.
        pairs.clear();
        for (std::size_t i = 0; i + 1 < m; i += 2)
            pairs.emplace_back(rec.uses[rays[i].use].face, rec.uses[rays[i + 1].use].face);
    }
    return pairs;
}

} // namespace

VoroMeshSurface repair_nonmanifold(const VoroMeshSurface& surface, RepairStats* stats) {
    RepairStats local;
    const PolygonMesh& mesh = surface.mesh;
    auto edges = collect_edges(mesh.faces);

    // Edge pairing: for every edge, decide which face pairs form a sheet.
    // (f,g) pairs then drive fan connectivity at both endpoints.
    struct VertexFan {
        std::vector<int> faces; // incident faces, ascending
        UnionFind uf{0};
        int local(int face) const {
            return static_cast<int>(std::lower_bound(faces.begin(), faces.end(), face) - faces.begin());
        }
    };
    std::map<int, VertexFan> fans;
    for (const auto& [key, rec] : edges) {
        for (const auto& use : rec.uses) {
            fans[rec.u].faces.push_back(use.face);
            fans[rec.v].faces.push_back(use.face);
        }
    }
    for (auto& [v, fan] : fans) {
        std::sort(fan.faces.begin(), fan.faces.end());
        fan.faces.erase(std::unique(fan.faces.begin(), fan.faces.end()), fan.faces.end());
        fan.uf = UnionFind(fan.faces.size());
    }

    for (const auto& [key, rec] : edges) {
        if (rec.uses.size() < 2) continue;
        if (rec.uses.size() > 2) ++local.nonmanifold_edges_split;
        for (const auto& [fa, fb] : pair_edge_faces(rec, mesh)) {
            fans[rec.u].uf.unite(fans[rec.u].local(fa), fans[rec.u].local(fb));
            fans[rec.v].uf.unite(fans[rec.v].local(fa), fans[rec.v].local(fb));
        }
    }

    // Duplicate each vertex once per extra fan component; faces of a component
    // move together so edges stay intact inside each sheet.
    VoroMeshSurface out;
    out.mesh.vertices = mesh.vertices;
    out.face_pairs = surface.face_pairs;
    out.mesh.faces = mesh.faces;

    for (auto& [v, fan] : fans) {
        std::map<int, int> component_vertex; // UF root -> vertex id
        for (std::size_t i = 0; i < fan.faces.size(); ++i) {
            int root = fan.uf.find(static_cast<int>(i));
            auto [it, inserted] = component_vertex.try_emplace(root, -1);
            if (inserted) {
                if (component_vertex.size() == 1) {
                    it->second = v; // first component keeps the original
                } else {
                    it->second = static_cast<int>(out.mesh.vertices.size());
                    out.mesh.vertices.push_back(mesh.vertices[v]);
                    ++local.vertices_duplicated;
                }
            }
            int nv = it->second;
            if (nv != v)
                for (int& idx : out.mesh.faces[fan.faces[i]])
                    if (idx == v) idx = nv;
        }
    }

    if (stats) *stats = local;
    return out;
}

// ---- watertightness --------------------------------------------------------

namespace {

struct TriRef {
    int v[3];
    int face;
    Aabb box;
};

// Flat median-split BVH over triangle bounding boxes.
struct Bvh {
    struct Node {
        Aabb box;
        int left = -1, right = -1;
        int begin = 0, end = 0;
    };
    std::vector<Node> nodes;
    std::vector<int> order;
    const std::vector<TriRef>* tris = nullptr;

    void build(const std::vector<TriRef>& t) {
        tris = &t;
        order.resize(t.size());
        std::iota(order.begin(), order.end(), 0);
        nodes.clear();
        if (!t.empty()) build_node(0, static_cast<int>(t.size()));
    }

    int build_node(int begin, int end) {
        int id = static_cast<int>(nodes.size());
        nodes.push_back({});
        Aabb box;
        for (int i = begin; i < end; ++i) box.expand((*tris)[order[i]].box);
        Node n;
        n.box = box;
        n.begin = begin;
        n.end = end;
        if (end - begin > 4) {
            Vec3 e = box.extent();
            int axis = 0;
            if (e.y > e.x) axis = 1;
            if (e.z > (&e.x)[axis]) axis = 2;
            int mid = (begin + end) / 2;
            std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                             [&](int a, int b) {
                                 double ca = (*tris)[a].box.center()[axis];
                                 double cb = (*tris)[b].box.center()[axis];
                                 if (ca != cb) return ca < cb;
                                 return a < b;
                             });
            n.left = build_node(begin, mid);
            n.right = build_node(mid, end);
        }
        nodes[id] = n;
        return id;
    }

    template <class F>
    void query(const Aabb& box, double tol, F&& visit) const {
        if (nodes.empty()) return;
        int stack[64];
        int top = 0;
        stack[top++] = 0;
        while (top > 0) {
            const Node& n = nodes[stack[--top]];
            if (!n.box.overlaps(box, tol)) continue;
            if (n.left < 0) {
                for (int i = n.begin; i < n.end; ++i) visit(order[i]);
            } else {
                stack[top++] = n.left;
                stack[top++] = n.right;
            }
        }
    }
};

bool share_vertex(const TriRef& a, const TriRef& b) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (a.v[i] == b.v[j]) return true;
    return false;
}

} // namespace

WatertightReport check_watertight(const VoroMeshSurface& surface, int threads) {
    WatertightReport report;
    const PolygonMesh& mesh = surface.mesh;
    report.n_vertices = mesh.vertices.size();
    report.n_faces = mesh.faces.size();

    auto edges = collect_edges(mesh.faces);
    report.n_edges = edges.size();
    bool consistent = true;
    for (const auto& [key, rec] : edges) {
        if (rec.uses.size() == 1) ++report.boundary_edges;
        if (rec.uses.size() > 2) ++report.nonmanifold_edges;
        if (rec.uses.size() == 2 && rec.uses[0].forward == rec.uses[1].forward)
            consistent = false;
    }
    report.edge_manifold = report.boundary_edges == 0 && report.nonmanifold_edges == 0 &&
                           !edges.empty();
    report.closed = report.boundary_edges == 0 && !edges.empty();
    report.consistent_orientation = consistent && report.edge_manifold;

    // Fan-triangulate and count genuinely crossing triangle pairs.
    std::vector<TriRef> tris;
    for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& loop = mesh.faces[f];
        for (std::size_t i = 1; i + 1 < loop.size(); ++i) {
            TriRef t;
            t.v[0] = loop[0];
            t.v[1] = loop[i];
            t.v[2] = loop[i + 1];
            t.face = static_cast<int>(f);
            for (int kk = 0; kk < 3; ++kk) t.box.expand(mesh.vertices[t.v[kk]]);
            tris.push_back(t);
        }
    }

    Bvh bvh;
    bvh.build(tris);
    constexpr double kTol = 1e-12;
    std::vector<long long> counts(tris.size(), 0);
    parallel_for(tris.size(), threads, [&](std::size_t i) {
        const TriRef& a = tris[i];
        long long c = 0;
        bvh.query(a.box, kTol, [&](int j) {
            if (j <= static_cast<int>(i)) return;
            const TriRef& b = tris[j];
            if (share_vertex(a, b)) return;
            if (triangles_intersect(mesh.vertices[a.v[0]], mesh.vertices[a.v[1]],
                                    mesh.vertices[a.v[2]], mesh.vertices[b.v[0]],
                                    mesh.vertices[b.v[1]], mesh.vertices[b.v[2]], kTol))
                ++c;
        });
        counts[i] = c;
    });
    for (long long c : counts) report.self_intersections += c;
    return report;
}

std::string WatertightReport::to_json() const {
    std::ostringstream os;
    os << "{\n"
       << "  \"watertight\": " << (watertight() ? "true" : "false") << ",\n"
       << "  \"edge_manifold\": " << (edge_manifold ? "true" : "false") << ",\n"
       << "  \"closed\": " << (closed ? "true" : "false") << ",\n"
       << "  \"consistent_orientation\": " << (consistent_orientation ? "true" : "false") << ",\n"
       << "  \"boundary_edges\": " << boundary_edges << ",\n"
       << "  \"nonmanifold_edges\": " << nonmanifold_edges << ",\n"
       << "  \"self_intersections\": " << self_intersections << ",\n"
       << "  \"vertices\": " << n_vertices << ",\n"
       << "  \"faces\": " << n_faces << ",\n"
       << "  \"edges\": " << n_edges << "\n"
       << "}\n";
    return os.str();
}

} // namespace voromesh
