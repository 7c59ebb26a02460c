#include "voromesh/mesh_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace voromesh {

namespace {

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
    throw MeshIoError(path + ":" + std::to_string(line) + ": " + what);
}

// Fan-triangulate one polygon, dropping faces with repeated indices.
void emit_polygon(TriangleMesh& mesh, const std::vector<int>& poly, LoadReport& report,
                  const std::string& path, int line) {
    if (poly.size() < 3) parse_fail(path, line, "face with fewer than 3 vertices");
    for (int idx : poly) {
        if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size()))
            parse_fail(path, line, "vertex index " + std::to_string(idx + 1) + " out of range");
    }
    for (std::size_t i = 0; i < poly.size(); ++i)
        for (std::size_t j = i + 1; j < poly.size(); ++j)
            if (poly[i] == poly[j]) {
                ++report.degenerate_faces_dropped;
                return;
            }
    if (poly.size() > 3) ++report.polygons_triangulated;
    for (std::size_t i = 1; i + 1 < poly.size(); ++i)
        mesh.faces.push_back({poly[0], poly[i], poly[i + 1]});
}

TriangleMesh load_obj(std::istream& in, const std::string& path, LoadReport& report) {
    TriangleMesh mesh;
    std::string lineStr;
    int line = 0;
    while (std::getline(in, lineStr)) {
        ++line;
        std::istringstream ls(lineStr);
        std::string tag;
        if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z)) parse_fail(path, line, "malformed vertex");
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string tok;
            while (ls >> tok) {
                // "i", "i/t", "i/t/n", "i//n" -- only the vertex index matters.
                std::size_t slash = tok.find('/');
                std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                int idx = 0;
                try {
                    idx = std::stoi(head);
                } catch (const std::exception&) {
                    parse_fail(path, line, "malformed face index '" + tok + "'");
                }
                if (idx < 0) idx = static_cast<int>(mesh.vertices.size()) + idx + 1;
                poly.push_back(idx - 1);
            }
            emit_polygon(mesh, poly, report, path, line);
        }
        // Other records (vn, vt, usemtl, ...) are ignored.
    }
    return mesh;
}

TriangleMesh load_off(std::istream& in, const std::string& path, LoadReport& report) {
    // Token stream skipping '#' comments; `line` is where the last token began.
    int cursor = 1, line = 1;
    auto next_token = [&](std::string& tok) -> bool {
        tok.clear();
        int c;
        while ((c = in.get()) != EOF) {
            if (c == '\n') { ++cursor; continue; }
            if (std::isspace(c)) continue;
            if (c == '#') {
                while ((c = in.get()) != EOF && c != '\n') {}
                if (c == '\n') ++cursor;
                continue;
            }
            break;
        }
        if (c == EOF) { line = cursor; return false; }
        line = cursor;
        tok.push_back(static_cast<char>(c));
        while ((c = in.get()) != EOF && !std::isspace(c)) tok.push_back(static_cast<char>(c));
        if (c == '\n') ++cursor;
        return true;
    };

    std::string tok;
    if (!next_token(tok)) parse_fail(path, line, "empty OFF file");
    if (tok == "OFF") {
        if (!next_token(tok)) parse_fail(path, line, "truncated OFF header");
    }
    auto to_int = [&](const std::string& s) {
        try { return std::stoi(s); } catch (const std::exception&) { parse_fail(path, line, "expected integer, got '" + s + "'"); }
    };
    auto to_double = [&](const std::string& s) {
        try { return std::stod(s); } catch (const std::exception&) { parse_fail(path, line, "expected number, got '" + s + "'"); }
    };

    int nv = to_int(tok);
    if (!next_token(tok)) parse_fail(path, line, "truncated OFF header");
    int nf = to_int(tok);
    if (!next_token(tok)) parse_fail(path, line, "truncated OFF header");
    (void)to_int(tok); // edge count, unused

    TriangleMesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(std::max(nv, 0)));
    for (int i = 0; i < nv; ++i) {
        Vec3 p;
        for (int k = 0; k < 3; ++k) {
            if (!next_token(tok)) parse_fail(path, line, "truncated vertex list");
            p[k] = to_double(tok);
        }
        mesh.vertices.push_back(p);
    }
    for (int i = 0; i < nf; ++i) {
        if (!next_token(tok)) parse_fail(path, line, "truncated face list");
        int cnt = to_int(tok);
        if (cnt < 3) parse_fail(path, line, "face with fewer than 3 vertices");
        std::vector<int> poly(static_cast<std::size_t>(cnt));
        for (int k = 0; k < cnt; ++k) {
            if (!next_token(tok)) parse_fail(path, line, "truncated face list");
            poly[static_cast<std::size_t>(k)] = to_int(tok);
        }
        emit_polygon(mesh, poly, report, path, line);
    }
    return mesh;
}

bool has_suffix(const std::string& s, const std::string& suf) {
    if (s.size() < suf.size()) return false;
    for (std::size_t i = 0; i < suf.size(); ++i) {
        char a = s[s.size() - suf.size() + i];
        if (std::tolower(static_cast<unsigned char>(a)) != suf[i]) return false;
    }
    return true;
}

void count_zero_area(const TriangleMesh& mesh, LoadReport& report) {
    for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        if (mesh.face_area(f) == 0.0) ++report.zero_area_faces;
}

void write_vertex(std::FILE* f, const Vec3& v) {
    std::fprintf(f, "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
}

struct FileCloser {
    std::FILE* f;
    ~FileCloser() { if (f) std::fclose(f); }
};

} // namespace

TriangleMesh load_mesh(const std::string& path, LoadReport* report) {
    std::ifstream in(path);
    if (!in) throw MeshIoError("cannot open '" + path + "'");

    LoadReport local;
    TriangleMesh mesh;
    if (has_suffix(path, ".off")) {
        mesh = load_off(in, path, local);
    } else if (has_suffix(path, ".obj")) {
        mesh = load_obj(in, path, local);
    } else {
        // Sniff: OFF files start with "OFF" or a counts line.
        std::string head;
        in >> head;
        in.clear();
        in.seekg(0);
        mesh = (head == "OFF") ? load_off(in, path, local) : load_obj(in, path, local);
    }
    if (mesh.vertices.empty() || mesh.faces.empty())
        throw MeshIoError("'" + path + "': empty mesh");
    count_zero_area(mesh, local);
    if (report) *report = local;
    return mesh;
}

std::pair<TriangleMesh, NormalizationTransform> normalize(const TriangleMesh& mesh) {
    if (mesh.vertices.empty()) throw MeshIoError("normalize: empty mesh");
    Aabb b = mesh.bounds();
    Vec3 ext = b.extent();
    double longest = std::max({ext.x, ext.y, ext.z});
    if (longest <= 0.0) throw MeshIoError("normalize: mesh has zero extent");

    NormalizationTransform t;
    t.translation = -b.center();
    t.scale = 1.0 / longest;

    TriangleMesh out = mesh;
    for (auto& v : out.vertices) v = t.apply(v);
    return {std::move(out), t};
}

void save_polygon_mesh(const PolygonMesh& mesh, const std::string& path) {
    for (const auto& loop : mesh.faces)
        for (int idx : loop)
            if (idx < 0 || idx >= static_cast<int>(mesh.vertices.size()))
                throw MeshIoError("save_polygon_mesh: face index out of range");

    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw MeshIoError("cannot write '" + path + "'");
    FileCloser closer{f};
    for (const auto& v : mesh.vertices) write_vertex(f, v);
    for (const auto& loop : mesh.faces) {
        std::fputc('f', f);
        for (int idx : loop) std::fprintf(f, " %d", idx + 1);
        std::fputc('\n', f);
    }
    if (std::ferror(f)) throw MeshIoError("write failure on '" + path + "'");
}

void save_triangle_mesh(const TriangleMesh& mesh, const std::string& path) {
    PolygonMesh p;
    p.vertices = mesh.vertices;
    p.faces.reserve(mesh.faces.size());
    for (const auto& t : mesh.faces) p.faces.push_back({t[0], t[1], t[2]});
    save_polygon_mesh(p, path);
}

} // namespace voromesh
