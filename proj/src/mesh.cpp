#include "dfadapt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>

#include "dfadapt/error.hpp"

namespace dfadapt {

namespace {

std::uint64_t edge_key(Index a, Index b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

int longest_local_edge(const std::array<Vec2, 3>& p) {
    int best = 0;
    double best_len = -1.0;
    for (int k = 0; k < 3; ++k) {
        const double len = (p[(k + 2) % 3] - p[(k + 1) % 3]).norm();
        // strict comparison with a relative slack keeps ties on the lowest index
        if (len > best_len * (1.0 + 1e-12)) {
            best = k;
            best_len = len;
        }
    }
    return best;
}

std::string tri_name(Index t) { return "triangle " + std::to_string(t); }

}  // namespace

Mesh Mesh::from_connectivity(std::vector<Vec2> points,
                             std::vector<std::array<Index, 3>> tris,
                             std::vector<int> refinement_edges,
                             std::vector<Index> parents) {
    Mesh m;
    const auto nv = static_cast<Index>(points.size());
    const auto nt = static_cast<Index>(tris.size());
    if (nt == 0) throw ParseError("mesh has no triangles");
    if (!refinement_edges.empty() && refinement_edges.size() != tris.size())
        throw ContractViolation("refinement_edges size does not match triangle count");
    if (!parents.empty() && parents.size() != tris.size())
        throw ContractViolation("parents size does not match triangle count");

    m.vertices_.resize(points.size());
    for (Index v = 0; v < nv; ++v) {
        if (!std::isfinite(points[v].x()) || !std::isfinite(points[v].y()))
            throw ParseError("vertex " + std::to_string(v) + " has non-finite coordinates");
        m.vertices_[v].x = points[v];
    }

    m.triangles_.resize(tris.size());
    std::vector<char> used(points.size(), 0);
    for (Index t = 0; t < nt; ++t) {
        Triangle& tri = m.triangles_[t];
        tri.vertices = tris[t];
        for (Index v : tri.vertices) {
            if (v < 0 || v >= nv)
                throw ParseError(tri_name(t) + " references missing vertex " + std::to_string(v));
            used[v] = 1;
        }
        if (tri.vertices[0] == tri.vertices[1] || tri.vertices[1] == tri.vertices[2] ||
            tri.vertices[0] == tri.vertices[2])
            throw ParseError(tri_name(t) + " repeats a vertex");
        const auto p = m.corners(t);
        tri.area = signed_area(p[0], p[1], p[2]);
        if (!(tri.area > 0.0))
            throw ParseError(tri_name(t) + " is inverted (clockwise) or degenerate");
        tri.diameter = 0.0;
        for (int k = 0; k < 3; ++k)
            tri.diameter = std::max(tri.diameter, (p[(k + 2) % 3] - p[(k + 1) % 3]).norm());
        tri.refinement_edge = refinement_edges.empty() ? longest_local_edge(p) : refinement_edges[t];
        if (tri.refinement_edge < 0 || tri.refinement_edge > 2)
            throw ContractViolation("refinement edge index out of range");
        tri.parent = parents.empty() ? kNoTriangle : parents[t];
        m.total_area_ += tri.area;
        m.h_ = std::max(m.h_, tri.diameter);
    }
    for (Index v = 0; v < nv; ++v)
        if (!used[v]) throw ParseError("vertex " + std::to_string(v) + " is dangling (not used by any triangle)");

    std::unordered_map<std::uint64_t, Index> lookup;
    lookup.reserve(3 * tris.size());
    for (Index t = 0; t < nt; ++t) {
        Triangle& tri = m.triangles_[t];
        for (int k = 0; k < 3; ++k) {
            const Index a = tri.vertices[(k + 1) % 3];
            const Index b = tri.vertices[(k + 2) % 3];
            auto [it, inserted] = lookup.try_emplace(edge_key(a, b), static_cast<Index>(m.edges_.size()));
            if (inserted) {
                Edge e;
                e.vertices = {a, b};
                e.triangles = {t, kNoTriangle};
                const Vec2 d = m.vertices_[b].x - m.vertices_[a].x;
                e.length = d.norm();
                e.normal = Vec2(d.y(), -d.x()) / e.length;
                m.edges_.push_back(e);
            } else {
                Edge& e = m.edges_[it->second];
                if (e.triangles[1] != kNoTriangle)
                    throw ParseError("non-conforming: edge (" + std::to_string(a) + "," + std::to_string(b) +
                                     ") is shared by more than two triangles (" + tri_name(t) + ")");
                if (e.vertices[0] == a)
                    throw ParseError("non-conforming: " + tri_name(t) + " overlaps " + tri_name(e.triangles[0]) +
                                     " (same edge orientation)");
                e.triangles[1] = t;
            }
            tri.edges[k] = it->second;
        }
    }

    for (const Edge& e : m.edges_) {
        if (e.on_boundary()) {
            ++m.num_boundary_edges_;
            m.vertices_[e.vertices[0]].on_boundary = true;
            m.vertices_[e.vertices[1]].on_boundary = true;
        }
    }

    m.vt_offsets_.assign(nv + 1, 0);
    for (const Triangle& tri : m.triangles_)
        for (Index v : tri.vertices) ++m.vt_offsets_[v + 1];
    for (Index v = 0; v < nv; ++v) m.vt_offsets_[v + 1] += m.vt_offsets_[v];
    m.vt_list_.resize(m.vt_offsets_.back());
    std::vector<Index> fill(m.vt_offsets_.begin(), m.vt_offsets_.end() - 1);
    for (Index t = 0; t < nt; ++t)
        for (Index v : m.triangles_[t].vertices) m.vt_list_[fill[v]++] = t;
    return m;
}

double Mesh::edge_sign(Index t, int local_edge) const {
    return edges_[triangles_[t].edges[local_edge]].triangles[0] == t ? 1.0 : -1.0;
}

Vec2 Mesh::outward_normal(Index t, int local_edge) const {
    return edge_sign(t, local_edge) * edges_[triangles_[t].edges[local_edge]].normal;
}

std::span<const Index> Mesh::vertex_triangles(Index v) const {
    return {vt_list_.data() + vt_offsets_[v], vt_list_.data() + vt_offsets_[v + 1]};
}

std::array<Vec2, 3> Mesh::corners(Index t) const {
    const auto& v = triangles_[t].vertices;
    return {vertices_[v[0]].x, vertices_[v[1]].x, vertices_[v[2]].x};
}

Vec2 Mesh::centroid(Index t) const {
    const auto p = corners(t);
    return (p[0] + p[1] + p[2]) / 3.0;
}

double Mesh::boundary_length() const {
    double len = 0.0;
    for (const Edge& e : edges_)
        if (e.on_boundary()) len += e.length;
    return len;
}

double Mesh::shape_ratio(const std::array<Vec2, 3>& p) {
    double perimeter = 0.0, diam = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double len = (p[(k + 2) % 3] - p[(k + 1) % 3]).norm();
        perimeter += len;
        diam = std::max(diam, len);
    }
    const double inscribed_diameter = 4.0 * std::abs(signed_area(p[0], p[1], p[2])) / perimeter;
    return diam / inscribed_diameter;
}

double Mesh::shape_ratio() const {
    double sigma = 0.0;
    for (Index t = 0; t < num_triangles(); ++t) sigma = std::max(sigma, shape_ratio(corners(t)));
    return sigma;
}

Mesh generate_structured(int n, const Rect& rect) {
    if (n < 1) throw ContractViolation("generate_structured: N must be >= 1");
    if (!(rect.width() > 0.0) || !(rect.height() > 0.0))
        throw ContractViolation("generate_structured: degenerate rectangle");
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i)
            pts.emplace_back(rect.x0 + rect.width() * i / n, rect.y0 + rect.height() * j / n);
    std::vector<std::array<Index, 3>> tris;
    tris.reserve(2 * static_cast<std::size_t>(n) * n);
    auto id = [n](int i, int j) { return static_cast<Index>(j * (n + 1) + i); };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return Mesh::from_connectivity(std::move(pts), std::move(tris));
}

Mesh generate_lshape(int n) {
    if (n < 1) throw ContractViolation("generate_lshape: n must be >= 1");
    const int m = 2 * n;
    auto inside_cell = [n](int i, int j) { return !(i >= n && j >= n); };
    std::vector<Index> id(static_cast<std::size_t>(m + 1) * (m + 1), -1);
    std::vector<Vec2> pts;
    for (int j = 0; j <= m; ++j)
        for (int i = 0; i <= m; ++i) {
            const bool used = (i < m && j < m && inside_cell(i, j)) || (i > 0 && j < m && inside_cell(i - 1, j)) ||
                              (i < m && j > 0 && inside_cell(i, j - 1)) || (i > 0 && j > 0 && inside_cell(i - 1, j - 1));
            if (used) {
                id[j * (m + 1) + i] = static_cast<Index>(pts.size());
                pts.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
            }
        }
    auto v = [&](int i, int j) { return id[j * (m + 1) + i]; };
    std::vector<std::array<Index, 3>> tris;
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) {
            if (!inside_cell(i, j)) continue;
            tris.push_back({v(i, j), v(i + 1, j), v(i + 1, j + 1)});
            tris.push_back({v(i, j), v(i + 1, j + 1), v(i, j + 1)});
        }
    return Mesh::from_connectivity(std::move(pts), std::move(tris));
}

namespace {

// Reads the next non-comment, non-blank line.
bool next_line(std::istringstream& in, std::string& line, int& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
}

long read_header(std::istringstream& in, std::string& line, int& lineno, const std::string& keyword) {
    if (!next_line(in, line, lineno)) throw ParseError("mesh: missing '" + keyword + "' header");
    std::istringstream ls(line);
    std::string word;
    long count = -1;
    if (!(ls >> word >> count) || word != keyword || count < 0)
        throw ParseError("mesh line " + std::to_string(lineno) + ": expected '" + keyword + " <count>'");
    return count;
}

}  // namespace

Mesh load_mesh(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    const long nv = read_header(in, line, lineno, "vertices");
    std::vector<Vec2> pts;
    pts.reserve(nv);
    for (long i = 0; i < nv; ++i) {
        if (!next_line(in, line, lineno)) throw ParseError("mesh: truncated vertex list at vertex " + std::to_string(i));
        std::istringstream ls(line);
        double x, y;
        int flag;
        if (!(ls >> x >> y >> flag))
            throw ParseError("mesh line " + std::to_string(lineno) + ": vertex " + std::to_string(i) +
                             " expects 'x y boundary_flag'");
        pts.emplace_back(x, y);
    }
    const long nt = read_header(in, line, lineno, "triangles");
    std::vector<std::array<Index, 3>> tris;
    tris.reserve(nt);
    for (long i = 0; i < nt; ++i) {
        if (!next_line(in, line, lineno)) throw ParseError("mesh: truncated triangle list at triangle " + std::to_string(i));
        std::istringstream ls(line);
        long a, b, c;
        if (!(ls >> a >> b >> c))
            throw ParseError("mesh line " + std::to_string(lineno) + ": triangle " + std::to_string(i) + " expects 'v0 v1 v2'");
        tris.push_back({static_cast<Index>(a), static_cast<Index>(b), static_cast<Index>(c)});
    }
    Mesh mesh = Mesh::from_connectivity(std::move(pts), std::move(tris));

    // Hanging vertices: a vertex strictly inside a boundary edge means two
    // triangles meet along a partial edge.
    for (Index ei = 0; ei < mesh.num_edges(); ++ei) {
        const Edge& e = mesh.edge(ei);
        if (!e.on_boundary()) continue;
        const Vec2 a = mesh.vertex(e.vertices[0]).x;
        const Vec2 d = mesh.vertex(e.vertices[1]).x - a;
        for (Index v = 0; v < mesh.num_vertices(); ++v) {
            if (v == e.vertices[0] || v == e.vertices[1]) continue;
            const Vec2 r = mesh.vertex(v).x - a;
            const double s = r.dot(d) / d.squaredNorm();
            const double dist = std::abs(r.x() * d.y() - r.y() * d.x()) / d.norm();
            if (s > 1e-12 && s < 1.0 - 1e-12 && dist < 1e-12 * e.length)
                throw ParseError("non-conforming: vertex " + std::to_string(v) + " hangs on edge (" +
                                 std::to_string(e.vertices[0]) + "," + std::to_string(e.vertices[1]) + ")");
        }
    }
    return mesh;
}

Mesh load_mesh_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open mesh file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_mesh(ss.str());
}

std::string write_mesh(const Mesh& mesh) {
    std::string out = "vertices " + std::to_string(mesh.num_vertices()) + "\n";
    char buf[96];
    for (const Vertex& v : mesh.vertices()) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", v.x.x(), v.x.y(), v.on_boundary ? 1 : 0);
        out += buf;
    }
    out += "triangles " + std::to_string(mesh.num_triangles()) + "\n";
    for (const Triangle& t : mesh.triangles()) {
        std::snprintf(buf, sizeof buf, "%d %d %d\n", t.vertices[0], t.vertices[1], t.vertices[2]);
        out += buf;
    }
    return out;
}

Mesh refine(const Mesh& mesh, std::span<const Index> marked) {
    if (marked.empty()) return mesh;

    std::vector<char> edge_marked(mesh.num_edges(), 0);
    std::vector<Index> work;
    auto mark_edge = [&](Index e) {
        if (!edge_marked[e]) {
            edge_marked[e] = 1;
            work.push_back(e);
        }
    };
    for (Index t : marked) {
        if (t < 0 || t >= mesh.num_triangles()) throw ContractViolation("refine: marked triangle out of range");
        const Triangle& tri = mesh.triangle(t);
        mark_edge(tri.edges[tri.refinement_edge]);
    }
    // Closure: any triangle with a marked edge must also split its refinement edge.
    while (!work.empty()) {
        const Index e = work.back();
        work.pop_back();
        for (Index t : mesh.edge(e).triangles) {
            if (t == kNoTriangle) continue;
            const Triangle& tri = mesh.triangle(t);
            mark_edge(tri.edges[tri.refinement_edge]);
        }
    }

    std::vector<Vec2> pts;
    pts.reserve(mesh.num_vertices() + mesh.num_edges());
    for (const Vertex& v : mesh.vertices()) pts.push_back(v.x);
    std::unordered_map<std::uint64_t, Index> midpoint;
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        if (!edge_marked[e]) continue;
        const Edge& ed = mesh.edge(e);
        midpoint.emplace(edge_key(ed.vertices[0], ed.vertices[1]), static_cast<Index>(pts.size()));
        pts.push_back(0.5 * (mesh.vertex(ed.vertices[0]).x + mesh.vertex(ed.vertices[1]).x));
    }

    std::vector<std::array<Index, 3>> tris;
    std::vector<int> ref_edges;
    std::vector<Index> parents;
    tris.reserve(mesh.num_triangles() * 2);

    // Children of (v_r, v_r+1, v_r+2) split at m on edge r are
    // (v_r, v_r+1, m) and (v_r, m, v_r+2); m is their newest vertex.
    std::function<void(std::array<Index, 3>, int, Index)> split = [&](std::array<Index, 3> v, int r, Index parent) {
        const Index a = v[r], b = v[(r + 1) % 3], c = v[(r + 2) % 3];
        const auto it = midpoint.find(edge_key(b, c));
        if (it == midpoint.end()) {
            tris.push_back(v);
            ref_edges.push_back(r);
            parents.push_back(parent);
            return;
        }
        const Index m = it->second;
        split({a, b, m}, 2, parent);
        split({a, m, c}, 1, parent);
    };
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const Triangle& tri = mesh.triangle(t);
        split(tri.vertices, tri.refinement_edge, t);
    }
    return Mesh::from_connectivity(std::move(pts), std::move(tris), std::move(ref_edges), std::move(parents));
}

Mesh refine_uniform(const Mesh& mesh) {
    std::vector<Index> all(mesh.num_triangles());
    for (Index t = 0; t < mesh.num_triangles(); ++t) all[t] = t;
    const Mesh once = refine(mesh, all);
    all.resize(once.num_triangles());
    for (Index t = 0; t < once.num_triangles(); ++t) all[t] = t;
    return refine(once, all);
}

std::vector<Index> element_patch(const Mesh& mesh, Index t) {
    if (t < 0 || t >= mesh.num_triangles()) throw ContractViolation("element_patch: triangle out of range");
    std::vector<Index> patch;
    for (Index v : mesh.triangle(t).vertices) {
        const auto around = mesh.vertex_triangles(v);
        patch.insert(patch.end(), around.begin(), around.end());
    }
    std::sort(patch.begin(), patch.end());
    patch.erase(std::unique(patch.begin(), patch.end()), patch.end());
    return patch;
}

}  // namespace dfadapt
