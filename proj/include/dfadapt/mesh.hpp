#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace dfadapt {

using Index = std::int32_t;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr Index kNoTriangle = -1;

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
};

struct Vertex {
    Vec2 x;
    bool on_boundary = false;
};

// Local edge k of a triangle is opposite local vertex k and is traversed
// counterclockwise from vertices[(k+1)%3] to vertices[(k+2)%3].
struct Triangle {
    std::array<Index, 3> vertices{};
    std::array<Index, 3> edges{};
    int refinement_edge = 0;  // local index, newest-vertex bisection splits this edge
    double area = 0.0;
    double diameter = 0.0;  // h_kappa, longest edge
    Index parent = kNoTriangle;
};

// vertices[] follow the orientation induced by triangles[0]; the normal
// points out of triangles[0].
struct Edge {
    std::array<Index, 2> vertices{};
    std::array<Index, 2> triangles{kNoTriangle, kNoTriangle};
    double length = 0.0;
    Vec2 normal = Vec2::Zero();

    bool on_boundary() const { return triangles[1] == kNoTriangle; }
};

// Immutable conforming triangulation. Built through the factories below;
// refine() returns a new mesh.
class Mesh {
public:
    Mesh() = default;

    // Validates connectivity and builds edges. Throws ParseError naming the
    // offending entity on inverted/duplicated/dangling/non-conforming input.
    // An empty refinement_edges vector means "longest edge of each triangle".
    static Mesh from_connectivity(std::vector<Vec2> points,
                                  std::vector<std::array<Index, 3>> triangles,
                                  std::vector<int> refinement_edges = {},
                                  std::vector<Index> parents = {});

    std::span<const Vertex> vertices() const { return vertices_; }
    std::span<const Triangle> triangles() const { return triangles_; }
    std::span<const Edge> edges() const { return edges_; }
    const Vertex& vertex(Index v) const { return vertices_[v]; }
    const Triangle& triangle(Index t) const { return triangles_[t]; }
    const Edge& edge(Index e) const { return edges_[e]; }

    Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
    Index num_triangles() const { return static_cast<Index>(triangles_.size()); }
    Index num_edges() const { return static_cast<Index>(edges_.size()); }
    Index num_boundary_edges() const { return num_boundary_edges_; }

    // +1 if the triangle is edges[e].triangles[0], -1 otherwise.
    double edge_sign(Index t, int local_edge) const;
    // Outward unit normal of local edge k of triangle t.
    Vec2 outward_normal(Index t, int local_edge) const;

    std::span<const Index> vertex_triangles(Index v) const;
    std::array<Vec2, 3> corners(Index t) const;
    Vec2 centroid(Index t) const;

    double h() const { return h_; }
    double total_area() const { return total_area_; }
    double boundary_length() const;
    // Observed sigma = max h_kappa / rho_kappa (rho = inscribed circle diameter).
    double shape_ratio() const;
    static double shape_ratio(const std::array<Vec2, 3>& corners);

private:
    std::vector<Vertex> vertices_;
    std::vector<Triangle> triangles_;
    std::vector<Edge> edges_;
    std::vector<Index> vt_offsets_;
    std::vector<Index> vt_list_;
    Index num_boundary_edges_ = 0;
    double h_ = 0.0;
    double total_area_ = 0.0;
};

// N x N squares over rect, each split by the (x0,y0)->(x1,y1) diagonal.
Mesh generate_structured(int n, const Rect& rect = {});

// L-shaped polygon (0,0),(2,0),(2,1),(1,1),(1,2),(0,2) with n squares
// per unit length; reentrant corner at (1,1).
Mesh generate_lshape(int n);

// Mesh text format: "vertices <n>" then n lines "x y boundary_flag",
// "triangles <m>" then m lines "v0 v1 v2" (0-based, CCW). '#' starts a comment.
// The boundary flag is informational; boundary is detected from connectivity.
Mesh load_mesh(std::string_view text);
Mesh load_mesh_file(const std::string& path);
std::string write_mesh(const Mesh& mesh);

// Newest-vertex bisection with conforming closure. Every marked triangle is
// split at least once; unmarked neighbours are split only as needed.
Mesh refine(const Mesh& mesh, std::span<const Index> marked);
// Two bisection rounds over every triangle (each triangle becomes four).
Mesh refine_uniform(const Mesh& mesh);

// Triangles sharing at least one vertex with t (t included), sorted.
std::vector<Index> element_patch(const Mesh& mesh, Index t);

}  // namespace dfadapt
