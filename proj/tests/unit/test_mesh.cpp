#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

#include "common/oracles.hpp"
#include "dfadapt/error.hpp"
#include "dfadapt/mesh.hpp"

using namespace dfadapt;

namespace {

double area_sum(const Mesh& m) {
    double s = 0.0;
    for (const auto& t : m.triangles()) s += t.area;
    return s;
}

void check_structure(const Mesh& m) {
    Index interior = 0, boundary = 0;
    for (const auto& e : m.edges()) {
        CHECK(std::abs(e.normal.norm() - 1.0) < 1e-14);
        if (e.on_boundary()) ++boundary;
        else ++interior;
    }
    CHECK(3 * m.num_triangles() == 2 * interior + boundary);
    CHECK(boundary == m.num_boundary_edges());
    for (const auto& t : m.triangles()) {
        const auto c = std::array<Vec2, 3>{m.vertex(t.vertices[0]).x, m.vertex(t.vertices[1]).x,
                                           m.vertex(t.vertices[2]).x};
        CHECK(oracle::signed_area(c[0], c[1], c[2]) > 0.0);
        const double hk = std::max({(c[0] - c[1]).norm(), (c[1] - c[2]).norm(), (c[0] - c[2]).norm()});
        CHECK(std::abs(t.diameter - hk) < 1e-14);
    }
    CHECK(oracle::no_hanging_nodes(m));
    // Brute-force census agrees with the edge list: pairs in 1 triangle are
    // boundary edges, pairs in 2 are interior, none in more.
    Index b = 0, i = 0;
    for (const auto& [pair, count] : oracle::edge_census(m)) {
        CHECK(count <= 2);
        (count == 1 ? b : i)++;
    }
    CHECK(b == m.num_boundary_edges());
    CHECK(i == m.num_edges() - m.num_boundary_edges());
}

// Each interior edge is traversed in opposite directions by its two triangles.
void check_orientations(const Mesh& m) {
    for (const auto& e : m.edges()) {
        if (e.on_boundary()) continue;
        std::vector<std::pair<Index, Index>> dirs;
        for (Index t : e.triangles) {
            const auto& tri = m.triangle(t);
            for (int k = 0; k < 3; ++k)
                if (tri.edges[k] == &e - m.edges().data())
                    dirs.push_back({tri.vertices[(k + 1) % 3], tri.vertices[(k + 2) % 3]});
        }
        REQUIRE(dirs.size() == 2);
        CHECK(dirs[0].first == dirs[1].second);
        CHECK(dirs[0].second == dirs[1].first);
    }
}

const char* kTwoTriangles =
    "# unit square\n"
    "vertices 4\n"
    "0 0 1\n1 0 1\n0 1 1\n1 1 1\n"
    "triangles 2\n"
    "0 1 3\n0 3 2\n";

}  // namespace

TEST_CASE("structured mesh counts") {
    const Mesh m1 = generate_structured(1);
    CHECK(m1.num_triangles() == 2);
    CHECK(m1.num_vertices() == 4);

    const Mesh m10 = generate_structured(10);
    CHECK(m10.num_vertices() == 121);
    CHECK(m10.num_triangles() == 200);
    CHECK(std::abs(m10.h() - 0.1414) < 1e-4);
    CHECK(std::abs(m10.h() - std::sqrt(2.0) / 10) < 1e-14);
    check_structure(m10);
    check_orientations(m10);
}

TEST_CASE("structured mesh diagonals are aligned") {
    const Mesh m = generate_structured(3, Rect{0, 0, 3, 1.5});
    CHECK(m.num_triangles() == 18);
    CHECK(std::abs(area_sum(m) - 4.5) < 1e-13);
    for (const auto& t : m.triangles()) {
        int axis_aligned = 0;
        for (int k = 0; k < 3; ++k) {
            const Vec2 d = m.vertex(t.vertices[(k + 1) % 3]).x - m.vertex(t.vertices[k]).x;
            if (std::abs(d.x()) < 1e-14 || std::abs(d.y()) < 1e-14) ++axis_aligned;
            else CHECK(d.x() * d.y() > 0.0);  // diagonals point (x0,y0)->(x1,y1)
        }
        CHECK(axis_aligned == 2);
    }
}

TEST_CASE("structured mesh rejects bad input") {
    CHECK_THROWS(generate_structured(0));
    CHECK_THROWS(generate_structured(2, Rect{0, 0, 0, 1}));
}

TEST_CASE("load_mesh round trip") {
    const Mesh a = load_mesh(kTwoTriangles);
    const Mesh b = generate_structured(1);
    REQUIRE(a.num_vertices() == b.num_vertices());
    REQUIRE(a.num_triangles() == b.num_triangles());
    for (Index v = 0; v < a.num_vertices(); ++v) CHECK((a.vertex(v).x - b.vertex(v).x).norm() == 0.0);
    for (Index t = 0; t < a.num_triangles(); ++t) CHECK(a.triangle(t).vertices == b.triangle(t).vertices);
    const Mesh c = load_mesh(write_mesh(generate_structured(3)));
    CHECK(write_mesh(c) == write_mesh(generate_structured(3)));
}

TEST_CASE("load_mesh errors name the entity") {
    auto message = [](const std::string& text) {
        try {
            load_mesh(text);
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    const std::string dup = message("vertices 4\n0 0 1\n1 0 1\n1 1 1\n0 1 1\ntriangles 3\n0 1 2\n0 2 3\n0 1 2\n");
    CHECK(dup.find("non-conforming") != std::string::npos);
    const std::string inv = message("vertices 3\n0 0 1\n1 0 1\n0 1 1\ntriangles 1\n0 2 1\n");
    CHECK(inv.find("triangle 0") != std::string::npos);
    const std::string dangling = message("vertices 4\n0 0 1\n1 0 1\n0 1 1\n5 5 1\ntriangles 1\n0 1 2\n");
    CHECK(dangling.find("vertex 3") != std::string::npos);
    CHECK_FALSE(message("vertices 2\n0 0\n").empty());
    CHECK_FALSE(message("vertices 3\n0 0 1\n1 0 1\n0 1 1\ntriangles 1\n0 1 7\n").empty());
    // A vertex in the middle of a neighbour's edge.
    const std::string hanging = message(
        "vertices 5\n0 0 1\n2 0 1\n0 2 1\n1 1 1\n2 2 1\n"
        "triangles 3\n0 1 2\n1 4 3\n3 4 2\n");
    CHECK(hanging.find("non-conforming") != std::string::npos);
    CHECK_FALSE(hanging.empty());
    CHECK_THROWS_AS(load_mesh_file("/nonexistent/file.mesh"), ParseError);
}

TEST_CASE("4-triangle L-shape: edge census") {
    const Mesh m = load_mesh(
        "vertices 6\n0 0 1\n2 0 1\n2 1 1\n1 1 1\n1 2 1\n0 2 1\n"
        "triangles 4\n0 1 2\n0 2 3\n0 3 4\n0 4 5\n");
    CHECK(m.num_triangles() == 4);
    Index census_boundary = 0;
    for (const auto& [pair, count] : oracle::edge_census(m))
        if (count == 1) ++census_boundary;
    CHECK(census_boundary == 6);
    CHECK(m.num_boundary_edges() == census_boundary);
    CHECK(std::abs(m.total_area() - 3.0) < 1e-14);
    check_structure(m);
}

TEST_CASE("refine: empty marked set is a no-op") {
    const Mesh m = generate_structured(2);
    const Mesh r = refine(m, {});
    CHECK(r.num_triangles() == m.num_triangles());
    CHECK(write_mesh(r) == write_mesh(m));
}

TEST_CASE("refine: both triangles of the unit square") {
    const Mesh m = generate_structured(1);
    const std::vector<Index> all{0, 1};
    const Mesh r = refine(m, all);
    CHECK(r.num_triangles() == 4);
    CHECK(std::abs(area_sum(r) - 1.0) < 1e-14);
    check_structure(r);
}

TEST_CASE("refine: closure splits the neighbour") {
    // Both triangles have the diagonal as longest (refinement) edge, so
    // bisecting one creates the diagonal midpoint and forces the other.
    const Mesh m = generate_structured(1);
    const std::vector<Index> one{0};
    const Mesh r = refine(m, one);
    CHECK(r.num_triangles() == 4);
    CHECK(r.num_vertices() == 5);
    CHECK((r.vertex(4).x - Vec2(0.5, 0.5)).norm() < 1e-15);
    check_structure(r);
    for (const auto& t : r.triangles()) CHECK(t.parent != kNoTriangle);
}

TEST_CASE("refine: random sequences keep the invariants") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 4; ++trial) {
        Mesh m = trial % 2 ? generate_lshape(2) : generate_structured(3);
        const double area0 = area_sum(m);
        const double sigma0 = m.shape_ratio();
        for (int step = 0; step < 6; ++step) {
            std::vector<Index> marked;
            std::uniform_int_distribution<Index> pick(0, m.num_triangles() - 1);
            for (int k = 0; k < 1 + m.num_triangles() / 5; ++k) marked.push_back(pick(rng));
            std::sort(marked.begin(), marked.end());
            marked.erase(std::unique(marked.begin(), marked.end()), marked.end());
            const Mesh r = refine(m, marked);
            CHECK(r.num_triangles() > m.num_triangles());
            // Every marked triangle is subdivided: no child keeps its full area.
            std::map<Index, double> child_area;
            for (const auto& t : r.triangles()) child_area[t.parent] = std::max(child_area[t.parent], t.area);
            for (Index t : marked) CHECK(child_area[t] < m.triangle(t).area * (1 - 1e-12));
            m = r;
            CHECK(std::abs(area_sum(m) - area0) <= 1e-12 * area0);
            CHECK(m.shape_ratio() <= 2.0 * sigma0 + 1e-12);
        }
        check_structure(m);
        check_orientations(m);
    }
}

TEST_CASE("refine_uniform quadruples") {
    const Mesh m = generate_structured(2);
    const Mesh r = refine_uniform(m);
    CHECK(r.num_triangles() == 4 * m.num_triangles());
    CHECK(r.num_vertices() == 25);
    check_structure(r);
}

TEST_CASE("element_patch") {
    const Mesh m1 = generate_structured(1);
    CHECK(element_patch(m1, 0) == std::vector<Index>{0, 1});

    const Mesh m3 = generate_structured(3);
    for (Index t = 0; t < m3.num_triangles(); ++t) CHECK(element_patch(m3, t) == oracle::patch_scan(m3, t));
    // The corner triangle (0.5,0),(1,0),(1,0.5) of the N=2 mesh avoids the
    // centre, so no triangle touching the opposite corner (0,1) is in its patch.
    const Mesh m2 = generate_structured(2);
    Index corner = kNoTriangle;
    for (Index t = 0; t < m2.num_triangles(); ++t) {
        CHECK(element_patch(m2, t) == oracle::patch_scan(m2, t));
        bool has_corner = false, has_centre = false;
        for (Index v : m2.triangle(t).vertices) {
            has_corner = has_corner || (m2.vertex(v).x - Vec2(1, 0)).norm() < 1e-14;
            has_centre = has_centre || (m2.vertex(v).x - Vec2(0.5, 0.5)).norm() < 1e-14;
        }
        if (has_corner && !has_centre) corner = t;
    }
    REQUIRE(corner != kNoTriangle);
    const auto patch = element_patch(m2, corner);
    CHECK(patch.size() < static_cast<std::size_t>(m2.num_triangles()));
    for (Index s : patch)
        for (Index v : m2.triangle(s).vertices) CHECK((m2.vertex(v).x - Vec2(0, 1)).norm() > 0.1);
}

TEST_CASE("generate_lshape geometry") {
    const Mesh m = generate_lshape(4);
    CHECK(std::abs(m.total_area() - 3.0) < 1e-13);
    check_structure(m);
    for (const auto& v : m.vertices()) CHECK_FALSE((v.x.x() > 1 + 1e-12 && v.x.y() > 1 + 1e-12));
}
