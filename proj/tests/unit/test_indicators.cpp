#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "common/oracles.hpp"
#include "dfadapt/indicators.hpp"
#include "dfadapt/nonlinear.hpp"

using namespace dfadapt;

namespace {

ProblemSpec constant_f(Vec2 f) {
    ProblemSpec p = trivial_zero();
    p.f = [f](const Vec2&) { return f; };
    return p;
}

// Two triangles sharing the vertical edge x = 0.
Mesh kite() {
    return Mesh::from_connectivity({Vec2(-1, 0), Vec2(0, -1), Vec2(0, 1), Vec2(1, 0)}, {{0, 1, 2}, {1, 3, 2}});
}

// Oracle P0 transfer: the coarse triangle containing each fine centroid.
P0VectorField transfer(const Mesh& coarse, const Mesh& fine, const P0VectorField& u) {
    P0VectorField out(fine.num_triangles());
    for (Index t = 0; t < fine.num_triangles(); ++t) {
        const Vec2 x = fine.centroid(t);
        for (Index s = 0; s < coarse.num_triangles(); ++s) {
            const auto c = coarse.corners(s);
            const double a = oracle::signed_area(c[0], c[1], c[2]);
            const double l1 = oracle::signed_area(x, c[1], c[2]) / a, l2 = oracle::signed_area(c[0], x, c[2]) / a;
            if (l1 > -1e-12 && l2 > -1e-12 && 1 - l1 - l2 > -1e-12) {
                out[t] = u[s];
                break;
            }
        }
    }
    return out;
}

double sum_d2(const IndicatorSet& s) {
    double total = 0.0;
    for (const auto& e : s.elements) total += e.eta_D2;
    return total;
}

}  // namespace

TEST_CASE("edge flux") {
    const Mesh m = kite();
    const std::vector<double> g0(m.num_edges(), 0.0);
    P0VectorField c(2);
    c[0] = c[1] = Vec2(0.3, -0.7);
    Index vertical = kNoTriangle;
    for (Index e = 0; e < m.num_edges(); ++e) {
        if (!m.edge(e).on_boundary()) {
            vertical = e;
            CHECK(edge_flux(m, c, g0, e) == 0.0);
        }
    }
    REQUIRE(vertical != kNoTriangle);
    CHECK(std::abs(std::abs(m.edge(vertical).normal.x()) - 1.0) < 1e-15);
    P0VectorField j(2);
    j[0] = Vec2(1, 0);
    const double flux = edge_flux(m, j, g0, vertical);
    CHECK(std::abs(std::abs(flux) - 0.5) < 1e-15);
    // Sign follows the stored orientation: n points out of triangles[0].
    const Index t0 = m.edge(vertical).triangles[0];
    CHECK(flux == doctest::Approx(0.5 * (j[t0] - j[1 - t0]).dot(m.edge(vertical).normal)));

    std::vector<double> gn(m.num_edges(), 0.0);
    for (Index e = 0; e < m.num_edges(); ++e)
        if (m.edge(e).on_boundary()) {
            gn[e] = c[m.edge(e).triangles[0]].dot(m.edge(e).normal);
            CHECK(std::abs(edge_flux(m, c, gn, e)) < 1e-15);
        }
}

TEST_CASE("single triangle residual") {
    const Mesh m = Mesh::from_connectivity({Vec2(0, 0), Vec2(1, 0), Vec2(0, 1)}, {{0, 1, 2}});
    ProblemSpec pb = trivial_zero();
    pb.beta = 1.0;
    const IndicatorContext ctx(m, pb);
    P0VectorField un(1), uo(1);
    un[0] = Vec2(1, 0);
    P1ScalarField p(3);
    p.values << 0.0, 1.0, 1.0;  // grad p = (1, 1)
    const IndicatorSet s = compute_indicators(ctx, un, uo, p, 1.0);
    // -grad p - alpha(u1 - u0) - K^-1 u1 - |u0| u1 + f_h = (-3, -1)
    CHECK(std::abs(s.elements[0].eta_D1 - std::sqrt(0.5) * std::sqrt(10.0)) < 1e-14);
    CHECK(std::abs(s.elements[0].eta_L - std::sqrt(0.5)) < 1e-15);
    // With u0 = (0, 1) the Forchheimer term contributes: (-4, 0).
    uo[0] = Vec2(0, 1);
    const IndicatorSet s2 = compute_indicators(ctx, un, uo, p, 1.0);
    const Vec2 r = -Vec2(1, 1) - (un[0] - uo[0]) - un[0] - un[0];
    CHECK(std::abs(s2.elements[0].eta_D1 - std::sqrt(0.5) * r.norm()) < 1e-14);
}

TEST_CASE("converged state has zero linearisation indicator") {
    const Mesh m = generate_structured(4);
    const Discretization disc(m, gaussian_vortex(1.0));
    const IndicatorContext ctx(m, disc.problem());
    const P0VectorField u = oracle::random_p0(m.num_triangles(), 3);
    const IndicatorSet s = compute_indicators(ctx, u, u, P1ScalarField(m.num_vertices()), 2.0);
    for (const auto& e : s.elements) {
        CHECK(e.eta_L == 0.0);
        CHECK(e.eta_D1 >= 0.0);
        CHECK(e.eta_D2 >= 0.0);
        CHECK(e.osc_f >= 0.0);
        CHECK(e.osc_b >= 0.0);
        CHECK(e.osc_g >= 0.0);
    }
    CHECK(s.global.eta_L == 0.0);
    const auto lb = lower_bound_check(m, u, u, disc.problem().exact_u);
    for (const auto& e : lb) CHECK(e.holds);
}

TEST_CASE("exact data with continuous flux") {
    const Mesh m = generate_structured(5);
    const ProblemSpec pb = constant_f(Vec2(1, 0));
    const StepSolution d = darcy_solve(m, pb);
    const IndicatorContext ctx(m, pb);
    const IndicatorSet s = compute_indicators(ctx, d.u, d.u, d.p, 1.0);
    for (const auto& e : s.elements) {
        CHECK(e.eta_D1 < 1e-12);
        CHECK(e.eta_D2 < 1e-12);
        CHECK(e.osc_f < 1e-14);
        CHECK(e.osc_b == 0.0);
        CHECK(e.osc_g == 0.0);
    }
}

TEST_CASE("zero residual characterisation") {
    const Mesh m = generate_structured(3);
    const ProblemSpec pb = constant_f(Vec2(2, -1));
    const IndicatorContext ctx(m, pb);
    P1ScalarField p(m.num_vertices());
    for (Index v = 0; v < m.num_vertices(); ++v) p.values[v] = 2 * m.vertex(v).x.x() - m.vertex(v).x.y();
    const P0VectorField zero(m.num_triangles());
    const IndicatorSet s = compute_indicators(ctx, zero, zero, p, 0.0);
    for (const auto& e : s.elements) CHECK(e.eta_D1 < 1e-14);
    // Perturb one vertex: exactly the triangles around it get a residual.
    const Index v0 = 5;
    p.values[v0] += 0.1;
    const IndicatorSet s2 = compute_indicators(ctx, zero, zero, p, 0.0);
    for (Index t = 0; t < m.num_triangles(); ++t) {
        const auto& vt = m.triangle(t).vertices;
        const bool touches = vt[0] == v0 || vt[1] == v0 || vt[2] == v0;
        CHECK((s2.elements[t].eta_D1 > 1e-6) == touches);
    }
}

TEST_CASE("aggregation is root-sum-squares") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(0, 2);
    std::vector<ElementIndicators> el(1000);
    double l = 0, d = 0;
    for (auto& e : el) {
        e.eta_L = U(rng);
        e.eta_D1 = U(rng);
        e.eta_D2 = U(rng);
        l += e.eta_L * e.eta_L;
        d += e.eta_D1 * e.eta_D1 + e.eta_D2 * e.eta_D2;
    }
    const GlobalIndicators g = aggregate(el);
    CHECK(std::abs(g.eta_L * g.eta_L - l) <= 1e-12 * l);
    CHECK(std::abs(g.eta_D * g.eta_D - d) <= 1e-12 * d);
    CHECK(aggregate({}).eta_D == 0.0);
}

TEST_CASE("effectivity index") {
    CHECK(effectivity_index({0.0, 0.0}, 0.3, 0.1) == 0.0);
    CHECK(std::isinf(effectivity_index({1.0, 1.0}, 0.0, 0.0)));
    CHECK(effectivity_index({1.0, 3.0}, 1.0, 1.0) == 2.0);
}

TEST_CASE("lower bound holds for random iterates") {
    const Mesh m = generate_structured(4);
    const ProblemSpec pb = gaussian_vortex(1.0);
    double slack = 1e300;
    for (unsigned seed = 0; seed < 20; ++seed) {
        const auto un = oracle::random_p0(m.num_triangles(), 2 * seed, 2.0);
        const auto uo = oracle::random_p0(m.num_triangles(), 2 * seed + 1, 2.0);
        for (const auto& e : lower_bound_check(m, un, uo, pb.exact_u)) {
            CHECK(e.holds);
            slack = std::min(slack, e.bound - e.eta_L);
        }
    }
    CHECK(slack >= 0.0);
    MESSAGE("minimum slack " << slack);
}

TEST_CASE("flip test: triangle order does not change indicators") {
    const Mesh a = generate_structured(3);
    std::vector<Vec2> verts;
    for (const auto& v : a.vertices()) verts.push_back(v.x);
    std::vector<std::array<Index, 3>> tris;
    for (Index t = a.num_triangles() - 1; t >= 0; --t) {
        const auto& v = a.triangle(t).vertices;
        tris.push_back({v[1], v[2], v[0]});
    }
    const Mesh b = Mesh::from_connectivity(verts, tris);
    const ProblemSpec pb = oracle::random_problem(6);  // polynomial data: vertex order cannot change quadrature
    const P0VectorField ua = oracle::random_p0(a.num_triangles(), 8), uo = oracle::random_p0(a.num_triangles(), 9);
    P0VectorField ub(a.num_triangles()), uob(a.num_triangles());
    const Index m = a.num_triangles();
    for (Index t = 0; t < m; ++t) {
        ub[m - 1 - t] = ua[t];
        uob[m - 1 - t] = uo[t];
    }
    P1ScalarField p(a.num_vertices());
    for (Index v = 0; v < a.num_vertices(); ++v) p.values[v] = std::sin(3.0 * v);
    const IndicatorContext ca(a, pb), cb(b, pb);
    const IndicatorSet sa = compute_indicators(ca, ua, uo, p, 1.5), sb = compute_indicators(cb, ub, uob, p, 1.5);
    for (Index t = 0; t < m; ++t) {
        CHECK(sa.elements[t].eta_D2 == doctest::Approx(sb.elements[m - 1 - t].eta_D2).epsilon(1e-12));
        CHECK(sa.elements[t].eta_D1 == doctest::Approx(sb.elements[m - 1 - t].eta_D1).epsilon(1e-12));
        CHECK(sa.elements[t].osc_g == doctest::Approx(sb.elements[m - 1 - t].osc_g).epsilon(1e-12));
    }
}

TEST_CASE("refinement consistency of the jump terms") {
    const Mesh coarse = generate_structured(4);
    const ProblemSpec pb = constant_f(Vec2(1, 2));
    const P0VectorField u = oracle::random_p0(coarse.num_triangles(), 21);
    const Mesh fine = refine_uniform(coarse);
    const P0VectorField uf = transfer(coarse, fine, u);
    const IndicatorContext cc(coarse, pb), cf(fine, pb);
    const IndicatorSet sc = compute_indicators(cc, u, u, P1ScalarField(coarse.num_vertices()), 1.0);
    const IndicatorSet sf = compute_indicators(cf, uf, uf, P1ScalarField(fine.num_vertices()), 1.0);
    // Each coarse edge splits into two halves with the same flux; new edges carry none.
    const double ratio = sum_d2(sf) / sum_d2(sc);
    CHECK(ratio >= 1.0);
    CHECK(ratio <= 2.0);
    CHECK(std::abs(ratio - std::cbrt(2.0)) < 1e-10);
}

TEST_CASE("relative total error indicator") {
    const Mesh m = generate_structured(6);
    CHECK(total_error_indicator(m, {1.0, 1.0}, P0VectorField(m.num_triangles()), P1ScalarField(m.num_vertices())) ==
          0.0);
    ProblemSpec pb = oracle::random_problem(4);
    pb.beta = 0.0;
    ProblemSpec pc = pb;
    pc.f = [f = pb.f](const Vec2& x) { return Vec2(4.0 * f(x)); };
    pc.b = [b = pb.b](const Vec2& x) { return 4.0 * b(x); };
    pc.g = [g = pb.g](const Vec2& x, const Vec2& n) { return 4.0 * g(x, n); };
    double e[2];
    int k = 0;
    for (const ProblemSpec* p : {&pb, &pc}) {
        const StepSolution d = darcy_solve(m, *p);
        const IndicatorContext ctx(m, *p);
        const IndicatorSet s = compute_indicators(ctx, d.u, d.u, d.p, 0.0);
        e[k++] = total_error_indicator(m, s.global, d.u, d.p);
    }
    CHECK(e[0] > 0.0);
    CHECK(std::abs(e[0] - e[1]) < 1e-10 * e[0]);
}

TEST_CASE("indicator csv") {
    IndicatorSet s;
    s.elements.resize(2);
    const std::string csv = indicators_csv(s);
    CHECK(csv.rfind("element,eta_L,eta_D1,eta_D2,osc_f,osc_b,osc_g\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
