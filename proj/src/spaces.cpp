#include "dfadapt/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dfadapt/error.hpp"

namespace dfadapt {

namespace {

constexpr int kMaxRuleDegree = 20;

QuadratureRule centroid_rule() {
    return {{{1.0 / 3, 1.0 / 3, 1.0 / 3}}, {1.0}, 1};
}

QuadratureRule three_point_rule() {
    const double a = 2.0 / 3, b = 1.0 / 6;
    return {{{a, b, b}, {b, a, b}, {b, b, a}}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 2};
}

QuadratureRule six_point_rule() {
    const double a1 = 0.445948490915964886318, b1 = 0.108103018168070227363;
    const double a2 = 0.091576213509770743460, b2 = 0.816847572980458513080;
    const double w1 = 0.223381589678011465944, w2 = 0.109951743655321867389;
    return {{{a1, a1, b1}, {a1, b1, a1}, {b1, a1, a1}, {a2, a2, b2}, {a2, b2, a2}, {b2, a2, a2}},
            {w1, w1, w1, w2, w2, w2},
            4};
}

// Duffy-collapsed tensor Gauss rule, exact for total degree 2n-2.
QuadratureRule collapsed_rule(int n) {
    const LineRule g = gauss_legendre(n);
    QuadratureRule rule;
    rule.degree = 2 * n - 2;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double u = g.points[i];
            const double x = u, y = g.points[j] * (1.0 - u);
            rule.barycentric.push_back({1.0 - x - y, x, y});
            rule.weights.push_back(2.0 * g.weights[i] * g.weights[j] * (1.0 - u));
        }
    return rule;
}

std::vector<QuadratureRule> build_rules() {
    std::vector<QuadratureRule> rules(kMaxRuleDegree + 1);
    rules[0] = rules[1] = centroid_rule();
    rules[2] = three_point_rule();
    rules[3] = collapsed_rule(3);
    rules[4] = six_point_rule();
    for (int d = 5; d <= kMaxRuleDegree; ++d) rules[d] = collapsed_rule((d + 3) / 2);
    return rules;
}

// Region helper: iterate either the listed triangles or all of them.
template <class F>
std::vector<double> collect(const Mesh& mesh, std::span<const Index> region, F&& per_triangle) {
    std::vector<double> parts;
    if (region.empty()) {
        parts.resize(mesh.num_triangles());
        for (Index t = 0; t < mesh.num_triangles(); ++t) parts[t] = per_triangle(t);
    } else {
        parts.reserve(region.size());
        for (Index t : region) parts.push_back(per_triangle(t));
    }
    return parts;
}

double finish_norm(std::vector<double>& parts, double p) {
    return std::pow(pairwise_sum(parts), 1.0 / p);
}

void check_p(double p) {
    if (!(p >= 1.0)) throw ContractViolation("lp_norm: exponent must be >= 1");
}

}  // namespace

const QuadratureRule& triangle_rule(int degree) {
    static const std::vector<QuadratureRule> rules = build_rules();
    if (degree < 0 || degree > kMaxRuleDegree)
        throw ContractViolation("triangle_rule: degree must lie in [0, " + std::to_string(kMaxRuleDegree) + "]");
    return rules[degree];
}

LineRule gauss_legendre(int n) {
    if (n < 1) throw ContractViolation("gauss_legendre: need at least one point");
    LineRule rule;
    rule.degree = 2 * n - 1;
    rule.points.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // map [-1,1] -> [0,1], normalise weights to sum 1
        rule.points[n - 1 - i] = 0.5 * (x + 1.0);
        rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

std::vector<Vec2> map_points(const Mesh& mesh, Index t, const QuadratureRule& rule) {
    const auto c = mesh.corners(t);
    std::vector<Vec2> pts(rule.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const auto& l = rule.barycentric[q];
        pts[q] = l[0] * c[0] + l[1] * c[1] + l[2] * c[2];
    }
    return pts;
}

std::array<Vec2, 3> hat_gradients(const Mesh& mesh, Index t) {
    const auto c = mesh.corners(t);
    const double two_area = 2.0 * mesh.triangle(t).area;
    std::array<Vec2, 3> g;
    for (int k = 0; k < 3; ++k) {
        // gradient of lambda_k is the inward normal of the opposite edge scaled by 1/height
        const Vec2 d = c[(k + 2) % 3] - c[(k + 1) % 3];
        g[k] = Vec2(-d.y(), d.x()) / two_area;
    }
    return g;
}

Vec2 p1_gradient(const Mesh& mesh, const P1ScalarField& q, Index t) {
    const auto g = hat_gradients(mesh, t);
    const auto& v = mesh.triangle(t).vertices;
    return q.values[v[0]] * g[0] + q.values[v[1]] * g[1] + q.values[v[2]] * g[2];
}

double p1_value(const Mesh& mesh, const P1ScalarField& q, Index t, const std::array<double, 3>& l) {
    const auto& v = mesh.triangle(t).vertices;
    return l[0] * q.values[v[0]] + l[1] * q.values[v[1]] + l[2] * q.values[v[2]];
}

double integral(const Mesh& mesh, const P1ScalarField& q) {
    std::vector<double> parts(mesh.num_triangles());
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto& v = mesh.triangle(t).vertices;
        parts[t] = mesh.triangle(t).area * (q.values[v[0]] + q.values[v[1]] + q.values[v[2]]) / 3.0;
    }
    return pairwise_sum(parts);
}

P1ScalarField project_mean_zero(const Mesh& mesh, const P1ScalarField& q) {
    P1ScalarField out = q;
    out.values.array() -= integral(mesh, q) / mesh.total_area();
    return out;
}

P1ScalarField interpolate(const Mesh& mesh, const ScalarFunction& f) {
    P1ScalarField q(mesh.num_vertices());
    for (Index v = 0; v < mesh.num_vertices(); ++v) q.values[v] = f(mesh.vertex(v).x);
    return q;
}

double element_mean(const Mesh& mesh, const ScalarFunction& f, Index t, const QuadratureRule& rule) {
    const auto pts = map_points(mesh, t, rule);
    double s = 0.0;
    for (std::size_t q = 0; q < pts.size(); ++q) {
        const double val = f(pts[q]);
        if (!std::isfinite(val)) {
            std::ostringstream msg;
            msg << "non-finite data value at (" << pts[q].x() << ", " << pts[q].y() << ") in triangle " << t;
            throw DataError(msg.str());
        }
        s += rule.weights[q] * val;
    }
    return s;
}

Vec2 element_mean(const Mesh& mesh, const VectorFunction& f, Index t, const QuadratureRule& rule) {
    const auto pts = map_points(mesh, t, rule);
    Vec2 s = Vec2::Zero();
    for (std::size_t q = 0; q < pts.size(); ++q) {
        const Vec2 val = f(pts[q]);
        if (!val.allFinite()) {
            std::ostringstream msg;
            msg << "non-finite data value at (" << pts[q].x() << ", " << pts[q].y() << ") in triangle " << t;
            throw DataError(msg.str());
        }
        s += rule.weights[q] * val;
    }
    return s;
}

double edge_mean(const Mesh& mesh, const BoundaryFunction& g, Index e, int npoints) {
    const Edge& ed = mesh.edge(e);
    if (!ed.on_boundary()) throw ContractViolation("edge_mean: edge " + std::to_string(e) + " is not a boundary edge");
    const LineRule line = gauss_legendre(npoints);
    const Vec2 a = mesh.vertex(ed.vertices[0]).x, b = mesh.vertex(ed.vertices[1]).x;
    double s = 0.0;
    for (std::size_t q = 0; q < line.points.size(); ++q) s += line.weights[q] * g(a + line.points[q] * (b - a), ed.normal);
    return s;
}

double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

double lp_norm(const Mesh& mesh, const P0VectorField& v, double p, std::span<const Index> region) {
    check_p(p);
    auto parts = collect(mesh, region, [&](Index t) { return mesh.triangle(t).area * std::pow(v[t].norm(), p); });
    return finish_norm(parts, p);
}

double lp_norm_gradient(const Mesh& mesh, const P1ScalarField& q, double p, std::span<const Index> region) {
    check_p(p);
    auto parts = collect(mesh, region,
                         [&](Index t) { return mesh.triangle(t).area * std::pow(p1_gradient(mesh, q, t).norm(), p); });
    return finish_norm(parts, p);
}

double lp_norm(const Mesh& mesh, const VectorFunction& v, double p, const QuadratureRule& rule,
               std::span<const Index> region) {
    check_p(p);
    auto parts = collect(mesh, region, [&](Index t) {
        return mesh.triangle(t).area * element_mean(mesh, ScalarFunction([&](const Vec2& x) { return std::pow(v(x).norm(), p); }), t, rule);
    });
    return finish_norm(parts, p);
}

double lp_norm(const Mesh& mesh, const ScalarFunction& v, double p, const QuadratureRule& rule,
               std::span<const Index> region) {
    check_p(p);
    auto parts = collect(mesh, region, [&](Index t) {
        return mesh.triangle(t).area * element_mean(mesh, ScalarFunction([&](const Vec2& x) { return std::pow(std::abs(v(x)), p); }), t, rule);
    });
    return finish_norm(parts, p);
}

double lp_error(const Mesh& mesh, const P0VectorField& vh, const VectorFunction& exact, double p,
                const QuadratureRule& rule, std::span<const Index> region) {
    check_p(p);
    auto parts = collect(mesh, region, [&](Index t) {
        const Vec2 c = vh[t];
        return mesh.triangle(t).area *
               element_mean(mesh, ScalarFunction([&](const Vec2& x) { return std::pow((exact(x) - c).norm(), p); }), t, rule);
    });
    return finish_norm(parts, p);
}

double lp_error_gradient(const Mesh& mesh, const P1ScalarField& qh, const VectorFunction& exact_gradient, double p,
                         const QuadratureRule& rule, std::span<const Index> region) {
    check_p(p);
    auto parts = collect(mesh, region, [&](Index t) {
        const Vec2 c = p1_gradient(mesh, qh, t);
        return mesh.triangle(t).area *
               element_mean(mesh, ScalarFunction([&](const Vec2& x) { return std::pow((exact_gradient(x) - c).norm(), p); }), t, rule);
    });
    return finish_norm(parts, p);
}

std::string write_field(const P0VectorField& v) {
    std::string out = "p0field " + std::to_string(v.size()) + "\n";
    char buf[80];
    for (const Vec2& x : v.values) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", x.x(), x.y());
        out += buf;
    }
    return out;
}

std::string write_field(const P1ScalarField& q) {
    std::string out = "p1field " + std::to_string(q.size()) + "\n";
    char buf[40];
    for (Index i = 0; i < q.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g\n", q.values[i]);
        out += buf;
    }
    return out;
}

P0VectorField read_p0_field(const std::string& text) {
    std::istringstream in(text);
    std::string word;
    long n = -1;
    if (!(in >> word >> n) || word != "p0field" || n < 0) throw ParseError("expected 'p0field <m>' header");
    P0VectorField v(static_cast<Index>(n));
    for (long i = 0; i < n; ++i)
        if (!(in >> v.values[i].x() >> v.values[i].y())) throw ParseError("p0field: truncated at entry " + std::to_string(i));
    return v;
}

P1ScalarField read_p1_field(const std::string& text) {
    std::istringstream in(text);
    std::string word;
    long n = -1;
    if (!(in >> word >> n) || word != "p1field" || n < 0) throw ParseError("expected 'p1field <n>' header");
    P1ScalarField q(static_cast<Index>(n));
    for (long i = 0; i < n; ++i)
        if (!(in >> q.values[i])) throw ParseError("p1field: truncated at entry " + std::to_string(i));
    return q;
}

}  // namespace dfadapt
