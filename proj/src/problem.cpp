#include "dfadapt/problem.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dfadapt/error.hpp"
#include "dfadapt/expression.hpp"

namespace dfadapt {

std::vector<Vec2> Domain::polygon() const {
    if (kind == DomainKind::l_shape) return {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
    return {{rect.x0, rect.y0}, {rect.x1, rect.y0}, {rect.x1, rect.y1}, {rect.x0, rect.y1}};
}

double Domain::area() const {
    const auto p = polygon();
    double a = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Vec2& u = p[i];
        const Vec2& v = p[(i + 1) % p.size()];
        a += u.x() * v.y() - v.x() * u.y();
    }
    return 0.5 * a;
}

Mesh initial_mesh(const Domain& domain, int n) {
    if (domain.kind == DomainKind::l_shape) return generate_lshape(n);
    return generate_structured(n, domain.rect);
}

ProblemSpec gaussian_vortex(double beta, bool strict_boundary) {
    if (!(beta > 0.0)) throw ContractViolation("gaussian_vortex: beta must be positive");
    constexpr double gamma = 50.0;
    ProblemSpec p;
    p.name = "gaussian-vortex";
    p.mu = 1.0;
    p.rho = 1.0;
    p.beta = beta;
    p.constant_k = true;
    p.k_inverse = [](const Vec2&) -> Mat2 { return Mat2::Identity(); };

    auto velocity = [](const Vec2& x) -> Vec2 {
        const double dx = x.x() - 0.5, dy = x.y() - 0.5;
        const double psi = std::exp(-gamma * (dx * dx + dy * dy));
        // u = curl psi = (d psi/dy, -d psi/dx)
        return {-2.0 * gamma * dy * psi, 2.0 * gamma * dx * psi};
    };
    // x(x-2/3) integrates to zero on [0,1], so p already has zero mean.
    auto pressure = [](const Vec2& x) { return x.x() * (x.x() - 2.0 / 3.0) * x.y() * (x.y() - 2.0 / 3.0); };
    auto grad_p = [](const Vec2& x) -> Vec2 {
        const double px = x.x() * (x.x() - 2.0 / 3.0), py = x.y() * (x.y() - 2.0 / 3.0);
        return {(2.0 * x.x() - 2.0 / 3.0) * py, px * (2.0 * x.y() - 2.0 / 3.0)};
    };
    const double mu_rho = p.mu / p.rho, beta_rho = p.beta / p.rho;
    p.f = [=](const Vec2& x) -> Vec2 {
        const Vec2 u = velocity(x);
        return mu_rho * u + beta_rho * u.norm() * u + grad_p(x);
    };
    p.b = [](const Vec2&) { return 0.0; };
    if (strict_boundary)
        p.g = [](const Vec2&, const Vec2&) { return 0.0; };
    else
        p.g = [=](const Vec2& x, const Vec2& n) { return velocity(x).dot(n); };
    p.exact_u = velocity;
    p.exact_p = pressure;
    p.exact_grad_p = grad_p;
    return p;
}

ProblemSpec reentrant_corner() {
    ProblemSpec p;
    p.name = "reentrant-corner";
    p.mu = 1.0;
    p.rho = 1.0;
    p.beta = 10.0;
    p.domain.kind = DomainKind::l_shape;
    p.k_inverse = [](const Vec2& x) -> Mat2 {
        const double s = std::sin(std::numbers::pi * x.x()) * std::sin(std::numbers::pi * x.y());
        Mat2 k;
        k << 2.0 + s, 0.2 * x.x(), 0.2 * x.x(), 3.0 + s;
        return k;
    };
    p.f = [](const Vec2& x) -> Vec2 { return {x.y() <= 1.0 ? -2.0 : 0.0, 0.0}; };
    p.b = [](const Vec2&) { return 0.0; };
    p.g = [](const Vec2&, const Vec2&) { return 0.0; };
    return p;
}

ProblemSpec trivial_zero() {
    ProblemSpec p;
    p.name = "trivial-zero";
    p.beta = 1.0;
    p.constant_k = true;
    p.k_inverse = [](const Vec2&) -> Mat2 { return Mat2::Identity(); };
    p.f = [](const Vec2&) -> Vec2 { return Vec2::Zero(); };
    p.b = [](const Vec2&) { return 0.0; };
    p.g = [](const Vec2&, const Vec2&) { return 0.0; };
    p.exact_u = [](const Vec2&) -> Vec2 { return Vec2::Zero(); };
    p.exact_p = [](const Vec2&) { return 0.0; };
    p.exact_grad_p = [](const Vec2&) -> Vec2 { return Vec2::Zero(); };
    return p;
}

std::vector<std::string> builtin_problem_names() { return {"gaussian-vortex", "reentrant-corner", "trivial-zero"}; }

ProblemSpec builtin_problem(std::string_view name, double beta, bool strict_boundary) {
    if (name == "gaussian-vortex") return gaussian_vortex(beta, strict_boundary);
    if (name == "reentrant-corner") {
        ProblemSpec p = reentrant_corner();
        p.beta = beta;
        return p;
    }
    if (name == "trivial-zero") {
        ProblemSpec p = trivial_zero();
        p.beta = beta;
        return p;
    }
    throw ParseError("unknown problem '" + std::string(name) + "'");
}

namespace {

Expression expr_field(const nlohmann::json& spec, const char* key, const char* fallback) {
    if (!spec.contains(key)) return Expression::parse(fallback);
    const auto& v = spec.at(key);
    if (v.is_number()) return Expression::constant(v.get<double>());
    if (!v.is_string()) throw ParseError(std::string("problem field '") + key + "' must be a string expression");
    return Expression::parse(v.get<std::string>());
}

std::array<Expression, 2> expr_pair(const nlohmann::json& v, const char* key) {
    if (!v.is_array() || v.size() != 2) throw ParseError(std::string("problem field '") + key + "' must be a 2-element array");
    std::array<Expression, 2> out;
    for (int i = 0; i < 2; ++i) {
        if (v[i].is_number()) out[i] = Expression::constant(v[i].get<double>());
        else if (v[i].is_string()) out[i] = Expression::parse(v[i].get<std::string>());
        else throw ParseError(std::string("problem field '") + key + "' entries must be expressions");
    }
    return out;
}

}  // namespace

ProblemSpec problem_from_json(const nlohmann::json& spec) {
    if (!spec.is_object()) throw ParseError("custom problem must be a JSON object");
    ProblemSpec p;
    p.name = spec.value("name", std::string("custom"));
    p.mu = spec.value("mu", 1.0);
    p.rho = spec.value("rho", 1.0);
    p.beta = spec.value("beta", 1.0);
    if (!(p.mu > 0.0) || !(p.rho > 0.0) || !(p.beta >= 0.0))
        throw ParseError("custom problem: mu and rho must be positive and beta non-negative");

    if (spec.contains("K_inverse")) {
        const auto& k = spec.at("K_inverse");
        if (!k.is_array() || k.size() != 2) throw ParseError("K_inverse must be a 2x2 array of expressions");
        const auto r0 = expr_pair(k[0], "K_inverse"), r1 = expr_pair(k[1], "K_inverse");
        p.k_inverse = [=](const Vec2& x) -> Mat2 {
            Mat2 m;
            m << r0[0](x.x(), x.y()), r0[1](x.x(), x.y()), r1[0](x.x(), x.y()), r1[1](x.x(), x.y());
            return m;
        };
    } else {
        p.constant_k = true;
        p.k_inverse = [](const Vec2&) -> Mat2 { return Mat2::Identity(); };
    }

    const auto f = spec.contains("f") ? expr_pair(spec.at("f"), "f")
                                      : std::array<Expression, 2>{Expression(), Expression()};
    p.f = [=](const Vec2& x) -> Vec2 { return {f[0](x.x(), x.y()), f[1](x.x(), x.y())}; };
    const Expression b = expr_field(spec, "b", "0");
    p.b = [=](const Vec2& x) { return b(x.x(), x.y()); };
    const Expression g = expr_field(spec, "g", "0");
    p.g = [=](const Vec2& x, const Vec2& n) { return g(x.x(), x.y(), n.x(), n.y()); };

    if (spec.contains("exact_u")) {
        const auto u = expr_pair(spec.at("exact_u"), "exact_u");
        p.exact_u = [=](const Vec2& x) -> Vec2 { return {u[0](x.x(), x.y()), u[1](x.x(), x.y())}; };
    }
    if (spec.contains("exact_p")) {
        const Expression pe = expr_field(spec, "exact_p", "0");
        p.exact_p = [=](const Vec2& x) { return pe(x.x(), x.y()); };
        if (spec.contains("exact_grad_p")) {
            const auto gp = expr_pair(spec.at("exact_grad_p"), "exact_grad_p");
            p.exact_grad_p = [=](const Vec2& x) -> Vec2 { return {gp[0](x.x(), x.y()), gp[1](x.x(), x.y())}; };
        } else {
            // central differences when no closed-form gradient is given
            p.exact_grad_p = [=](const Vec2& x) -> Vec2 {
                const double h = 1e-6;
                return {(pe(x.x() + h, x.y()) - pe(x.x() - h, x.y())) / (2 * h),
                        (pe(x.x(), x.y() + h) - pe(x.x(), x.y() - h)) / (2 * h)};
            };
        }
    }

    if (spec.contains("domain")) {
        const auto& d = spec.at("domain");
        if (d.is_string()) {
            const auto name = d.get<std::string>();
            if (name == "unit-square") p.domain = Domain{};
            else if (name == "l-shape") p.domain.kind = DomainKind::l_shape;
            else throw ParseError("unknown domain '" + name + "'");
        } else if (d.is_object() && d.contains("rect")) {
            const auto r = d.at("rect").get<std::vector<double>>();
            if (r.size() != 4) throw ParseError("domain.rect must be [x0, y0, x1, y1]");
            p.domain.rect = Rect{r[0], r[1], r[2], r[3]};
        } else {
            throw ParseError("domain must be \"unit-square\", \"l-shape\" or {\"rect\": [...]}");
        }
    }
    return p;
}

ValidationReport validate(const ProblemSpec& problem, const Mesh& mesh, double tol, const QuadratureRule& rule) {
    ValidationReport r;
    r.k_min = std::numeric_limits<double>::infinity();
    r.k_max = 0.0;
    std::vector<double> b_parts(mesh.num_triangles()), b_abs(mesh.num_triangles());
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const auto pts = map_points(mesh, t, rule);
        double bi = 0.0, ba = 0.0;
        for (std::size_t q = 0; q < pts.size(); ++q) {
            const Mat2 k = problem.k_inverse(pts[q]);
            const double scale = k.cwiseAbs().maxCoeff();
            auto where = [&] {
                std::ostringstream s;
                s << "(" << pts[q].x() << ", " << pts[q].y() << ")";
                return s.str();
            };
            if (!k.allFinite()) throw DataError("K^-1 is not finite at " + where());
            if (std::abs(k(0, 1) - k(1, 0)) > 1e-12 * std::max(scale, 1.0))
                throw DataError("K^-1 is not symmetric at " + where());
            const double tr = 0.5 * (k(0, 0) + k(1, 1));
            const double disc = std::hypot(0.5 * (k(0, 0) - k(1, 1)), k(0, 1));
            const double lo = tr - disc, hi = tr + disc;
            if (!(lo > 0.0)) throw DataError("K^-1 is not positive definite at " + where());
            r.k_min = std::min(r.k_min, lo);
            r.k_max = std::max(r.k_max, hi);
            const double bv = problem.b(pts[q]);
            bi += rule.weights[q] * bv;
            ba += rule.weights[q] * std::abs(bv);
        }
        b_parts[t] = mesh.triangle(t).area * bi;
        b_abs[t] = mesh.triangle(t).area * ba;
    }
    std::vector<double> g_parts, g_abs;
    const LineRule line = gauss_legendre(kEdgeQuadraturePoints);
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edge(e);
        if (!ed.on_boundary()) continue;
        const Vec2 a = mesh.vertex(ed.vertices[0]).x, c = mesh.vertex(ed.vertices[1]).x;
        double gi = 0.0, ga = 0.0;
        for (std::size_t q = 0; q < line.points.size(); ++q) {
            const double gv = problem.g(a + line.points[q] * (c - a), ed.normal);
            gi += line.weights[q] * gv;
            ga += line.weights[q] * std::abs(gv);
        }
        g_parts.push_back(ed.length * gi);
        g_abs.push_back(ed.length * ga);
    }
    r.integral_b = pairwise_sum(b_parts);
    r.integral_g = pairwise_sum(g_parts);
    r.data_scale = pairwise_sum(b_abs) + pairwise_sum(g_abs);
    r.compatibility_residual = std::abs(r.integral_b - r.integral_g);
    if (r.compatibility_residual > tol * r.data_scale) {
        std::ostringstream s;
        s << "incompatible data: |int b - int g| = " << r.compatibility_residual << " exceeds " << tol << " * "
          << r.data_scale;
        throw DataError(s.str());
    }
    return r;
}

}  // namespace dfadapt
