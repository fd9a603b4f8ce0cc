#include "dfadapt/indicators.hpp"

#include <cmath>
#include <limits>

#include "dfadapt/error.hpp"
#include "dfadapt/report.hpp"

namespace dfadapt {

IndicatorContext::IndicatorContext(const Mesh& mesh, const ProblemSpec& problem, const QuadratureRule& rule)
    : mesh_(&mesh), problem_(&problem), rule_(&rule) {
    const Index m = mesh.num_triangles();
    const QuadratureRule& fine = triangle_rule(kOracleQuadratureDegree);
    f_h_.resize(m);
    b_h_.resize(m);
    osc_f_.assign(m, 0.0);
    osc_b_.assign(m, 0.0);
    osc_g_.assign(m, 0.0);
    g_h_.assign(mesh.num_edges(), 0.0);

    for (Index t = 0; t < m; ++t) {
        const double area = mesh.triangle(t).area;
        f_h_[t] = element_mean(mesh, problem.f, t, fine);
        b_h_[t] = element_mean(mesh, problem.b, t, fine);
        const auto pts = map_points(mesh, t, fine);
        double of = 0.0, ob = 0.0;
        for (std::size_t q = 0; q < pts.size(); ++q) {
            of += fine.weights[q] * (problem.f(pts[q]) - f_h_[t]).squaredNorm();
            ob += fine.weights[q] * std::pow(std::abs(problem.b(pts[q]) - b_h_[t]), 3.0);
        }
        osc_f_[t] = std::sqrt(area * of);
        osc_b_[t] = mesh.triangle(t).diameter * std::cbrt(area * ob);
    }

    const LineRule line = gauss_legendre(kEdgeQuadraturePoints);
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edge(e);
        if (!ed.on_boundary()) continue;
        g_h_[e] = edge_mean(mesh, problem.g, e);
        const Vec2 a = mesh.vertex(ed.vertices[0]).x, c = mesh.vertex(ed.vertices[1]).x;
        double og = 0.0;
        for (std::size_t q = 0; q < line.points.size(); ++q)
            og += line.weights[q] * std::pow(std::abs(problem.g(a + line.points[q] * (c - a), ed.normal) - g_h_[e]), 3.0);
        osc_g_[ed.triangles[0]] += std::cbrt(ed.length) * std::cbrt(ed.length * og);
    }

    if (problem.constant_k) {
        k_at_.push_back(problem.k_inverse(mesh.num_triangles() > 0 ? mesh.centroid(0) : Vec2::Zero()));
    } else {
        k_at_.reserve(static_cast<std::size_t>(m) * rule.size());
        for (Index t = 0; t < m; ++t)
            for (const Vec2& x : map_points(mesh, t, rule)) k_at_.push_back(problem.k_inverse(x));
    }
}

double edge_flux(const Mesh& mesh, const P0VectorField& u, std::span<const double> g_means, Index e) {
    const Edge& ed = mesh.edge(e);
    if (ed.on_boundary()) return u[ed.triangles[0]].dot(ed.normal) - g_means[e];
    return 0.5 * (u[ed.triangles[0]] - u[ed.triangles[1]]).dot(ed.normal);
}

GlobalIndicators aggregate(std::span<const ElementIndicators> elements) {
    std::vector<double> l(elements.size()), d(elements.size());
    for (std::size_t i = 0; i < elements.size(); ++i) {
        l[i] = elements[i].eta_L * elements[i].eta_L;
        d[i] = elements[i].eta_D_squared();
    }
    return {std::sqrt(pairwise_sum(l)), std::sqrt(pairwise_sum(d))};
}

IndicatorSet compute_indicators(const IndicatorContext& ctx, const P0VectorField& u_new, const P0VectorField& u_old,
                                const P1ScalarField& p_new, double alpha) {
    const Mesh& mesh = ctx.mesh();
    const ProblemSpec& pb = ctx.problem();
    const QuadratureRule& rule = ctx.rule();
    const Index m = mesh.num_triangles();
    if (u_new.size() != m || u_old.size() != m || p_new.size() != mesh.num_vertices())
        throw ContractViolation("compute_indicators: field sizes do not match mesh");
    const double mu_rho = pb.mu / pb.rho, beta_rho = pb.beta / pb.rho;

    std::vector<double> edge_term(mesh.num_edges());
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        const double he = mesh.edge(e).length;
        edge_term[e] = std::cbrt(he * he) * std::abs(edge_flux(mesh, u_new, ctx.g_means(), e));
    }

    IndicatorSet out;
    out.elements.resize(m);
    for (Index t = 0; t < m; ++t) {
        const Triangle& tri = mesh.triangle(t);
        ElementIndicators& ind = out.elements[t];
        const Vec2 du = u_new[t] - u_old[t];
        ind.eta_L = std::sqrt(tri.area) * du.norm();

        const Vec2 fixed = -p1_gradient(mesh, p_new, t) - alpha * du - beta_rho * u_old[t].norm() * u_new[t] +
                           ctx.f_mean(t);
        double r2 = 0.0;
        if (pb.constant_k) {
            r2 = (fixed - mu_rho * ctx.k_inverse_at(t, 0) * u_new[t]).squaredNorm();
        } else {
            for (std::size_t q = 0; q < rule.size(); ++q)
                r2 += rule.weights[q] * (fixed - mu_rho * ctx.k_inverse_at(t, q) * u_new[t]).squaredNorm();
        }
        ind.eta_D1 = std::sqrt(tri.area * r2);

        double d2 = tri.diameter * std::abs(ctx.b_mean(t)) * std::cbrt(tri.area);
        for (Index e : tri.edges) d2 += edge_term[e];
        ind.eta_D2 = d2;
        ind.osc_f = ctx.osc_f(t);
        ind.osc_b = ctx.osc_b(t);
        ind.osc_g = ctx.osc_g(t);
    }
    out.global = aggregate(out.elements);
    return out;
}

double effectivity_index(const GlobalIndicators& global, double error_u_L3, double error_grad_p_L32) {
    const double den = error_u_L3 + error_grad_p_L32;
    const double num = global.eta_L + global.eta_D;
    if (den == 0.0) return num == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                                      : std::numeric_limits<double>::infinity();
    return num / den;
}

double total_error_indicator(const Mesh& mesh, const GlobalIndicators& global, const P0VectorField& u,
                             const P1ScalarField& p) {
    const double den = lp_norm(mesh, u, 3.0) + lp_norm_gradient(mesh, p, 1.5);
    return den > 0.0 ? global.eta_D / den : 0.0;
}

std::vector<LowerBoundEntry> lower_bound_check(const Mesh& mesh, const P0VectorField& u_new, const P0VectorField& u_old,
                                               const VectorFunction& exact_u, const QuadratureRule& rule) {
    std::vector<LowerBoundEntry> out(mesh.num_triangles());
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const double area = mesh.triangle(t).area;
        const auto pts = map_points(mesh, t, rule);
        double eo = 0.0, en = 0.0;
        for (std::size_t q = 0; q < pts.size(); ++q) {
            const Vec2 u = exact_u(pts[q]);
            eo += rule.weights[q] * (u - u_old[t]).squaredNorm();
            en += rule.weights[q] * (u - u_new[t]).squaredNorm();
        }
        LowerBoundEntry& r = out[t];
        r.eta_L = std::sqrt(area) * (u_new[t] - u_old[t]).norm();
        r.bound = std::sqrt(area * eo) + std::sqrt(area * en);
        r.holds = r.eta_L <= r.bound * (1.0 + 1e-12) + 1e-300;
    }
    return out;
}

std::string indicators_csv(const IndicatorSet& set) {
    CsvTable table({"element", "eta_L", "eta_D1", "eta_D2", "osc_f", "osc_b", "osc_g"});
    for (std::size_t i = 0; i < set.elements.size(); ++i) {
        const auto& e = set.elements[i];
        table.row({std::to_string(i), format_number(e.eta_L), format_number(e.eta_D1), format_number(e.eta_D2),
                   format_number(e.osc_f), format_number(e.osc_b), format_number(e.osc_g)});
    }
    return table.str();
}

}  // namespace dfadapt
