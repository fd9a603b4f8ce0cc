#pragma once

#include <span>
#include <string>
#include <vector>

#include "dfadapt/mesh.hpp"
#include "dfadapt/problem.hpp"
#include "dfadapt/spaces.hpp"

namespace dfadapt {

struct ElementIndicators {
    double eta_L = 0.0;   // ||u_new - u_old||_L2(k)
    double eta_D1 = 0.0;  // L2(k) norm of the velocity-equation residual with f_h
    double eta_D2 = 0.0;  // h_k ||b_h||_L3(k) + sum_e h_e^1/3 ||phi_e||_L3(e)
    double osc_f = 0.0;   // ||f - f_h||_L2(k)
    double osc_b = 0.0;   // h_k ||b - b_h||_L3(k)
    double osc_g = 0.0;   // sum over boundary edges of h_e^1/3 ||g - g_h||_L3(e)

    // Squared discretisation indicator used for marking.
    double eta_D_squared() const { return eta_D1 * eta_D1 + eta_D2 * eta_D2; }
};

struct GlobalIndicators {
    double eta_L = 0.0;
    double eta_D = 0.0;
};

struct IndicatorSet {
    std::vector<ElementIndicators> elements;
    GlobalIndicators global;
};

// Data means and oscillations for one (mesh, problem) pair, plus K^-1
// sampled at the residual quadrature points. Holds a reference to the mesh.
class IndicatorContext {
public:
    IndicatorContext(const Mesh& mesh, const ProblemSpec& problem,
                     const QuadratureRule& rule = triangle_rule(kDefaultQuadratureDegree));

    const Mesh& mesh() const { return *mesh_; }
    const ProblemSpec& problem() const { return *problem_; }
    const QuadratureRule& rule() const { return *rule_; }

    const Vec2& f_mean(Index t) const { return f_h_[t]; }
    double b_mean(Index t) const { return b_h_[t]; }
    // Indexed by edge id; zero on interior edges.
    std::span<const double> g_means() const { return g_h_; }

    // Oscillation terms, computed once with the degree-10 rule.
    double osc_f(Index t) const { return osc_f_[t]; }
    double osc_b(Index t) const { return osc_b_[t]; }
    double osc_g(Index t) const { return osc_g_[t]; }

    const Mat2& k_inverse_at(Index t, std::size_t q) const {
        return problem_->constant_k ? k_at_[0] : k_at_[t * rule_->size() + q];
    }

private:
    const Mesh* mesh_;
    const ProblemSpec* problem_;
    const QuadratureRule* rule_;
    std::vector<Vec2> f_h_;
    std::vector<double> b_h_, g_h_;
    std::vector<double> osc_f_, osc_b_, osc_g_;
    std::vector<Mat2> k_at_;
};

// Interior edge: (u_k1 - u_k2).n / 2 with n out of k1 = edges[e].triangles[0].
// Boundary edge: u.n - g_h(e).
double edge_flux(const Mesh& mesh, const P0VectorField& u, std::span<const double> g_means, Index e);

// Indicators of the step u_old -> (u_new, p_new) with relaxation alpha.
IndicatorSet compute_indicators(const IndicatorContext& ctx, const P0VectorField& u_new, const P0VectorField& u_old,
                                const P1ScalarField& p_new, double alpha);

// Root-sum-squares aggregates of element indicators.
GlobalIndicators aggregate(std::span<const ElementIndicators> elements);

// (eta_L + eta_D) / (||u - u_h||_L3 + ||grad(p - p_h)||_L3/2); +inf for a zero error.
double effectivity_index(const GlobalIndicators& global, double error_u_L3, double error_grad_p_L32);

// eta_D / (||u_h||_L3 + ||grad p_h||_L3/2); 0 for the zero solution.
double total_error_indicator(const Mesh& mesh, const GlobalIndicators& global, const P0VectorField& u,
                             const P1ScalarField& p);

struct LowerBoundEntry {
    double eta_L = 0.0;
    double bound = 0.0;  // ||u - u_old||_L2(k) + ||u - u_new||_L2(k)
    bool holds = true;
};

// Elementwise eta_L <= ||u - u_old|| + ||u - u_new|| with quadrature errors.
std::vector<LowerBoundEntry> lower_bound_check(const Mesh& mesh, const P0VectorField& u_new, const P0VectorField& u_old,
                                               const VectorFunction& exact_u,
                                               const QuadratureRule& rule = triangle_rule(kOracleQuadratureDegree));

// CSV: element,eta_L,eta_D1,eta_D2,osc_f,osc_b,osc_g
std::string indicators_csv(const IndicatorSet& set);

}  // namespace dfadapt
