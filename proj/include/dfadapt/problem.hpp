#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "dfadapt/mesh.hpp"
#include "dfadapt/spaces.hpp"

namespace dfadapt {

enum class DomainKind { rectangle, l_shape };

struct Domain {
    DomainKind kind = DomainKind::rectangle;
    Rect rect;

    std::vector<Vec2> polygon() const;
    double area() const;
};

// Initial mesh with n squares per unit length (rectangle: n per side).
Mesh initial_mesh(const Domain& domain, int n);

// Coefficients and data of mu/rho K^-1 u + beta/rho |u| u + grad p = f,
// div u = b, u.n = g.
struct ProblemSpec {
    std::string name;
    double mu = 1.0;
    double rho = 1.0;
    double beta = 1.0;
    MatrixFunction k_inverse;
    bool constant_k = false;  // all integrals of K^-1 reduce to |kappa| K^-1
    VectorFunction f;
    ScalarFunction b;
    BoundaryFunction g;
    // Optional exact solution, for error studies.
    VectorFunction exact_u;
    ScalarFunction exact_p;
    VectorFunction exact_grad_p;
    Domain domain;

    bool has_exact() const { return static_cast<bool>(exact_u) && static_cast<bool>(exact_grad_p); }
};

// Unit square, K = I, mu = rho = 1, u = curl exp(-50 r^2), p = x(x-2/3)y(y-2/3).
// g = exact u.n unless strict_boundary (then g = 0).
ProblemSpec gaussian_vortex(double beta, bool strict_boundary = false);
// L-shaped stand-in domain, variable K^-1, f = (-2 [y <= 1], 0), beta = 10, b = g = 0.
ProblemSpec reentrant_corner();
// All data zero on the unit square; exact solution (0,0).
ProblemSpec trivial_zero();

// Names: "gaussian-vortex", "reentrant-corner", "trivial-zero".
ProblemSpec builtin_problem(std::string_view name, double beta, bool strict_boundary = false);
std::vector<std::string> builtin_problem_names();

// Custom problem from expressions (see Expression for the grammar):
// {"mu":1,"rho":1,"beta":10,"K_inverse":[["a","b"],["b","d"]],"f":["fx","fy"],
//  "b":"0","g":"0","exact_u":["ux","uy"],"exact_p":"p","exact_grad_p":["px","py"],
//  "domain":"unit-square" | "l-shape" | {"rect":[x0,y0,x1,y1]}}
ProblemSpec problem_from_json(const nlohmann::json& spec);

struct ValidationReport {
    double k_min = 0.0;  // smallest eigenvalue of K^-1 over quadrature points
    double k_max = 0.0;
    double integral_b = 0.0;
    double integral_g = 0.0;
    double compatibility_residual = 0.0;  // |int b - int g|
    double data_scale = 0.0;              // ||b||_L1 + ||g||_L1
};

inline constexpr double kCompatibilityTolerance = 1e-8;

// Throws DataError on non-symmetric / non-positive K^-1 (naming the point)
// or when the compatibility residual exceeds tol * data_scale.
ValidationReport validate(const ProblemSpec& problem, const Mesh& mesh,
                          double tol = kCompatibilityTolerance,
                          const QuadratureRule& rule = triangle_rule(kDefaultQuadratureDegree));

}  // namespace dfadapt
