#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dfadapt/mesh.hpp"

namespace dfadapt {

using ScalarFunction = std::function<double(const Vec2&)>;
using VectorFunction = std::function<Vec2(const Vec2&)>;
using MatrixFunction = std::function<Mat2(const Vec2&)>;
// Boundary data may depend on the outward normal (e.g. g = u.n).
using BoundaryFunction = std::function<double(const Vec2& x, const Vec2& normal)>;

// Area-normalised rule on the reference triangle: weights sum to 1.
struct QuadratureRule {
    std::vector<std::array<double, 3>> barycentric;
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const { return weights.size(); }
};

// Length-normalised Gauss-Legendre rule on [0,1].
struct LineRule {
    std::vector<double> points;
    std::vector<double> weights;
    int degree = 0;
};

inline constexpr int kDefaultQuadratureDegree = 4;
inline constexpr int kOracleQuadratureDegree = 10;
// Gauss points per edge for boundary data integrals.
inline constexpr int kEdgeQuadraturePoints = 10;

// Smallest built-in rule with exactness >= degree. Degree 4 is the 6-point
// Strang-Fix/Dunavant rule; higher degrees use a collapsed Gauss product.
const QuadratureRule& triangle_rule(int degree);
LineRule gauss_legendre(int npoints);

// Physical quadrature points of a rule on triangle t.
std::vector<Vec2> map_points(const Mesh& mesh, Index t, const QuadratureRule& rule);

// Piecewise-constant vector field, one value per triangle.
struct P0VectorField {
    std::vector<Vec2> values;

    P0VectorField() = default;
    explicit P0VectorField(Index num_triangles) : values(num_triangles, Vec2::Zero()) {}
    Index size() const { return static_cast<Index>(values.size()); }
    const Vec2& operator[](Index t) const { return values[t]; }
    Vec2& operator[](Index t) { return values[t]; }
};

// Continuous piecewise-linear scalar field, one value per vertex.
struct P1ScalarField {
    Eigen::VectorXd values;

    P1ScalarField() = default;
    explicit P1ScalarField(Index num_vertices) : values(Eigen::VectorXd::Zero(num_vertices)) {}
    Index size() const { return static_cast<Index>(values.size()); }
};

// Gradients of the three hat functions on triangle t (constant).
std::array<Vec2, 3> hat_gradients(const Mesh& mesh, Index t);

Vec2 p1_gradient(const Mesh& mesh, const P1ScalarField& q, Index t);
double p1_value(const Mesh& mesh, const P1ScalarField& q, Index t, const std::array<double, 3>& bary);
double integral(const Mesh& mesh, const P1ScalarField& q);
P1ScalarField project_mean_zero(const Mesh& mesh, const P1ScalarField& q);
P1ScalarField interpolate(const Mesh& mesh, const ScalarFunction& f);

// (1/|t|) * integral of f over t. Throws DataError on a non-finite sample.
double element_mean(const Mesh& mesh, const ScalarFunction& f, Index t, const QuadratureRule& rule);
Vec2 element_mean(const Mesh& mesh, const VectorFunction& f, Index t, const QuadratureRule& rule);
// (1/h_e) * integral of g over boundary edge e (contract: e on the boundary).
double edge_mean(const Mesh& mesh, const BoundaryFunction& g, Index e, int npoints = kEdgeQuadraturePoints);

// Deterministic pairwise summation.
double pairwise_sum(std::span<const double> values);

// Lp norms. `region` empty means the whole mesh.
double lp_norm(const Mesh& mesh, const P0VectorField& v, double p, std::span<const Index> region = {});
double lp_norm_gradient(const Mesh& mesh, const P1ScalarField& q, double p, std::span<const Index> region = {});
double lp_norm(const Mesh& mesh, const VectorFunction& v, double p, const QuadratureRule& rule,
               std::span<const Index> region = {});
double lp_norm(const Mesh& mesh, const ScalarFunction& v, double p, const QuadratureRule& rule,
               std::span<const Index> region = {});
// ||v - v_h||_p and ||grad(q) - grad(q_h)||_p against exact functions.
double lp_error(const Mesh& mesh, const P0VectorField& vh, const VectorFunction& exact, double p,
                const QuadratureRule& rule, std::span<const Index> region = {});
double lp_error_gradient(const Mesh& mesh, const P1ScalarField& qh, const VectorFunction& exact_gradient, double p,
                         const QuadratureRule& rule, std::span<const Index> region = {});

// Field dump format: "p0field <m>" + m lines "ux uy" / "p1field <n>" + n lines "value".
std::string write_field(const P0VectorField& v);
std::string write_field(const P1ScalarField& q);
P0VectorField read_p0_field(const std::string& text);
P1ScalarField read_p1_field(const std::string& text);

}  // namespace dfadapt
