#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/SparseCore>

#include "dfadapt/mesh.hpp"
#include "dfadapt/problem.hpp"
#include "dfadapt/spaces.hpp"

namespace dfadapt {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Per-element velocity blocks of one linearised step.
//   A_k = (alpha + beta/rho |u_prev_k|) |k| I + mu/rho int_k K^-1
//   F_k = int_k f + alpha |k| u_prev_k
struct ElementBlocks {
    std::vector<Mat2> A;
    std::vector<Vec2> F;
};

// S p = G with S = B A^-1 B^T.
struct PressureSystem {
    SparseMatrix S;
    Eigen::VectorXd G;
};

struct LinearSolverOptions {
    double rel_tol = 1e-12;
    int max_iter = 0;  // 0 means 10 * number of unknowns
    bool jacobi = false;
};

struct PressureSolveInfo {
    int iterations = 0;
    double relative_residual = 0.0;
};

// Step-independent data for one (mesh, problem) pair: coupling vectors
// B_jk = |k| grad(phi_j), element integrals of K^-1 and f, and the
// constraint right side R_j = -int b phi_j + int_G g phi_j.
// Keeps a reference to the mesh, which must outlive it.
class Discretization {
public:
    // Validates the problem on the mesh (throws DataError).
    Discretization(const Mesh& mesh, const ProblemSpec& problem,
                   const QuadratureRule& rule = triangle_rule(kDefaultQuadratureDegree),
                   double compatibility_tol = kCompatibilityTolerance);

    const Mesh& mesh() const { return *mesh_; }
    const ProblemSpec& problem() const { return problem_; }
    const ValidationReport& report() const { return report_; }

    const std::array<Vec2, 3>& coupling(Index t) const { return coupling_[t]; }
    const Mat2& integral_k_inverse(Index t) const { return int_kinv_[t]; }
    const Vec2& integral_f(Index t) const { return int_f_[t]; }
    const Eigen::VectorXd& constraint_rhs() const { return rhs_; }

    ElementBlocks blocks(const P0VectorField& u_prev, double alpha, double beta) const;
    ElementBlocks blocks(const P0VectorField& u_prev, double alpha) const {
        return blocks(u_prev, alpha, problem_.beta);
    }
    PressureSystem pressure_system(const ElementBlocks& blocks) const;

    // (B u)_j = sum_k B_jk . u_k
    Eigen::VectorXd apply_divergence(const P0VectorField& u) const;
    // (B^T p)_k = |k| grad p_k
    P0VectorField apply_gradient(const P1ScalarField& p) const;

    // P1 stiffness matrix (the Schur operator for A = diag |k|).
    SparseMatrix stiffness() const;

private:
    const Mesh* mesh_;
    ProblemSpec problem_;
    ValidationReport report_;
    std::vector<std::array<Vec2, 3>> coupling_;
    std::vector<Mat2> int_kinv_;
    std::vector<Vec2> int_f_;
    Eigen::VectorXd rhs_;
    // CSR slot of local pair (a, b) of triangle t: slots_[9 t + 3 a + b].
    SparseMatrix pattern_;
    std::vector<Index> slots_;
};

// Conjugate gradients on the quotient by constants: G and every search
// direction are projected onto the complement of the ones vector, and the
// result is shifted to zero integral mean. Throws SolverError with the
// residual history when the tolerance is not met within max_iter.
P1ScalarField solve_pressure(const PressureSystem& system, const Mesh& mesh, const LinearSolverOptions& options = {},
                             const P1ScalarField* warm_start = nullptr, PressureSolveInfo* info = nullptr);

// u_k = A_k^-1 (F_k - |k| grad p_k)
P0VectorField recover_velocity(const Discretization& disc, const ElementBlocks& blocks, const P1ScalarField& p);

struct StepSolution {
    P0VectorField u;
    P1ScalarField p;
    PressureSolveInfo info;
};

// One step of the relaxed linearisation around u_prev.
StepSolution solve_step(const Discretization& disc, const P0VectorField& u_prev, double alpha,
                        const LinearSolverOptions& options = {}, const P1ScalarField* warm_start = nullptr);

// The linear Darcy problem (alpha = beta = 0).
StepSolution darcy_solve(const Discretization& disc, const LinearSolverOptions& options = {});
StepSolution darcy_solve(const Mesh& mesh, const ProblemSpec& problem, const LinearSolverOptions& options = {});

// Forchheimer pairing (beta/rho) sum_k |k| (|v|v - |w|w).(v - w).
double forchheimer_pairing(const Mesh& mesh, const P0VectorField& v, const P0VectorField& w, double beta, double rho);

}  // namespace dfadapt
