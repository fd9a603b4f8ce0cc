#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dfadapt/assembly.hpp"
#include "dfadapt/indicators.hpp"

namespace dfadapt {

enum class InitialGuess { zero, darcy };
enum class StoppingRule { fixed_tol, indicator_balance };

struct SolverConfig {
    double alpha = 1.0;
    double tol_errL = 1e-5;
    double gamma_tilde = 1e-3;
    int max_iter = 5000;
    InitialGuess initial_guess = InitialGuess::zero;
    StoppingRule stopping = StoppingRule::fixed_tol;
    // Compute eta_L, eta_D at every step (always on for indicator_balance).
    bool record_indicators = true;
    LinearSolverOptions linear;

    // Throws ContractViolation on an invalid field.
    void validate() const;
};

struct IterationState {
    P0VectorField u_curr, u_prev;
    P1ScalarField p_curr, p_prev;
    int iter = 0;
    double err_L = 0.0;
    double eta_L = 0.0;
    double eta_D = 0.0;
    int cg_iterations = 0;
};

struct IterationRecord {
    int iter = 0;
    double err_L = 0.0;
    double eta_L = 0.0;
    double eta_D = 0.0;
    int nbr_cg_iters = 0;
};

struct SolveResult {
    P0VectorField u;
    P1ScalarField p;
    std::vector<IterationRecord> trace;
    bool converged = false;
    int iterations = 0;
    // Indicators of the final step (empty unless computed).
    IndicatorSet indicators;
};

// (||du||_L3 + ||grad dp||_L3/2) / (||u_new||_L3 + ||grad p_new||_L3/2); 0 if the denominator is < 1e-300.
double iterative_error(const Mesh& mesh, const P0VectorField& u_new, const P0VectorField& u_old,
                       const P1ScalarField& p_new, const P1ScalarField& p_old);

// u^0 and p^0 for the configured guess (zero, or the Darcy solution).
IterationState initial_state(const Discretization& disc, const SolverConfig& config);

// One relaxed Picard step. Indicators are filled when ctx is given.
IterationState picard_step(const IterationState& state, const Discretization& disc, const SolverConfig& config,
                           const IndicatorContext* ctx = nullptr);

using IterationObserver = std::function<void(const IterationState&)>;

// Iterates until the stopping rule fires or max_iter is reached; the latter
// returns the last iterate with converged = false.
SolveResult solve(const Discretization& disc, const SolverConfig& config, const IterationObserver& observer = {});

std::string trace_csv(const std::vector<IterationRecord>& trace);

struct ExactErrors {
    double u_L3 = 0.0;        // ||u - u_h||_L3
    double u_L2 = 0.0;        // ||u - u_h||_L2
    double grad_p_L32 = 0.0;  // ||grad(p - p_h)||_L3/2
    double norm_u_L3 = 0.0;   // ||u||_L3
    double norm_grad_p_L32 = 0.0;

    // Relative error Err.
    double relative() const;
};

// Requires problem.has_exact().
ExactErrors exact_errors(const Mesh& mesh, const ProblemSpec& problem, const P0VectorField& u, const P1ScalarField& p,
                         const QuadratureRule& rule = triangle_rule(kDefaultQuadratureDegree));

struct SweepRow {
    double alpha = 0.0;
    int nbr = 0;
    bool converged = false;
    double err = std::numeric_limits<double>::quiet_NaN();  // relative Err, nan without exact solution
    std::string failure;                                     // solver error message, if any
};

// One solve per alpha; rows in input order. threads > 1 runs cells concurrently.
std::vector<SweepRow> alpha_sweep(const Discretization& disc, const std::vector<double>& alphas,
                                  const SolverConfig& config, int threads = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows);

// Smallest-Nbr converged alpha (first in input order on ties); nullopt if none converged.
std::optional<double> sweep_minimizer(const std::vector<SweepRow>& rows);

struct AlphaDiagnostics {
    double k_min = 0.0, k_max = 0.0;
    double norm_f_L2 = 0.0, lifting_L2 = 0.0, lifting_L3 = 0.0;
    double ell0 = 0.0, ell1 = 0.0;
    double gamma1 = 0.0, gamma2 = 0.0;
    double alpha_star = 0.0;
    double gt0 = 0.0, gt1 = 0.0, gt2 = 0.0;  // coefficients of phi
    double alpha_star_star = 0.0;
    double c_i = 1.0;
    double h = 0.0;
};

// phi(a) = -gt0 - gt1 a - gt2 a^2 + a^3/8
double phi_tilde(const AlphaDiagnostics& d, double alpha);

AlphaDiagnostics alpha_diagnostics(const Discretization& disc, double c_i = 1.0);

// Minimal-norm P0 field with B u = R: u = grad(lambda), with S0 lambda = R.
P0VectorField compute_lifting(const Discretization& disc, const LinearSolverOptions& options = {});

}  // namespace dfadapt
