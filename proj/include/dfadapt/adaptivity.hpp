#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dfadapt/nonlinear.hpp"

namespace dfadapt {

enum class Marker { doerfler, max_strategy };

struct AdaptConfig {
    double theta = 0.5;
    int max_levels = 7;     // levels 0 .. max_levels-1
    Index max_vertices = 0; // stop before refining past this count; 0 = no cap
    double eta_threshold = 0.0;  // stop once eta_D <= threshold
    Marker marker = Marker::doerfler;

    void validate() const;
};

struct LevelRecord {
    int level = 0;
    Index vertices = 0;
    Index triangles = 0;
    double h = 0.0;
    double eta_L = 0.0;
    double eta_D = 0.0;
    double err = std::numeric_limits<double>::quiet_NaN();  // relative Err
    double EI = std::numeric_limits<double>::quiet_NaN();
    double E_tot = 0.0;
    double error_u_L2 = std::numeric_limits<double>::quiet_NaN();
    double error_u_L3 = std::numeric_limits<double>::quiet_NaN();
    double error_grad_p_L32 = std::numeric_limits<double>::quiet_NaN();
    int iterations = 0;
    bool converged = false;
};

// Minimal set carrying theta^2 of the total sum of eta_squared; largest
// entries first, ties by element id. Returned sorted by id.
std::vector<Index> mark_doerfler(std::span<const double> eta_squared, double theta);
// All elements with eta >= theta * max eta (eta_squared >= theta^2 max).
std::vector<Index> mark_max(std::span<const double> eta_squared, double theta);
// Marks on eta_D1^2 + eta_D2^2.
std::vector<Index> mark(const IndicatorSet& indicators, const AdaptConfig& config);

// Solves on `mesh` with config and fills one record (errors when exact data exist).
LevelRecord evaluate_level(const Mesh& mesh, const ProblemSpec& problem, const SolveResult& result, int level);

struct AdaptResult {
    std::vector<LevelRecord> levels;
    Mesh mesh;  // final mesh
    SolveResult solution;
    bool level_cap_reached = false;
};

using LevelObserver = std::function<void(const LevelRecord&, const Mesh&, const SolveResult&)>;

// Solve, estimate, mark, refine. Every level solves from scratch with the
// configured initial guess (no transfer of fields between meshes).
AdaptResult adaptive_loop(const Mesh& initial, const ProblemSpec& problem, const SolverConfig& solver,
                          const AdaptConfig& adapt, const LevelObserver& observer = {});

// One record per N on initial_mesh(problem.domain, N).
std::vector<LevelRecord> uniform_study(const ProblemSpec& problem, const std::vector<int>& ns,
                                       const SolverConfig& solver, int threads = 1);

// log(e_{k-1}/e_k) / log(h_{k-1}/h_k); first entry nan.
std::vector<double> convergence_orders(std::span<const double> errors, std::span<const double> h);

enum class ComparisonMetric { err, e_tot };

struct ComparisonRow {
    Index vertices = 0;
    double adaptive = 0.0;
    double uniform = 0.0;  // log-log interpolation of the uniform curve
};

// Matches each adaptive level with vertices >= min_vertices against the
// uniform curve (interpolated in log-log, within its vertex range).
std::vector<ComparisonRow> compare_adaptive_uniform(std::span<const LevelRecord> adaptive,
                                                    std::span<const LevelRecord> uniform, ComparisonMetric metric,
                                                    Index min_vertices = 1000);

// CSV: level,vertices,triangles,eta_L,eta_D,err,EI,E_tot
std::string study_csv(std::span<const LevelRecord> levels);

}  // namespace dfadapt
