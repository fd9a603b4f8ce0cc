#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dfadapt/adaptivity.hpp"

namespace dfadapt {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kOutputDirEnv = "DFADAPT_OUTPUT_DIR";

enum ExitCode : int { kExitOk = 0, kExitConfigError = 2, kExitNumericalFailure = 3 };

struct RunConfig {
    std::string command = "solve";  // solve | sweep | uniform-study | adapt | diagnostics | compare
    std::string problem = "gaussian-vortex";
    nlohmann::json custom_problem;  // used when problem == "custom"
    bool strict_boundary = false;

    std::optional<int> n;   // structured mesh of the problem domain
    std::string mesh_file;  // or a mesh file
    std::vector<int> ns{10, 20, 40, 80};

    double alpha = 1.0;
    std::vector<double> alphas;
    std::optional<double> beta;
    double tol = 1e-5;
    double gamma_tilde = 1e-3;
    int max_iter = 5000;
    // Unset: fixed-tol / zero for solve, sweep, uniform-study, diagnostics;
    // indicator-balance / darcy for adapt and compare.
    std::optional<StoppingRule> stopping;
    std::optional<InitialGuess> guess;
    double cg_tol = 1e-12;
    bool jacobi = false;

    double theta = 0.5;
    int levels = 7;
    int max_vertices = 0;
    Marker marker = Marker::doerfler;
    int min_vertices = 1000;  // compare: smallest matched budget

    double c_i = 1.0;
    std::string output_dir;  // empty: $DFADAPT_OUTPUT_DIR or ./dfadapt-out
    std::uint64_t seed = 0;
    int threads = 1;
    bool svg = true;
};

// Throws ParseError on unknown keys or wrong types.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::json config_to_json(const RunConfig& c);
// Throws ParseError naming the offending field.
void validate_config(const RunConfig& c);
// Solver settings of a run, with the command-dependent defaults applied.
SolverConfig solver_config(const RunConfig& c);

// CLI11-based parser: subcommand, optional --config file, flag overrides.
// Returns nullopt when only help/version was requested (text in `out`).
// Throws ParseError on invalid input.
std::optional<RunConfig> parse_command_line(int argc, const char* const* argv, std::ostream& out);

std::string resolve_output_dir(const RunConfig& c);

struct RunOutcome {
    int exit_code = kExitOk;
    std::string message;
    std::vector<std::string> files;  // written, relative to the output directory
    nlohmann::json summary;
};

// Executes the pipeline and writes the report bundle. Never throws for
// config or numerical problems: they map to exit codes 2 and 3.
RunOutcome run(const RunConfig& config, std::ostream& log);

// Entry point used by the executable.
int cli_main(int argc, const char* const* argv);

}  // namespace dfadapt
