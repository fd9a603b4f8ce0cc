#include "dfadapt/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "dfadapt/error.hpp"
#include "dfadapt/report.hpp"

namespace dfadapt {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCommands = {"solve", "sweep", "uniform-study", "adapt", "diagnostics", "compare"};

std::string normalise(std::string s) {
    for (char& c : s)
        if (c == '_') c = '-';
    return s;
}

StoppingRule parse_stopping(const std::string& s) {
    const auto v = normalise(s);
    if (v == "fixed-tol") return StoppingRule::fixed_tol;
    if (v == "indicator-balance") return StoppingRule::indicator_balance;
    throw ParseError("stopping must be fixed-tol or indicator-balance, got '" + s + "'");
}

InitialGuess parse_guess(const std::string& s) {
    if (s == "zero") return InitialGuess::zero;
    if (s == "darcy") return InitialGuess::darcy;
    throw ParseError("guess must be zero or darcy, got '" + s + "'");
}

Marker parse_marker(const std::string& s) {
    const auto v = normalise(s);
    if (v == "doerfler" || v == "dorfler") return Marker::doerfler;
    if (v == "max" || v == "max-strategy") return Marker::max_strategy;
    throw ParseError("marker must be doerfler or max, got '" + s + "'");
}

const char* name(StoppingRule s) { return s == StoppingRule::fixed_tol ? "fixed-tol" : "indicator-balance"; }
const char* name(InitialGuess g) { return g == InitialGuess::zero ? "zero" : "darcy"; }
const char* name(Marker m) { return m == Marker::doerfler ? "doerfler" : "max"; }

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        try {
            if constexpr (std::is_same_v<T, int>) out.push_back(std::stoi(item, &used));
            else out.push_back(std::stod(item, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw ParseError(std::string("malformed ") + what + " entry '" + item + "'");
    }
    return out;
}

template <class T>
T get(const json& j, const char* key) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ParseError(std::string("config field '") + key + "' has the wrong type");
    }
}

}  // namespace

RunConfig config_from_json(const json& j, RunConfig c) {
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        const std::string k = normalise(key);
        if (k == "command") c.command = get<std::string>(v, "command");
        else if (k == "problem") {
            if (v.is_object()) {
                c.problem = "custom";
                c.custom_problem = v;
            } else {
                c.problem = get<std::string>(v, "problem");
            }
        } else if (k == "strict-boundary") c.strict_boundary = get<bool>(v, "strict_boundary");
        else if (k == "n" || k == "N") c.n = get<int>(v, "N");
        else if (k == "mesh") c.mesh_file = get<std::string>(v, "mesh");
        else if (k == "ns") c.ns = get<std::vector<int>>(v, "ns");
        else if (k == "alpha") c.alpha = get<double>(v, "alpha");
        else if (k == "alphas") c.alphas = get<std::vector<double>>(v, "alphas");
        else if (k == "beta") c.beta = get<double>(v, "beta");
        else if (k == "tol") c.tol = get<double>(v, "tol");
        else if (k == "gamma-tilde") c.gamma_tilde = get<double>(v, "gamma_tilde");
        else if (k == "max-iter") c.max_iter = get<int>(v, "max_iter");
        else if (k == "stopping") c.stopping = parse_stopping(get<std::string>(v, "stopping"));
        else if (k == "guess") c.guess = parse_guess(get<std::string>(v, "guess"));
        else if (k == "cg-tol") c.cg_tol = get<double>(v, "cg_tol");
        else if (k == "jacobi") c.jacobi = get<bool>(v, "jacobi");
        else if (k == "theta") c.theta = get<double>(v, "theta");
        else if (k == "levels") c.levels = get<int>(v, "levels");
        else if (k == "max-vertices") c.max_vertices = get<int>(v, "max_vertices");
        else if (k == "marker") c.marker = parse_marker(get<std::string>(v, "marker"));
        else if (k == "min-vertices") c.min_vertices = get<int>(v, "min_vertices");
        else if (k == "c-i") c.c_i = get<double>(v, "c_i");
        else if (k == "output") c.output_dir = get<std::string>(v, "output");
        else if (k == "seed") c.seed = get<std::uint64_t>(v, "seed");
        else if (k == "threads") c.threads = get<int>(v, "threads");
        else if (k == "svg") c.svg = get<bool>(v, "svg");
        else throw ParseError("unknown config field '" + key + "'");
    }
    return c;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["command"] = c.command;
    if (c.problem == "custom") j["problem"] = c.custom_problem;
    else j["problem"] = c.problem;
    j["strict_boundary"] = c.strict_boundary;
    if (c.n) j["N"] = *c.n;
    if (!c.mesh_file.empty()) j["mesh"] = c.mesh_file;
    j["ns"] = c.ns;
    j["alpha"] = c.alpha;
    if (!c.alphas.empty()) j["alphas"] = c.alphas;
    if (c.beta) j["beta"] = *c.beta;
    j["tol"] = c.tol;
    j["gamma_tilde"] = c.gamma_tilde;
    j["max_iter"] = c.max_iter;
    const SolverConfig s = solver_config(c);
    j["stopping"] = name(s.stopping);
    j["guess"] = name(s.initial_guess);
    j["cg_tol"] = c.cg_tol;
    j["jacobi"] = c.jacobi;
    j["theta"] = c.theta;
    j["levels"] = c.levels;
    j["max_vertices"] = c.max_vertices;
    j["marker"] = name(c.marker);
    j["min_vertices"] = c.min_vertices;
    j["c_i"] = c.c_i;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["svg"] = c.svg;
    return j;
}

void validate_config(const RunConfig& c) {
    if (std::find(kCommands.begin(), kCommands.end(), c.command) == kCommands.end())
        throw ParseError("unknown command '" + c.command + "'");
    if (c.problem != "custom") {
        const auto names = builtin_problem_names();
        if (std::find(names.begin(), names.end(), c.problem) == names.end())
            throw ParseError("unknown problem '" + c.problem + "'");
    }
    if (c.n && !c.mesh_file.empty()) throw ParseError("give either N or a mesh file, not both");
    if (c.n && *c.n < 1) throw ParseError("N must be >= 1");
    if (c.beta && !(*c.beta >= 0.0)) throw ParseError("beta must be >= 0");
    if (!(c.alpha >= 0.0)) throw ParseError("alpha must be >= 0");
    for (double a : c.alphas)
        if (!(a >= 0.0)) throw ParseError("alphas must be >= 0");
    if (!(c.tol > 0.0)) throw ParseError("tol must be positive");
    if (!(c.gamma_tilde > 0.0)) throw ParseError("gamma_tilde must be positive");
    if (c.max_iter < 1) throw ParseError("max_iter must be >= 1");
    if (!(c.cg_tol > 0.0)) throw ParseError("cg_tol must be positive");
    if (!(c.theta > 0.0 && c.theta <= 1.0)) throw ParseError("theta must lie in (0, 1]");
    if (c.levels < 1) throw ParseError("levels must be >= 1");
    if (c.max_vertices < 0) throw ParseError("max_vertices must be >= 0");
    if (!(c.c_i > 0.0)) throw ParseError("c_i must be positive");
    if (c.threads < 1) throw ParseError("threads must be >= 1");
    if (c.command == "uniform-study" || c.command == "compare") {
        if (c.ns.empty()) throw ParseError("ns must not be empty");
        for (int n : c.ns)
            if (n < 1) throw ParseError("ns entries must be >= 1");
    }
}

SolverConfig solver_config(const RunConfig& c) {
    const bool adaptive = c.command == "adapt" || c.command == "compare";
    SolverConfig s;
    s.alpha = c.alpha;
    s.tol_errL = c.tol;
    s.gamma_tilde = c.gamma_tilde;
    s.max_iter = c.max_iter;
    s.stopping = c.stopping.value_or(adaptive ? StoppingRule::indicator_balance : StoppingRule::fixed_tol);
    s.initial_guess = c.guess.value_or(adaptive ? InitialGuess::darcy : InitialGuess::zero);
    s.linear.rel_tol = c.cg_tol;
    s.linear.jacobi = c.jacobi;
    return s;
}

std::string resolve_output_dir(const RunConfig& c) {
    if (!c.output_dir.empty()) return c.output_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "dfadapt-out";
}

std::optional<RunConfig> parse_command_line(int argc, const char* const* argv, std::ostream& out) {
    CLI::App app{"Adaptive finite elements for the Darcy-Forchheimer problem", "dfadapt"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    struct Values {
        std::string config, problem, mesh, alphas, ns, stopping, guess, marker, output, custom;
        int n = 0, max_iter = 0, levels = 0, max_vertices = 0, min_vertices = 0, threads = 0;
        double alpha = 0, beta = 0, tol = 0, gamma_tilde = 0, cg_tol = 0, theta = 0, c_i = 0;
        std::uint64_t seed = 0;
        bool jacobi = false, strict = false, no_svg = false;
    } v;

    const std::map<std::string, std::string> help = {
        {"solve", "Relaxed Picard solve on one mesh"},
        {"sweep", "Iteration counts over a list of alpha values"},
        {"uniform-study", "Errors and convergence orders on uniform meshes"},
        {"adapt", "Adaptive loop: solve, estimate, mark, refine"},
        {"diagnostics", "Theoretical alpha bounds and data validation"},
        {"compare", "Adaptive against uniform refinement at matched vertex counts"}};
    for (const auto& cmd : kCommands) {
        CLI::App* s = app.add_subcommand(cmd, help.at(cmd));
        s->add_option("--config", v.config, "JSON run config; flags override it");
        s->add_option("--problem", v.problem, "gaussian-vortex | reentrant-corner | trivial-zero | custom");
        s->add_option("--custom-problem", v.custom, "JSON file with a custom problem definition");
        s->add_flag("--strict-boundary", v.strict, "Use g = 0 for the Gaussian vortex");
        s->add_option("--N", v.n, "Mesh resolution (squares per unit length)");
        s->add_option("--mesh", v.mesh, "Mesh file");
        s->add_option("--ns", v.ns, "Comma-separated N list for studies");
        s->add_option("--alpha", v.alpha, "Relaxation parameter");
        s->add_option("--alphas", v.alphas, "Comma-separated alpha list");
        s->add_option("--beta", v.beta, "Forchheimer coefficient");
        s->add_option("--tol", v.tol, "Err_L tolerance");
        s->add_option("--gamma-tilde", v.gamma_tilde, "Indicator balance factor");
        s->add_option("--max-iter", v.max_iter, "Nonlinear iteration cap");
        s->add_option("--stopping", v.stopping, "fixed-tol | indicator-balance");
        s->add_option("--guess", v.guess, "zero | darcy");
        s->add_option("--cg-tol", v.cg_tol, "Relative CG tolerance");
        s->add_flag("--jacobi", v.jacobi, "Jacobi-preconditioned CG");
        s->add_option("--theta", v.theta, "Marking fraction");
        s->add_option("--levels", v.levels, "Adaptive level cap");
        s->add_option("--max-vertices", v.max_vertices, "Stop refining beyond this vertex count");
        s->add_option("--marker", v.marker, "doerfler | max");
        s->add_option("--min-vertices", v.min_vertices, "Smallest compared vertex budget");
        s->add_option("--c-i", v.c_i, "Inverse-inequality constant for diagnostics");
        s->add_option("--output,-o", v.output, std::string("Output directory (default $") + kOutputDirEnv + ")");
        s->add_option("--seed", v.seed, "Seed recorded in the manifest");
        s->add_option("--threads", v.threads, "Worker threads for sweeps and studies");
        s->add_flag("--no-svg", v.no_svg, "Skip SVG renderings");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, out);
        return std::nullopt;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, out);
        return std::nullopt;
    } catch (const CLI::CallForVersion& e) {
        app.exit(e, out, out);
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        throw ParseError(e.what());
    }

    CLI::App* sub = app.get_subcommands().front();
    auto given = [&](const char* opt) { return sub->get_option(opt)->count() > 0; };

    RunConfig c;
    if (given("--config")) {
        std::ifstream in(v.config);
        if (!in) throw ParseError("cannot open config file '" + v.config + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ParseError("config file '" + v.config + "': " + e.what());
        }
        c = config_from_json(j, c);
    }
    c.command = sub->get_name();
    if (given("--problem")) c.problem = v.problem;
    if (given("--custom-problem")) {
        std::ifstream in(v.custom);
        if (!in) throw ParseError("cannot open custom problem file '" + v.custom + "'");
        try {
            c.custom_problem = json::parse(in);
        } catch (const json::exception& e) {
            throw ParseError("custom problem file '" + v.custom + "': " + e.what());
        }
        c.problem = "custom";
    }
    if (given("--strict-boundary")) c.strict_boundary = v.strict;
    if (given("--N")) {
        c.n = v.n;
        c.mesh_file.clear();
    }
    if (given("--mesh")) {
        c.mesh_file = v.mesh;
        if (!given("--N")) c.n.reset();
    }
    if (given("--ns")) c.ns = parse_list<int>(v.ns, "ns");
    if (given("--alpha")) c.alpha = v.alpha;
    if (given("--alphas")) c.alphas = parse_list<double>(v.alphas, "alphas");
    if (given("--beta")) c.beta = v.beta;
    if (given("--tol")) c.tol = v.tol;
    if (given("--gamma-tilde")) c.gamma_tilde = v.gamma_tilde;
    if (given("--max-iter")) c.max_iter = v.max_iter;
    if (given("--stopping")) c.stopping = parse_stopping(v.stopping);
    if (given("--guess")) c.guess = parse_guess(v.guess);
    if (given("--cg-tol")) c.cg_tol = v.cg_tol;
    if (given("--jacobi")) c.jacobi = v.jacobi;
    if (given("--theta")) c.theta = v.theta;
    if (given("--levels")) c.levels = v.levels;
    if (given("--max-vertices")) c.max_vertices = v.max_vertices;
    if (given("--marker")) c.marker = parse_marker(v.marker);
    if (given("--min-vertices")) c.min_vertices = v.min_vertices;
    if (given("--c-i")) c.c_i = v.c_i;
    if (given("--output")) c.output_dir = v.output;
    if (given("--seed")) c.seed = v.seed;
    if (given("--threads")) c.threads = v.threads;
    if (given("--no-svg")) c.svg = !v.no_svg;
    return c;
}

namespace {

class Bundle {
public:
    Bundle(fs::path dir, RunOutcome& outcome) : dir_(std::move(dir)), outcome_(outcome) {}

    void write(const std::string& file, const std::string& text) {
        std::ofstream out(dir_ / file, std::ios::binary);
        out << text;
        if (!out) throw Error("cannot write '" + (dir_ / file).string() + "'");
        outcome_.files.push_back(file);
    }

private:
    fs::path dir_;
    RunOutcome& outcome_;
};

double log10_or_nan(double v) { return v > 0.0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN(); }

json number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);  // JSON has no inf/nan
}

ProblemSpec make_problem(const RunConfig& c) {
    if (c.problem == "custom") {
        ProblemSpec p = problem_from_json(c.custom_problem);
        if (c.beta) p.beta = *c.beta;
        return p;
    }
    const double default_beta = c.problem == "reentrant-corner" ? 10.0 : 1.0;
    return builtin_problem(c.problem, c.beta.value_or(default_beta), c.strict_boundary);
}

std::vector<double> velocity_magnitude(const P0VectorField& u) {
    std::vector<double> v(u.size());
    for (Index t = 0; t < u.size(); ++t) v[t] = u[t].norm();
    return v;
}

void write_fields(Bundle& b, const RunConfig& c, const Mesh& mesh, const P0VectorField& u, const P1ScalarField& p) {
    b.write("u.p0field", write_field(u));
    b.write("p.p1field", write_field(p));
    if (!c.svg) return;
    b.write("mesh.svg", render_mesh_svg(mesh));
    const auto mag = velocity_magnitude(u);
    b.write("velocity.svg", render_mesh_svg(mesh, mag));
    b.write("pressure.svg", render_vertex_field_svg(mesh, {p.values.data(), static_cast<std::size_t>(p.size())}));
}

json level_json(const LevelRecord& r) {
    return {{"level", r.level},          {"vertices", r.vertices}, {"triangles", r.triangles},
            {"eta_L", number(r.eta_L)},  {"eta_D", number(r.eta_D)}, {"err", number(r.err)},
            {"log10_err", number(log10_or_nan(r.err))}, {"EI", number(r.EI)}, {"E_tot", number(r.E_tot)},
            {"iterations", r.iterations}, {"converged", r.converged}};
}

void run_solve(const RunConfig& c, const ProblemSpec& pb, const Mesh& mesh, Bundle& b, RunOutcome& o,
               std::ostream& log) {
    const Discretization disc(mesh, pb);
    const SolverConfig sc = solver_config(c);
    const SolveResult r = solve(disc, sc);
    b.write("trace.csv", trace_csv(r.trace));
    b.write("indicators.csv", indicators_csv(r.indicators));
    write_fields(b, c, mesh, r.u, r.p);
    const double err_l = r.trace.empty() ? 0.0 : r.trace.back().err_L;
    json s = {{"iterations", r.iterations},
              {"converged", r.converged},
              {"err_L", number(err_l)},
              {"log10_err_L", number(log10_or_nan(err_l))},
              {"eta_L", number(r.indicators.global.eta_L)},
              {"eta_D", number(r.indicators.global.eta_D)},
              {"E_tot", number(total_error_indicator(mesh, r.indicators.global, r.u, r.p))},
              {"vertices", mesh.num_vertices()},
              {"triangles", mesh.num_triangles()}};
    if (pb.has_exact()) {
        const ExactErrors e = exact_errors(mesh, pb, r.u, r.p);
        s["err"] = number(e.relative());
        s["log10_err"] = number(log10_or_nan(e.relative()));
        s["EI"] = number(effectivity_index(r.indicators.global, e.u_L3, e.grad_p_L32));
    }
    o.summary = s;
    log << "solve: " << r.iterations << " iterations, converged=" << r.converged << ", Err_L=" << format_number(err_l)
        << '\n';
    if (!r.converged) {
        o.exit_code = kExitNumericalFailure;
        o.message = "nonlinear iteration did not converge in " + std::to_string(r.iterations) +
                    " iterations; trace in trace.csv";
    }
}

void run_sweep(const RunConfig& c, const ProblemSpec& pb, const Mesh& mesh, Bundle& b, RunOutcome& o,
               std::ostream& log) {
    const Discretization disc(mesh, pb);
    const std::vector<double> alphas = c.alphas.empty() ? std::vector<double>{c.alpha} : c.alphas;
    const auto rows = alpha_sweep(disc, alphas, solver_config(c), c.threads);
    b.write("sweep.csv", sweep_csv(rows));
    json table = json::array();
    for (const auto& r : rows) {
        table.push_back({{"alpha", r.alpha}, {"nbr", r.nbr}, {"converged", r.converged}, {"err", number(r.err)},
                         {"log10_err", number(log10_or_nan(r.err))}});
        if (!r.failure.empty()) table.back()["failure"] = r.failure;
        log << "sweep: alpha=" << format_number(r.alpha) << " nbr=" << r.nbr << (r.converged ? "" : " (not converged)")
            << '\n';
    }
    o.summary = {{"rows", table}};
    if (const auto m = sweep_minimizer(rows)) o.summary["alpha_min"] = *m;
}

void run_uniform(const RunConfig& c, const ProblemSpec& pb, Bundle& b, RunOutcome& o, std::ostream& log) {
    const auto levels = uniform_study(pb, c.ns, solver_config(c), c.threads);
    b.write("study.csv", study_csv(levels));
    std::vector<double> eu, ep, h;
    for (const auto& l : levels) {
        eu.push_back(l.error_u_L2);
        ep.push_back(l.error_grad_p_L32);
        h.push_back(l.h);
    }
    const auto ou = convergence_orders(eu, h), op = convergence_orders(ep, h);
    CsvTable eoc({"N", "h", "vertices", "err_u_L2", "err_grad_p_L32", "eoc_u_L2", "eoc_grad_p_L32"});
    json rows = json::array();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        eoc.row({std::to_string(c.ns[i]), format_number(h[i]), std::to_string(levels[i].vertices), format_number(eu[i]),
                 format_number(ep[i]), format_number(ou[i]), format_number(op[i])});
        json r = level_json(levels[i]);
        r["eoc_u_L2"] = number(ou[i]);
        r["eoc_grad_p_L32"] = number(op[i]);
        rows.push_back(r);
        log << "uniform-study: N=" << c.ns[i] << " err=" << format_number(levels[i].err) << '\n';
    }
    b.write("eoc.csv", eoc.str());
    o.summary = {{"levels", rows}};
}

AdaptResult run_adaptive(const RunConfig& c, const ProblemSpec& pb, const Mesh& mesh, Bundle& b,
                         std::ostream& log) {
    AdaptConfig ac;
    ac.theta = c.theta;
    ac.max_levels = c.levels;
    ac.max_vertices = c.max_vertices;
    ac.marker = c.marker;
    return adaptive_loop(mesh, pb, solver_config(c), ac,
                         [&](const LevelRecord& r, const Mesh& m, const SolveResult& s) {
                             log << "adapt: level " << r.level << " vertices=" << r.vertices
                                 << " eta_D=" << format_number(r.eta_D) << " EI=" << format_number(r.EI) << '\n';
                             if (c.svg) {
                                 std::vector<double> eta(m.num_triangles());
                                 for (Index t = 0; t < m.num_triangles(); ++t)
                                     eta[t] = std::sqrt(s.indicators.elements[t].eta_D_squared());
                                 b.write("mesh_level_" + std::to_string(r.level) + ".svg", render_mesh_svg(m, eta));
                             }
                         });
}

void run_adapt(const RunConfig& c, const ProblemSpec& pb, const Mesh& mesh, Bundle& b, RunOutcome& o,
               std::ostream& log) {
    const AdaptResult r = run_adaptive(c, pb, mesh, b, log);
    b.write("study.csv", study_csv(r.levels));
    b.write("indicators.csv", indicators_csv(r.solution.indicators));
    write_fields(b, c, r.mesh, r.solution.u, r.solution.p);
    json rows = json::array();
    for (const auto& l : r.levels) rows.push_back(level_json(l));
    o.summary = {{"levels", rows}, {"level_cap_reached", r.level_cap_reached}};
}

void run_compare(const RunConfig& c, const ProblemSpec& pb, const Mesh& mesh, Bundle& b, RunOutcome& o,
                 std::ostream& log) {
    const AdaptResult a = run_adaptive(c, pb, mesh, b, log);
    const auto u = uniform_study(pb, c.ns, solver_config(c), c.threads);
    const ComparisonMetric metric = pb.has_exact() ? ComparisonMetric::err : ComparisonMetric::e_tot;
    const auto rows = compare_adaptive_uniform(a.levels, u, metric, c.min_vertices);
    b.write("adaptive.csv", study_csv(a.levels));
    b.write("uniform.csv", study_csv(u));
    CsvTable t({"vertices", "adaptive", "uniform"});
    json j = json::array();
    bool wins = !rows.empty();
    for (const auto& r : rows) {
        t.row({std::to_string(r.vertices), format_number(r.adaptive), format_number(r.uniform)});
        j.push_back({{"vertices", r.vertices}, {"adaptive", number(r.adaptive)}, {"uniform", number(r.uniform)}});
        wins = wins && r.adaptive < r.uniform;
    }
    b.write("comparison.csv", t.str());
    o.summary = {{"metric", metric == ComparisonMetric::err ? "err" : "E_tot"}, {"rows", j}, {"adaptive_wins", wins}};
}

void run_diagnostics(const RunConfig& c, const ProblemSpec& pb, const Mesh& mesh, Bundle& b, RunOutcome& o) {
    const Discretization disc(mesh, pb);
    const AlphaDiagnostics d = alpha_diagnostics(disc, c.c_i);
    const ValidationReport& v = disc.report();
    json j = {{"h", d.h},
              {"K_m", d.k_min},
              {"K_M", d.k_max},
              {"int_b", v.integral_b},
              {"int_g", v.integral_g},
              {"compatibility_residual", v.compatibility_residual},
              {"f_L2", d.norm_f_L2},
              {"lifting_L2", d.lifting_L2},
              {"lifting_L3", d.lifting_L3},
              {"ell0", number(d.ell0)},
              {"ell1", number(d.ell1)},
              {"gamma1", number(d.gamma1)},
              {"gamma2", number(d.gamma2)},
              {"alpha_star", number(d.alpha_star)},
              {"gamma_tilde0", number(d.gt0)},
              {"gamma_tilde1", number(d.gt1)},
              {"gamma_tilde2", number(d.gt2)},
              {"alpha_star_star", number(d.alpha_star_star)},
              {"C_I", d.c_i},
              {"shape_ratio", mesh.shape_ratio()}};
    b.write("diagnostics.json", j.dump(2) + "\n");
    o.summary = j;
}

}  // namespace

RunOutcome run(const RunConfig& config, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    RunOutcome o;
    ProblemSpec pb;
    Mesh mesh;
    fs::path dir;
    try {
        validate_config(config);
        pb = make_problem(config);
        if (!config.mesh_file.empty()) mesh = load_mesh_file(config.mesh_file);
        else mesh = initial_mesh(pb.domain, config.n.value_or(10));
        validate(pb, mesh);
        dir = resolve_output_dir(config);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec || !fs::is_directory(dir)) throw ParseError("output directory '" + dir.string() + "' is not writable");
    } catch (const Error& e) {
        o.exit_code = kExitConfigError;
        o.message = e.what();
        return o;
    } catch (const ContractViolation& e) {
        o.exit_code = kExitConfigError;
        o.message = e.what();
        return o;
    }

    Bundle b(dir, o);
    try {
        if (config.command == "solve") run_solve(config, pb, mesh, b, o, log);
        else if (config.command == "sweep") run_sweep(config, pb, mesh, b, o, log);
        else if (config.command == "uniform-study") run_uniform(config, pb, b, o, log);
        else if (config.command == "adapt") run_adapt(config, pb, mesh, b, o, log);
        else if (config.command == "compare") run_compare(config, pb, mesh, b, o, log);
        else run_diagnostics(config, pb, mesh, b, o);
    } catch (const SolverError& e) {
        CsvTable t({"iter", "relative_residual"});
        for (std::size_t i = 0; i < e.residual_history.size(); ++i)
            t.row({std::to_string(i), format_number(e.residual_history[i])});
        b.write("failure_trace.csv", t.str());
        o.exit_code = kExitNumericalFailure;
        o.message = std::string(e.what()) + "; residual history in " + (dir / "failure_trace.csv").string();
    } catch (const DataError& e) {
        o.exit_code = kExitNumericalFailure;
        o.message = e.what();
    }

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest = {{"tool", "dfadapt"},
                     {"version", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__},
                     {"config", config_to_json(config)},
                     {"exit_code", o.exit_code},
                     {"message", o.message},
                     {"summary", o.summary},
                     {"files", o.files},
                     {"timings", {{"total_seconds", seconds}}}};
    try {
        std::ofstream out(dir / "manifest.json");
        out << manifest.dump(2) << '\n';
        o.files.push_back("manifest.json");
    } catch (const std::exception&) {
    }
    return o;
}

int cli_main(int argc, const char* const* argv) {
    std::optional<RunConfig> config;
    try {
        config = parse_command_line(argc, argv, std::cout);
    } catch (const Error& e) {
        std::cerr << "dfadapt: " << e.what() << '\n';
        return kExitConfigError;
    }
    if (!config) return kExitOk;
    const RunOutcome o = run(*config, std::cerr);
    if (o.exit_code != kExitOk) std::cerr << "dfadapt: " << o.message << '\n';
    else std::cout << "wrote " << o.files.size() << " files to " << resolve_output_dir(*config) << '\n';
    return o.exit_code;
}

}  // namespace dfadapt
