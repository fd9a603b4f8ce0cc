#include "dfadapt/adaptivity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "dfadapt/error.hpp"
#include "dfadapt/report.hpp"

namespace dfadapt {

void AdaptConfig::validate() const {
    if (!(theta > 0.0 && theta <= 1.0)) throw ContractViolation("theta must lie in (0, 1]");
    if (max_levels < 1) throw ContractViolation("max_levels must be >= 1");
    if (max_vertices < 0) throw ContractViolation("max_vertices must be >= 0");
}

std::vector<Index> mark_doerfler(std::span<const double> eta_squared, double theta) {
    std::vector<Index> order(eta_squared.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return eta_squared[a] > eta_squared[b]; });
    const double total = pairwise_sum(eta_squared);
    std::vector<Index> marked;
    if (!(total > 0.0)) return marked;
    if (theta >= 1.0) {
        for (std::size_t t = 0; t < eta_squared.size(); ++t)
            if (eta_squared[t] > 0.0) marked.push_back(static_cast<Index>(t));
        return marked;
    }
    const double target = theta * theta * total;
    double acc = 0.0;
    for (Index t : order) {
        if (acc >= target || !(eta_squared[t] > 0.0)) break;
        marked.push_back(t);
        acc += eta_squared[t];
    }
    std::sort(marked.begin(), marked.end());
    return marked;
}

std::vector<Index> mark_max(std::span<const double> eta_squared, double theta) {
    std::vector<Index> marked;
    if (eta_squared.empty()) return marked;
    const double peak = *std::max_element(eta_squared.begin(), eta_squared.end());
    if (!(peak > 0.0)) return marked;
    for (std::size_t t = 0; t < eta_squared.size(); ++t)
        if (eta_squared[t] >= theta * theta * peak) marked.push_back(static_cast<Index>(t));
    return marked;
}

std::vector<Index> mark(const IndicatorSet& indicators, const AdaptConfig& config) {
    std::vector<double> eta2(indicators.elements.size());
    for (std::size_t t = 0; t < eta2.size(); ++t) eta2[t] = indicators.elements[t].eta_D_squared();
    return config.marker == Marker::doerfler ? mark_doerfler(eta2, config.theta) : mark_max(eta2, config.theta);
}

LevelRecord evaluate_level(const Mesh& mesh, const ProblemSpec& problem, const SolveResult& result, int level) {
    LevelRecord r;
    r.level = level;
    r.vertices = mesh.num_vertices();
    r.triangles = mesh.num_triangles();
    r.h = mesh.h();
    r.eta_L = result.indicators.global.eta_L;
    r.eta_D = result.indicators.global.eta_D;
    r.iterations = result.iterations;
    r.converged = result.converged;
    r.E_tot = total_error_indicator(mesh, result.indicators.global, result.u, result.p);
    if (problem.has_exact()) {
        const ExactErrors e = exact_errors(mesh, problem, result.u, result.p);
        r.err = e.relative();
        r.error_u_L2 = e.u_L2;
        r.error_u_L3 = e.u_L3;
        r.error_grad_p_L32 = e.grad_p_L32;
        r.EI = effectivity_index(result.indicators.global, e.u_L3, e.grad_p_L32);
    }
    return r;
}

AdaptResult adaptive_loop(const Mesh& initial, const ProblemSpec& problem, const SolverConfig& solver,
                          const AdaptConfig& adapt, const LevelObserver& observer) {
    solver.validate();
    adapt.validate();
    AdaptResult out;
    Mesh mesh = initial;
    for (int level = 0;; ++level) {
        const Discretization disc(mesh, problem);
        SolveResult res = solve(disc, solver);
        const LevelRecord rec = evaluate_level(mesh, problem, res, level);
        out.levels.push_back(rec);
        if (observer) observer(rec, mesh, res);

        const bool last = level + 1 >= adapt.max_levels;
        std::vector<Index> marked;
        if (!last && rec.eta_D > adapt.eta_threshold) marked = mark(res.indicators, adapt);
        if (last || marked.empty() || (adapt.max_vertices > 0 && mesh.num_vertices() >= adapt.max_vertices)) {
            out.level_cap_reached = last;
            out.solution = std::move(res);
            out.mesh = std::move(mesh);
            return out;
        }
        mesh = refine(mesh, marked);
    }
}

std::vector<LevelRecord> uniform_study(const ProblemSpec& problem, const std::vector<int>& ns,
                                       const SolverConfig& solver, int threads) {
    solver.validate();
    std::vector<LevelRecord> rows(ns.size());
    auto cell = [&](std::size_t i) {
        const Mesh mesh = initial_mesh(problem.domain, ns[i]);
        const Discretization disc(mesh, problem);
        SolverConfig c = solver;
        c.record_indicators = true;
        const SolveResult res = solve(disc, c);
        rows[i] = evaluate_level(mesh, problem, res, static_cast<int>(i));
    };
    const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(ns.size())));
    if (nthreads == 1) {
        for (std::size_t i = 0; i < ns.size(); ++i) cell(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int k = 0; k < nthreads; ++k)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < ns.size(); i = next++) {
                try {
                    cell(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return rows;
}

std::vector<double> convergence_orders(std::span<const double> errors, std::span<const double> h) {
    if (errors.size() != h.size()) throw ContractViolation("convergence_orders: size mismatch");
    std::vector<double> out(errors.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 1; k < errors.size(); ++k)
        out[k] = std::log(errors[k - 1] / errors[k]) / std::log(h[k - 1] / h[k]);
    return out;
}

std::vector<ComparisonRow> compare_adaptive_uniform(std::span<const LevelRecord> adaptive,
                                                    std::span<const LevelRecord> uniform, ComparisonMetric metric,
                                                    Index min_vertices) {
    auto value = [&](const LevelRecord& r) { return metric == ComparisonMetric::err ? r.err : r.E_tot; };
    std::vector<ComparisonRow> out;
    if (uniform.size() < 2) return out;
    for (const LevelRecord& a : adaptive) {
        if (a.vertices < min_vertices) continue;
        for (std::size_t k = 1; k < uniform.size(); ++k) {
            const LevelRecord& lo = uniform[k - 1];
            const LevelRecord& hi = uniform[k];
            if (a.vertices < lo.vertices || a.vertices > hi.vertices) continue;
            const double s = std::log(static_cast<double>(a.vertices) / lo.vertices) /
                             std::log(static_cast<double>(hi.vertices) / lo.vertices);
            const double v = std::exp((1.0 - s) * std::log(value(lo)) + s * std::log(value(hi)));
            out.push_back({a.vertices, value(a), v});
            break;
        }
    }
    return out;
}

std::string study_csv(std::span<const LevelRecord> levels) {
    CsvTable table({"level", "vertices", "triangles", "eta_L", "eta_D", "err", "EI", "E_tot"});
    for (const auto& r : levels)
        table.row({std::to_string(r.level), std::to_string(r.vertices), std::to_string(r.triangles),
                   format_number(r.eta_L), format_number(r.eta_D), format_number(r.err), format_number(r.EI),
                   format_number(r.E_tot)});
    return table.str();
}

}  // namespace dfadapt
