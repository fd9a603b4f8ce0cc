// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "common/oracles.hpp"
#include "dfadapt/adaptivity.hpp"
#include "dfadapt/report.hpp"

using namespace dfadapt;

namespace {

struct Verdict {
    bool pass = true;
    std::vector<std::string> details;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        details.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
    }
    void note(const std::string& what) { details.push_back("     " + what); }
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

template <class T>
std::string join(const std::vector<T>& xs) {
    std::ostringstream s;
    for (std::size_t i = 0; i < xs.size(); ++i) s << (i ? " " : "") << xs[i];
    return s.str();
}

SolverConfig sweep_solver(InitialGuess guess) {
    SolverConfig c;
    c.tol_errL = 1e-5;
    c.initial_guess = guess;
    c.stopping = StoppingRule::fixed_tol;
    c.max_iter = 5000;
    return c;
}

struct Sweep {
    std::vector<SweepRow> rows;
    double seconds = 0.0;
};

Sweep run_sweep(double beta, int n, const std::vector<double>& alphas, InitialGuess guess) {
    const auto t0 = std::chrono::steady_clock::now();
    const ProblemSpec pb = gaussian_vortex(beta);
    const Mesh mesh = generate_structured(n);
    const Discretization disc(mesh, pb);
    Sweep s;
    s.rows = alpha_sweep(disc, alphas, sweep_solver(guess));
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return s;
}

// Strictly decreasing to the minimum, strictly increasing after it.
bool u_shaped(const std::vector<int>& nbr) {
    std::size_t k = std::min_element(nbr.begin(), nbr.end()) - nbr.begin();
    for (std::size_t i = 0; i < k; ++i)
        if (!(nbr[i] > nbr[i + 1])) return false;
    for (std::size_t i = k; i + 1 < nbr.size(); ++i)
        if (!(nbr[i] < nbr[i + 1])) return false;
    return true;
}

const std::vector<double> kGridBeta1{0.001, 0.01, 0.1, 1, 1.4, 1.9, 2.1, 2.3, 2.5, 2.7, 3, 3.7, 5, 10, 100, 1000};
const std::vector<double> kGridBeta10{0.001, 0.01, 0.1, 1, 6, 8, 10, 11, 12, 13, 14, 15, 18, 21, 35, 100, 1000};
const std::vector<double> kDarcyGridBeta1{0.001, 0.01, 0.1, 1,  1.4, 1.9, 2.3, 2.6, 2.9,
                                          3.3,   3.7,  4,   5,  6,   10,  100, 1000};
const std::vector<double> kDarcyGridBeta10{0.001, 0.01, 0.1, 1, 6, 10, 11, 12, 13, 14, 15, 16, 18, 21, 28, 100, 1000};

Verdict table_criterion(const Sweep& s, double lo, double hi, double nbr_ref, double log_err_ref) {
    Verdict v;
    std::vector<int> nbr;
    bool all_converged = true;
    for (const auto& r : s.rows) {
        nbr.push_back(r.nbr);
        all_converged = all_converged && r.converged;
    }
    v.note("alpha: " + [&] {
        std::vector<std::string> a;
        for (const auto& r : s.rows) a.push_back(fmt(r.alpha));
        return join(a);
    }());
    v.note("Nbr:   " + join(nbr));
    v.require(all_converged, "every alpha converged");
    v.require(u_shaped(nbr), "Nbr strictly decreases then strictly increases");
    const auto best = sweep_minimizer(s.rows);
    v.require(best && *best >= lo && *best <= hi,
              "minimizer " + (best ? fmt(*best) : std::string("none")) + " in [" + fmt(lo) + ", " + fmt(hi) + "]");
    if (best) {
        for (const auto& r : s.rows) {
            if (r.alpha != *best) continue;
            v.require(std::abs(r.nbr - nbr_ref) <= 0.3 * nbr_ref,
                      "Nbr at minimizer " + std::to_string(r.nbr) + " within 30% of " + fmt(nbr_ref));
            const double le = std::log10(r.err);
            v.require(std::abs(le - log_err_ref) <= 0.10,
                      "log10(Err) " + fmt(le) + " within 0.10 of " + fmt(log_err_ref));
        }
    }
    v.note("sweep time " + fmt(s.seconds, 3) + " s");
    return v;
}

// Slope of log(e) against log(h) by least squares.
double fitted_order(const std::vector<double>& e, const std::vector<double>& h) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double x = std::log(h[i]), y = std::log(e[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::map<double, int> by_alpha(const std::vector<SweepRow>& rows) {
    std::map<double, int> m;
    for (const auto& r : rows) m[r.alpha] = r.converged ? r.nbr : 1 << 30;
    return m;
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, Verdict>> results;
    auto report = [&](const std::string& name, const Verdict& v) {
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << "\n";
        for (const auto& d : v.details) std::cout << "       " << d << "\n";
        std::cout.flush();
        results.push_back({name, v});
    };

    // 1, 2: alpha sweeps, zero initial guess, N = 60.
    const Sweep z1 = run_sweep(1.0, 60, kGridBeta1, InitialGuess::zero);
    Verdict c1 = table_criterion(z1, 1.4, 3.7, 14, -0.939);
    c1.require(z1.seconds < 300.0, "sweep runtime under 5 minutes");
    report("1 alpha sweep shape, beta=1", c1);

    const Sweep z10 = run_sweep(10.0, 60, kGridBeta10, InitialGuess::zero);
    report("2 alpha sweep, beta=10", table_criterion(z10, 10, 15, 30, -0.475));

    // 3: Darcy initial guess on the alpha values shared by both grids.
    {
        Verdict v;
        for (double beta : {1.0, 10.0}) {
            const auto& zgrid = beta == 1.0 ? kGridBeta1 : kGridBeta10;
            const auto& dgrid = beta == 1.0 ? kDarcyGridBeta1 : kDarcyGridBeta10;
            std::vector<double> shared;
            for (double a : zgrid)
                if (std::find(dgrid.begin(), dgrid.end(), a) != dgrid.end()) shared.push_back(a);
            const Sweep d = run_sweep(beta, 60, shared, InitialGuess::darcy);
            const auto zero = by_alpha(beta == 1.0 ? z1.rows : z10.rows);
            for (const auto& r : d.rows) {
                const int zn = zero.at(r.alpha);
                const int dn = r.converged ? r.nbr : 1 << 30;
                v.require(dn <= zn + 2, "beta=" + fmt(beta) + " alpha=" + fmt(r.alpha) + ": darcy " +
                                            std::to_string(dn) + " vs zero " + std::to_string(zn));
            }
        }
        report("3 Darcy initial guess", v);
    }

    // 4: a-priori rates on uniform meshes.
    {
        Verdict v;
        SolverConfig c = sweep_solver(InitialGuess::darcy);
        c.alpha = 2.3;
        const std::vector<int> ns{10, 20, 40, 80};
        const auto rows = uniform_study(gaussian_vortex(1.0), ns, c);
        std::vector<double> eu, ep, h;
        for (const auto& r : rows) {
            eu.push_back(r.error_u_L2);
            ep.push_back(r.error_grad_p_L32);
            h.push_back(r.h);
        }
        const auto ou = convergence_orders(eu, h), op = convergence_orders(ep, h);
        for (std::size_t k = 1; k < ns.size(); ++k)
            v.note("N " + std::to_string(ns[k - 1]) + "->" + std::to_string(ns[k]) + ": u order " + fmt(ou[k]) +
                   ", grad p order " + fmt(op[k]));
        const double fu = fitted_order(eu, h), fp = fitted_order(ep, h);
        v.require(fu >= 0.9, "least-squares order of ||u-u_h||_L2 over the study = " + fmt(fu));
        v.require(fp >= 0.9, "least-squares order of ||grad(p-p_h)||_L3/2 over the study = " + fmt(fp));
        v.require(ou.back() >= 0.9, "finest-pair order of ||u-u_h||_L2 = " + fmt(ou.back()));
        v.require(op.back() >= 0.9, "finest-pair order of ||grad(p-p_h)||_L3/2 = " + fmt(op.back()));
        report("4 a-priori convergence rates", v);
    }

    // 5: effectivity index over the adaptive levels.
    {
        Verdict v;
        SolverConfig c = sweep_solver(InitialGuess::darcy);
        c.alpha = 10.0;
        c.gamma_tilde = 1e-3;
        c.stopping = StoppingRule::indicator_balance;
        AdaptConfig a;
        a.max_levels = 7;
        const AdaptResult r = adaptive_loop(generate_structured(10), gaussian_vortex(10.0), c, a);
        std::vector<std::string> ei, nv;
        bool in_range = true;
        for (const auto& l : r.levels) {
            ei.push_back(fmt(l.EI));
            nv.push_back(std::to_string(l.vertices));
            in_range = in_range && l.EI >= 10.0 && l.EI <= 60.0;
        }
        v.note("vertices: " + join(nv));
        v.note("EI:       " + join(ei));
        v.require(r.levels.size() == 7, "7 levels computed");
        v.require(in_range, "EI in [10, 60] at every level");
        v.require(r.levels.back().EI < r.levels.front().EI, "EI(last) < EI(first)");
        report("5 effectivity index", v);
    }

    // 6: adaptive vs uniform at matched vertex budgets >= 1000.
    {
        Verdict v;
        SolverConfig c = sweep_solver(InitialGuess::darcy);
        c.stopping = StoppingRule::indicator_balance;
        AdaptConfig a;
        a.theta = 0.7;
        a.max_levels = 40;
        a.max_vertices = 6000;

        const ProblemSpec t1 = gaussian_vortex(1.0);
        c.alpha = 2.3;
        const AdaptResult ad1 = adaptive_loop(generate_structured(10), t1, c, a);
        const auto un1 = uniform_study(t1, {10, 20, 40, 80, 100}, c);
        const auto rows1 = compare_adaptive_uniform(ad1.levels, un1, ComparisonMetric::err, 1000);
        v.require(!rows1.empty(), "test 1: " + std::to_string(rows1.size()) + " matched budgets >= 1000");
        for (const auto& row : rows1)
            v.require(row.adaptive < row.uniform, "test 1 at " + std::to_string(row.vertices) +
                                                      " vertices: Err adaptive " + fmt(row.adaptive) + " < uniform " +
                                                      fmt(row.uniform));

        const ProblemSpec t2 = reentrant_corner();
        c.alpha = 10.0;
        const AdaptResult ad2 = adaptive_loop(initial_mesh(t2.domain, 4), t2, c, a);
        const auto un2 = uniform_study(t2, {4, 8, 16, 32, 48}, c);
        const auto rows2 = compare_adaptive_uniform(ad2.levels, un2, ComparisonMetric::e_tot, 1000);
        v.require(!rows2.empty(), "test 2: " + std::to_string(rows2.size()) + " matched budgets >= 1000");
        for (const auto& row : rows2)
            v.require(row.adaptive < row.uniform, "test 2 at " + std::to_string(row.vertices) +
                                                      " vertices: E_tot adaptive " + fmt(row.adaptive) +
                                                      " < uniform " + fmt(row.uniform));
        report("6 adaptive beats uniform", v);
    }

    // 7: alpha_min growth with refinement, beta = 100.
    {
        Verdict v;
        std::vector<double> grid;
        for (double a = 20; a <= 200; a += 10) grid.push_back(a);
        double prev = 0.0;
        for (int n : {10, 20, 40}) {
            const Sweep s = run_sweep(100.0, n, grid, InitialGuess::zero);
            const auto best = sweep_minimizer(s.rows);
            std::vector<int> nbr;
            for (const auto& r : s.rows) nbr.push_back(r.converged ? r.nbr : -1);
            v.note("N=" + std::to_string(n) + " Nbr: " + join(nbr));
            v.require(best.has_value() && *best >= prev,
                      "N=" + std::to_string(n) + ": alpha_min " + (best ? fmt(*best) : std::string("none")) +
                          " >= previous " + fmt(prev));
            if (best) prev = *best;
        }
        report("7 alpha_min non-decreasing under refinement", v);
    }

    // 8: Schur solve against the dense saddle-point oracle.
    {
        Verdict v;
        std::vector<Mesh> meshes{generate_structured(1), generate_structured(2), generate_structured(3),
                                 generate_structured(4), generate_lshape(1)};
        meshes.push_back(refine(generate_structured(2), std::vector<Index>{1, 4}));
        double worst_u = 0.0, worst_p = 0.0;
        int cases = 0;
        for (unsigned seed = 0; seed < 10; ++seed)
            for (const Mesh& m : meshes) {
                if (m.num_triangles() > 32) continue;
                const ProblemSpec pb = oracle::random_problem(seed);
                const Discretization disc(m, pb);
                const P0VectorField up = oracle::random_p0(m.num_triangles(), 1000 + seed);
                const StepSolution s = solve_step(disc, up, 0.5 + 0.3 * seed);
                const auto d = oracle::dense_saddle(m, pb, up, 0.5 + 0.3 * seed, pb.beta);
                const double scale = std::max(1.0, d.p.values.norm());
                for (Index t = 0; t < m.num_triangles(); ++t)
                    worst_u = std::max(worst_u, (s.u[t] - d.u[t]).norm() / scale);
                worst_p = std::max(worst_p, (s.p.values - d.p.values).lpNorm<Eigen::Infinity>() / scale);
                ++cases;
            }
        v.require(worst_u <= 1e-10, std::to_string(cases) + " cases, max velocity difference " + fmt(worst_u));
        v.require(worst_p <= 1e-10, "max pressure difference " + fmt(worst_p));
        report("8 oracle equivalence", v);
    }

    // 9: property suites.
    {
        Verdict v;
        const Mesh m = generate_structured(4);
        double pair_min = 1e300;
        for (unsigned k = 0; k < 1000; ++k) {
            const auto a = oracle::random_p0(m.num_triangles(), 2 * k, 3.0);
            const auto b = oracle::random_p0(m.num_triangles(), 2 * k + 1, 3.0);
            pair_min = std::min(pair_min, forchheimer_pairing(m, a, b, 2.0, 1.3));
        }
        v.require(pair_min >= 0.0, "Forchheimer pairing >= 0 on 1000 pairs (min " + fmt(pair_min) + ")");

        const ProblemSpec vortex = gaussian_vortex(1.0);
        bool lb = true;
        for (unsigned k = 0; k < 50; ++k)
            for (const auto& e : lower_bound_check(m, oracle::random_p0(m.num_triangles(), 5000 + 2 * k),
                                                   oracle::random_p0(m.num_triangles(), 5001 + 2 * k), vortex.exact_u))
                lb = lb && e.holds;
        v.require(lb, "linearisation lower bound holds elementwise on 50 random iterate pairs");

        const Mesh mesh = generate_structured(12);
        const Discretization disc(mesh, vortex);
        SolverConfig c = sweep_solver(InitialGuess::zero);
        c.alpha = 2.3;
        const SolveResult r = solve(disc, c);
        double l = 0, d = 0;
        for (const auto& e : r.indicators.elements) {
            l += e.eta_L * e.eta_L;
            d += e.eta_D_squared();
        }
        const auto& g = r.indicators.global;
        v.require(std::abs(g.eta_L * g.eta_L - l) <= 1e-12 * std::max(l, 1e-300) &&
                      std::abs(g.eta_D * g.eta_D - d) <= 1e-12 * d,
                  "aggregates equal root-sum-squares to 1e-12");

        Mesh rm = generate_lshape(2);
        bool census = true;
        for (int step = 0; step < 4; ++step) {
            std::vector<Index> marked;
            for (Index t = 0; t < rm.num_triangles(); t += 3) marked.push_back(t);
            rm = refine(rm, marked);
            Index b = 0, i = 0;
            for (const auto& [pair, cnt] : oracle::edge_census(rm)) (cnt == 1 ? b : i)++;
            census = census && b == rm.num_boundary_edges() && i == rm.num_edges() - rm.num_boundary_edges() &&
                     oracle::no_hanging_nodes(rm);
        }
        v.require(census, "edge census and conformity after 4 refinements");

        double duality = 0.0;
        const Discretization dd(rm, oracle::random_problem(3));
        for (unsigned k = 0; k < 10; ++k) {
            P1ScalarField q(rm.num_vertices());
            for (Index j = 0; j < rm.num_vertices(); ++j) q.values[j] = std::sin(1.0 + j * (k + 1));
            const auto u = oracle::random_p0(rm.num_triangles(), 77 + k);
            double lhs = 0.0;
            for (Index t = 0; t < rm.num_triangles(); ++t) {
                const auto hg = oracle::hat_grads(rm, t);
                Vec2 gq = Vec2::Zero();
                for (int a = 0; a < 3; ++a) gq += q.values[rm.triangle(t).vertices[a]] * hg[a];
                lhs += rm.triangle(t).area * gq.dot(u[t]);
            }
            duality = std::max(duality, std::abs(lhs - q.values.dot(dd.apply_divergence(u))));
        }
        v.require(duality < 1e-12, "divergence duality residual " + fmt(duality));

        const SolveResult r2 = solve(disc, c);
        v.require(trace_csv(r.trace) == trace_csv(r2.trace) && write_field(r.u) == write_field(r2.u) &&
                      write_field(r.p) == write_field(r2.p),
                  "single-threaded reruns are byte-identical");
        report("9 property suites", v);
    }

    // 10: contraction towards the converged iterate for alpha >= alpha_min.
    {
        Verdict v;
        const auto amin = sweep_minimizer(z1.rows);
        const ProblemSpec pb = gaussian_vortex(1.0);
        const Mesh mesh = generate_structured(60);
        const Discretization disc(mesh, pb);
        for (double alpha : {amin.value_or(2.3), 5.0, 10.0}) {
            SolverConfig c = sweep_solver(InitialGuess::zero);
            c.alpha = alpha;
            c.tol_errL = 1e-10;
            c.record_indicators = false;
            std::vector<P0VectorField> its;
            const SolveResult r = solve(disc, c, [&](const IterationState& s) { its.push_back(s.u_curr); });
            bool mono = r.converged;
            double prev = 1e300;
            int violations = 0;
            for (const auto& u : its) {
                P0VectorField du(u.size());
                for (Index t = 0; t < u.size(); ++t) du[t] = u[t] - r.u[t];
                const double dist = lp_norm(mesh, du, 2.0);
                if (dist > prev * (1 + 1e-12) + 1e-14) ++violations;
                prev = dist;
            }
            mono = mono && violations == 0;
            v.require(mono, "alpha=" + fmt(alpha) + ": " + std::to_string(its.size()) + " iterates, " +
                                std::to_string(violations) + " increases of ||u^i - u^inf||_L2");
        }
        report("10 contraction trace", v);
    }

    int failed = 0;
    for (const auto& [name, v] : results) failed += !v.pass;
    std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
