#include "dfadapt/nonlinear.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "dfadapt/error.hpp"
#include "dfadapt/report.hpp"

namespace dfadapt {

void SolverConfig::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ContractViolation("alpha must be a finite value >= 0");
    if (!(tol_errL > 0.0)) throw ContractViolation("tol_errL must be positive");
    if (!(gamma_tilde > 0.0)) throw ContractViolation("gamma_tilde must be positive");
    if (max_iter < 1) throw ContractViolation("max_iter must be >= 1");
    if (!(linear.rel_tol > 0.0)) throw ContractViolation("linear tolerance must be positive");
}

double iterative_error(const Mesh& mesh, const P0VectorField& u_new, const P0VectorField& u_old,
                       const P1ScalarField& p_new, const P1ScalarField& p_old) {
    P0VectorField du(mesh.num_triangles());
    for (Index t = 0; t < du.size(); ++t) du[t] = u_new[t] - u_old[t];
    P1ScalarField dp;
    dp.values = p_new.values - p_old.values;
    const double den = lp_norm(mesh, u_new, 3.0) + lp_norm_gradient(mesh, p_new, 1.5);
    if (den < 1e-300) return 0.0;
    return (lp_norm(mesh, du, 3.0) + lp_norm_gradient(mesh, dp, 1.5)) / den;
}

IterationState initial_state(const Discretization& disc, const SolverConfig& config) {
    const Mesh& mesh = disc.mesh();
    IterationState s;
    if (config.initial_guess == InitialGuess::darcy) {
        StepSolution d = darcy_solve(disc, config.linear);
        s.u_curr = std::move(d.u);
        s.p_curr = std::move(d.p);
        s.cg_iterations = d.info.iterations;
    } else {
        s.u_curr = P0VectorField(mesh.num_triangles());
        s.p_curr = P1ScalarField(mesh.num_vertices());
    }
    s.u_prev = s.u_curr;
    s.p_prev = s.p_curr;
    return s;
}

IterationState picard_step(const IterationState& state, const Discretization& disc, const SolverConfig& config,
                           const IndicatorContext* ctx) {
    StepSolution step = solve_step(disc, state.u_curr, config.alpha, config.linear, &state.p_curr);
    IterationState next;
    next.u_prev = state.u_curr;
    next.p_prev = state.p_curr;
    next.u_curr = std::move(step.u);
    next.p_curr = std::move(step.p);
    next.iter = state.iter + 1;
    next.cg_iterations = step.info.iterations;
    next.err_L = iterative_error(disc.mesh(), next.u_curr, next.u_prev, next.p_curr, next.p_prev);
    if (ctx) {
        const IndicatorSet ind = compute_indicators(*ctx, next.u_curr, next.u_prev, next.p_curr, config.alpha);
        next.eta_L = ind.global.eta_L;
        next.eta_D = ind.global.eta_D;
    }
    return next;
}

SolveResult solve(const Discretization& disc, const SolverConfig& config, const IterationObserver& observer) {
    config.validate();
    const bool balance = config.stopping == StoppingRule::indicator_balance;
    std::optional<IndicatorContext> ctx;
    if (balance || config.record_indicators) ctx.emplace(disc.mesh(), disc.problem());

    IterationState state = initial_state(disc, config);
    if (observer) observer(state);
    SolveResult result;
    while (state.iter < config.max_iter) {
        state = picard_step(state, disc, config, ctx ? &*ctx : nullptr);
        result.trace.push_back({state.iter, state.err_L, state.eta_L, state.eta_D, state.cg_iterations});
        if (observer) observer(state);
        const bool stop = balance ? state.eta_L <= config.gamma_tilde * state.eta_D : state.err_L < config.tol_errL;
        if (stop) {
            result.converged = true;
            break;
        }
    }
    result.iterations = state.iter;
    if (ctx) result.indicators = compute_indicators(*ctx, state.u_curr, state.u_prev, state.p_curr, config.alpha);
    result.u = std::move(state.u_curr);
    result.p = std::move(state.p_curr);
    return result;
}

std::string trace_csv(const std::vector<IterationRecord>& trace) {
    CsvTable table({"iter", "err_L", "eta_L", "eta_D", "nbr_cg_iters"});
    for (const auto& r : trace)
        table.row({std::to_string(r.iter), format_number(r.err_L), format_number(r.eta_L), format_number(r.eta_D),
                   std::to_string(r.nbr_cg_iters)});
    return table.str();
}

double ExactErrors::relative() const {
    const double den = norm_u_L3 + norm_grad_p_L32;
    const double num = u_L3 + grad_p_L32;
    return den > 0.0 ? num / den : num;
}

ExactErrors exact_errors(const Mesh& mesh, const ProblemSpec& problem, const P0VectorField& u, const P1ScalarField& p,
                         const QuadratureRule& rule) {
    if (!problem.has_exact()) throw ContractViolation("exact_errors: problem has no exact solution");
    ExactErrors e;
    e.u_L3 = lp_error(mesh, u, problem.exact_u, 3.0, rule);
    e.u_L2 = lp_error(mesh, u, problem.exact_u, 2.0, rule);
    e.grad_p_L32 = lp_error_gradient(mesh, p, problem.exact_grad_p, 1.5, rule);
    e.norm_u_L3 = lp_norm(mesh, problem.exact_u, 3.0, rule);
    e.norm_grad_p_L32 = lp_norm(mesh, problem.exact_grad_p, 1.5, rule);
    return e;
}

std::vector<SweepRow> alpha_sweep(const Discretization& disc, const std::vector<double>& alphas,
                                  const SolverConfig& config, int threads) {
    if (alphas.empty()) throw ContractViolation("alpha_sweep: empty alpha list");
    std::vector<SweepRow> rows(alphas.size());
    auto cell = [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.alpha = alphas[i];
        SolverConfig c = config;
        c.alpha = alphas[i];
        c.record_indicators = false;
        try {
            const SolveResult r = solve(disc, c);
            row.nbr = r.iterations;
            row.converged = r.converged;
            if (disc.problem().has_exact())
                row.err = exact_errors(disc.mesh(), disc.problem(), r.u, r.p).relative();
        } catch (const SolverError& e) {
            row.failure = e.what();
        }
    };
    const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(alphas.size())));
    if (nthreads == 1) {
        for (std::size_t i = 0; i < alphas.size(); ++i) cell(i);
        return rows;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int k = 0; k < nthreads; ++k)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < alphas.size(); i = next++) cell(i);
        });
    for (auto& th : pool) th.join();
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    CsvTable table({"alpha", "nbr", "converged", "err", "log10_err"});
    for (const auto& r : rows)
        table.row({format_number(r.alpha), std::to_string(r.nbr), r.converged ? "1" : "0", format_number(r.err),
                   format_number(std::log10(r.err))});
    return table.str();
}

std::optional<double> sweep_minimizer(const std::vector<SweepRow>& rows) {
    std::optional<double> best;
    int best_nbr = 0;
    for (const auto& r : rows) {
        if (!r.converged) continue;
        if (!best || r.nbr < best_nbr) {
            best = r.alpha;
            best_nbr = r.nbr;
        }
    }
    return best;
}

P0VectorField compute_lifting(const Discretization& disc, const LinearSolverOptions& options) {
    PressureSystem sys;
    sys.S = disc.stiffness();
    sys.G = disc.constraint_rhs();
    const P1ScalarField lambda = solve_pressure(sys, disc.mesh(), options);
    P0VectorField u(disc.mesh().num_triangles());
    for (Index t = 0; t < u.size(); ++t) u[t] = p1_gradient(disc.mesh(), lambda, t);
    return u;
}

double phi_tilde(const AlphaDiagnostics& d, double a) { return -d.gt0 - d.gt1 * a - d.gt2 * a * a + a * a * a / 8.0; }

AlphaDiagnostics alpha_diagnostics(const Discretization& disc, double c_i) {
    if (!(c_i > 0.0)) throw ContractViolation("alpha_diagnostics: C_I must be positive");
    const Mesh& mesh = disc.mesh();
    const ProblemSpec& pb = disc.problem();
    AlphaDiagnostics d;
    d.c_i = c_i;
    d.h = mesh.h();
    d.k_min = disc.report().k_min;
    d.k_max = disc.report().k_max;
    d.norm_f_L2 = lp_norm(mesh, pb.f, 2.0, triangle_rule(kDefaultQuadratureDegree));
    const P0VectorField lift = compute_lifting(disc);
    d.lifting_L2 = lp_norm(mesh, lift, 2.0);
    d.lifting_L3 = lp_norm(mesh, lift, 3.0);

    const double mu = pb.mu, rho = pb.rho, beta = pb.beta, km = d.k_min, kM = d.k_max, h = d.h;
    const double c = 2.0 * rho / (mu * km);
    const double f2 = d.norm_f_L2 * d.norm_f_L2, l2 = d.lifting_L2 * d.lifting_L2;
    d.ell0 = c * c *
             ((3.0 * rho / (2.0 * mu * km) + 0.5) * f2 + (0.5 + 3.0 * mu * kM * kM / (2.0 * rho * km)) * l2 +
              4.0 * beta / (3.0 * rho) * std::pow(d.lifting_L3, 3.0));
    d.ell1 = c * c * l2;

    const double ci3 = std::pow(c_i, 3.0);
    d.gamma1 = 8.0 * beta * kM / (3.0 * rho * km) * ci3 / h * std::sqrt(d.ell1);
    d.gamma2 = 3.0 * beta * beta / (2.0 * rho * mu * km) * std::pow(c_i, 4.0) * std::pow(h, -4.0 / 3.0) *
                   d.lifting_L3 * d.lifting_L3 +
               8.0 * beta / (3.0 * mu * km) * ci3 / h * d.norm_f_L2 +
               8.0 * beta * kM / (3.0 * rho * km) * ci3 / h * std::sqrt(d.ell0) +
               8.0 * beta * beta / (3.0 * rho * rho) * std::pow(c_i, 6.0) / (h * h) *
                   std::max(2.0 * rho * d.ell0 / (mu * km), d.ell1);
    const double s = 2.0 * (d.gamma1 + std::sqrt(d.gamma1 * d.gamma1 + d.gamma2));
    d.alpha_star = s * s;

    const double ct = 9.0 * std::pow(beta, 4.0) * std::pow(c_i, 12.0) / (32.0 * mu * km * std::pow(rho, 3.0));
    const double h4 = std::pow(h, -4.0);
    d.gt0 = d.ell0 * d.ell0 * ct * h4;
    d.gt1 = 2.0 * d.ell0 * d.ell1 * ct * h4;
    d.gt2 = d.ell1 * d.ell1 * ct * h4;

    // Single sign change: phi < 0 on (0, root), > 0 beyond. Cauchy bound brackets it.
    if (d.gt0 == 0.0 && d.gt1 == 0.0 && d.gt2 == 0.0) {
        d.alpha_star_star = 0.0;
    } else {
        double lo = 0.0, hi = 1.0 + 8.0 * std::max({d.gt0, d.gt1, d.gt2});
        for (int k = 0; k < 2000 && hi - lo > 1e-15 * hi; ++k) {
            const double mid = 0.5 * (lo + hi);
            (phi_tilde(d, mid) > 0.0 ? hi : lo) = mid;
        }
        d.alpha_star_star = 0.5 * (lo + hi);
    }
    return d;
}

}  // namespace dfadapt
