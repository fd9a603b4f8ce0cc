#include "dfadapt/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "dfadapt/error.hpp"

namespace dfadapt {

Discretization::Discretization(const Mesh& mesh, const ProblemSpec& problem, const QuadratureRule& rule,
                               double compatibility_tol)
    : mesh_(&mesh), problem_(problem) {
    if (!problem.k_inverse || !problem.f || !problem.b || !problem.g)
        throw ContractViolation("Discretization: problem data incomplete");
    report_ = validate(problem, mesh, compatibility_tol, rule);

    const Index m = mesh.num_triangles();
    const Index n = mesh.num_vertices();
    coupling_.resize(m);
    int_kinv_.resize(m);
    int_f_.resize(m);
    rhs_ = Eigen::VectorXd::Zero(n);

    for (Index t = 0; t < m; ++t) {
        const Triangle& tri = mesh.triangle(t);
        const auto grads = hat_gradients(mesh, t);
        for (int a = 0; a < 3; ++a) coupling_[t][a] = tri.area * grads[a];

        const auto pts = map_points(mesh, t, rule);
        Mat2 kk = Mat2::Zero();
        Vec2 ff = Vec2::Zero();
        std::array<double, 3> bphi{0.0, 0.0, 0.0};
        for (std::size_t q = 0; q < pts.size(); ++q) {
            const double w = rule.weights[q] * tri.area;
            kk += w * problem.k_inverse(pts[q]);
            const Vec2 fv = problem.f(pts[q]);
            if (!fv.allFinite()) {
                std::ostringstream s;
                s << "f is not finite at (" << pts[q].x() << ", " << pts[q].y() << ")";
                throw DataError(s.str());
            }
            ff += w * fv;
            const double bv = problem.b(pts[q]);
            for (int a = 0; a < 3; ++a) bphi[a] += w * bv * rule.barycentric[q][a];
        }
        int_kinv_[t] = 0.5 * (kk + kk.transpose());
        int_f_[t] = ff;
        for (int a = 0; a < 3; ++a) rhs_[tri.vertices[a]] -= bphi[a];
    }

    const LineRule line = gauss_legendre(kEdgeQuadraturePoints);
    for (Index e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edge(e);
        if (!ed.on_boundary()) continue;
        const Vec2 a = mesh.vertex(ed.vertices[0]).x, c = mesh.vertex(ed.vertices[1]).x;
        double ga = 0.0, gc = 0.0;
        for (std::size_t q = 0; q < line.points.size(); ++q) {
            const double s = line.points[q];
            const double gv = line.weights[q] * ed.length * problem.g(a + s * (c - a), ed.normal);
            ga += gv * (1.0 - s);
            gc += gv * s;
        }
        rhs_[ed.vertices[0]] += ga;
        rhs_[ed.vertices[1]] += gc;
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * static_cast<std::size_t>(m));
    for (Index t = 0; t < m; ++t)
        for (Index a : mesh.triangle(t).vertices)
            for (Index b : mesh.triangle(t).vertices) trip.emplace_back(a, b, 0.0);
    pattern_.resize(n, n);
    pattern_.setFromTriplets(trip.begin(), trip.end());
    pattern_.makeCompressed();
    slots_.resize(9 * static_cast<std::size_t>(m));
    for (Index t = 0; t < m; ++t) {
        const auto& v = mesh.triangle(t).vertices;
        for (int a = 0; a < 3; ++a) {
            const Index* begin = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[v[a]];
            const Index* end = pattern_.innerIndexPtr() + pattern_.outerIndexPtr()[v[a] + 1];
            for (int b = 0; b < 3; ++b) {
                const Index* hit = std::lower_bound(begin, end, v[b]);
                slots_[9 * t + 3 * a + b] = static_cast<Index>(hit - pattern_.innerIndexPtr());
            }
        }
    }
}

ElementBlocks Discretization::blocks(const P0VectorField& u_prev, double alpha, double beta) const {
    const Index m = mesh_->num_triangles();
    if (u_prev.size() != m) throw ContractViolation("blocks: u_prev size does not match mesh");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw ContractViolation("blocks: alpha and beta must be non-negative");
    ElementBlocks out;
    out.A.resize(m);
    out.F.resize(m);
    const double mu_rho = problem_.mu / problem_.rho, beta_rho = beta / problem_.rho;
    for (Index t = 0; t < m; ++t) {
        const double area = mesh_->triangle(t).area;
        const double diag = (alpha + beta_rho * u_prev[t].norm()) * area;
        out.A[t] = mu_rho * int_kinv_[t] + diag * Mat2::Identity();
        out.F[t] = int_f_[t] + alpha * area * u_prev[t];
    }
    return out;
}

PressureSystem Discretization::pressure_system(const ElementBlocks& blk) const {
    PressureSystem sys;
    sys.S = pattern_;
    double* val = sys.S.valuePtr();
    std::fill(val, val + sys.S.nonZeros(), 0.0);
    sys.G = -rhs_;
    for (Index t = 0; t < mesh_->num_triangles(); ++t) {
        const Mat2 inv = blk.A[t].inverse();
        const Vec2 af = inv * blk.F[t];
        const auto& B = coupling_[t];
        const auto& v = mesh_->triangle(t).vertices;
        for (int a = 0; a < 3; ++a) {
            const Vec2 ib = inv * B[a];
            for (int b = 0; b < 3; ++b) val[slots_[9 * t + 3 * a + b]] += B[b].dot(ib);
            sys.G[v[a]] += B[a].dot(af);
        }
    }
    return sys;
}

Eigen::VectorXd Discretization::apply_divergence(const P0VectorField& u) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(mesh_->num_vertices());
    for (Index t = 0; t < mesh_->num_triangles(); ++t)
        for (int a = 0; a < 3; ++a) out[mesh_->triangle(t).vertices[a]] += coupling_[t][a].dot(u[t]);
    return out;
}

P0VectorField Discretization::apply_gradient(const P1ScalarField& p) const {
    P0VectorField out(mesh_->num_triangles());
    for (Index t = 0; t < mesh_->num_triangles(); ++t) {
        Vec2 s = Vec2::Zero();
        for (int a = 0; a < 3; ++a) s += p.values[mesh_->triangle(t).vertices[a]] * coupling_[t][a];
        out[t] = s;
    }
    return out;
}

SparseMatrix Discretization::stiffness() const {
    SparseMatrix s = pattern_;
    double* val = s.valuePtr();
    std::fill(val, val + s.nonZeros(), 0.0);
    for (Index t = 0; t < mesh_->num_triangles(); ++t) {
        const double area = mesh_->triangle(t).area;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) val[slots_[9 * t + 3 * a + b]] += coupling_[t][a].dot(coupling_[t][b]) / area;
    }
    return s;
}

namespace {

void remove_mean(Eigen::VectorXd& v) {
    if (v.size() > 0) v.array() -= v.mean();
}

}  // namespace

P1ScalarField solve_pressure(const PressureSystem& sys, const Mesh& mesh, const LinearSolverOptions& opt,
                             const P1ScalarField* warm_start, PressureSolveInfo* info) {
    const Index n = static_cast<Index>(sys.G.size());
    if (sys.S.rows() != n || sys.S.cols() != n || mesh.num_vertices() != n)
        throw ContractViolation("solve_pressure: system size does not match mesh");
    Eigen::VectorXd g = sys.G;
    remove_mean(g);
    const double gnorm = g.norm();
    P1ScalarField p(n);
    PressureSolveInfo local;
    if (gnorm == 0.0) {
        if (info) *info = local;
        return p;
    }

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    if (warm_start && warm_start->size() == n) {
        x = warm_start->values;
        remove_mean(x);
    }
    Eigen::VectorXd diag;
    if (opt.jacobi) {
        diag = sys.S.diagonal();
        for (Index i = 0; i < n; ++i) diag[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;
    }
    auto precondition = [&](const Eigen::VectorXd& r) {
        if (!opt.jacobi) return Eigen::VectorXd(r);
        Eigen::VectorXd z = diag.cwiseProduct(r);
        remove_mean(z);
        return z;
    };

    const int max_iter = opt.max_iter > 0 ? opt.max_iter : 10 * n;
    const double target = opt.rel_tol * gnorm;
    std::vector<double> history;
    Eigen::VectorXd r = g - sys.S * x;
    remove_mean(r);
    double rnorm = r.norm();
    history.push_back(rnorm / gnorm);
    Eigen::VectorXd z = precondition(r);
    Eigen::VectorXd d = z;
    double rz = r.dot(z);
    Eigen::VectorXd sd(n);
    int it = 0;
    while (rnorm > target && it < max_iter) {
        sd.noalias() = sys.S * d;
        const double dsd = d.dot(sd);
        if (!(dsd > 0.0)) break;
        const double step = rz / dsd;
        x += step * d;
        r -= step * sd;
        ++it;
        // periodic true residual keeps rounding drift out of the stopping test
        if (it % 50 == 0) {
            r = g - sys.S * x;
            remove_mean(r);
        }
        rnorm = r.norm();
        history.push_back(rnorm / gnorm);
        if (rnorm <= target) break;
        z = precondition(r);
        const double rz_new = r.dot(z);
        d = z + (rz_new / rz) * d;
        rz = rz_new;
    }
    if (rnorm > target) {
        // confirm against the true residual before giving up
        Eigen::VectorXd rt = g - sys.S * x;
        remove_mean(rt);
        rnorm = rt.norm();
        if (rnorm > target) {
            std::ostringstream s;
            s << "pressure CG did not converge: relative residual " << rnorm / gnorm << " after " << it
              << " iterations (tolerance " << opt.rel_tol << ")";
            throw SolverError(s.str(), std::move(history));
        }
    }
    p.values = x;
    p = project_mean_zero(mesh, p);
    local.iterations = it;
    local.relative_residual = rnorm / gnorm;
    if (info) *info = local;
    return p;
}

P0VectorField recover_velocity(const Discretization& disc, const ElementBlocks& blk, const P1ScalarField& p) {
    P0VectorField u = disc.apply_gradient(p);
    for (Index t = 0; t < u.size(); ++t) u[t] = blk.A[t].inverse() * (blk.F[t] - u[t]);
    return u;
}

StepSolution solve_step(const Discretization& disc, const P0VectorField& u_prev, double alpha,
                        const LinearSolverOptions& options, const P1ScalarField* warm_start) {
    StepSolution out;
    const ElementBlocks blk = disc.blocks(u_prev, alpha);
    const PressureSystem sys = disc.pressure_system(blk);
    out.p = solve_pressure(sys, disc.mesh(), options, warm_start, &out.info);
    out.u = recover_velocity(disc, blk, out.p);
    return out;
}

StepSolution darcy_solve(const Discretization& disc, const LinearSolverOptions& options) {
    StepSolution out;
    const ElementBlocks blk = disc.blocks(P0VectorField(disc.mesh().num_triangles()), 0.0, 0.0);
    const PressureSystem sys = disc.pressure_system(blk);
    out.p = solve_pressure(sys, disc.mesh(), options, nullptr, &out.info);
    out.u = recover_velocity(disc, blk, out.p);
    return out;
}

StepSolution darcy_solve(const Mesh& mesh, const ProblemSpec& problem, const LinearSolverOptions& options) {
    const Discretization disc(mesh, problem);
    return darcy_solve(disc, options);
}

double forchheimer_pairing(const Mesh& mesh, const P0VectorField& v, const P0VectorField& w, double beta,
                           double rho) {
    std::vector<double> parts(mesh.num_triangles());
    for (Index t = 0; t < mesh.num_triangles(); ++t) {
        const Vec2 dv = v[t].norm() * v[t] - w[t].norm() * w[t];
        parts[t] = mesh.triangle(t).area * dv.dot(v[t] - w[t]);
    }
    return beta / rho * pairwise_sum(parts);
}

}  // namespace dfadapt
