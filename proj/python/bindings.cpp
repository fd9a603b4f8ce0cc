#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "dfadapt/cli.hpp"
#include "dfadapt/error.hpp"

namespace py = pybind11;
using namespace dfadapt;

namespace {

Eigen::MatrixX2d as_matrix(const P0VectorField& u) {
    Eigen::MatrixX2d m(u.size(), 2);
    for (Index t = 0; t < u.size(); ++t) m.row(t) = u[t].transpose();
    return m;
}

Eigen::MatrixX2d vertex_matrix(const Mesh& mesh) {
    Eigen::MatrixX2d m(mesh.num_vertices(), 2);
    for (Index v = 0; v < mesh.num_vertices(); ++v) m.row(v) = mesh.vertex(v).x.transpose();
    return m;
}

Eigen::Matrix<Index, Eigen::Dynamic, 3, Eigen::RowMajor> triangle_matrix(const Mesh& mesh) {
    Eigen::Matrix<Index, Eigen::Dynamic, 3, Eigen::RowMajor> m(mesh.num_triangles(), 3);
    for (Index t = 0; t < mesh.num_triangles(); ++t)
        for (int k = 0; k < 3; ++k) m(t, k) = mesh.triangle(t).vertices[k];
    return m;
}

SolverConfig make_config(double alpha, double tol, const std::string& stopping, const std::string& guess,
                         double gamma_tilde, int max_iter) {
    RunConfig rc;
    rc.command = "solve";
    nlohmann::json j = {{"alpha", alpha}, {"tol", tol}, {"stopping", stopping}, {"guess", guess},
                        {"gamma_tilde", gamma_tilde}, {"max_iter", max_iter}};
    return solver_config(config_from_json(j, rc));
}

py::dict level_dict(const LevelRecord& r) {
    py::dict d;
    d["level"] = r.level;
    d["vertices"] = r.vertices;
    d["triangles"] = r.triangles;
    d["eta_L"] = r.eta_L;
    d["eta_D"] = r.eta_D;
    d["err"] = r.err;
    d["EI"] = r.EI;
    d["E_tot"] = r.E_tot;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    return d;
}

}  // namespace

PYBIND11_MODULE(_dfadapt, m) {
    m.doc() = "Adaptive P0/P1 solver for the Darcy-Forchheimer problem";
    m.attr("__version__") = kVersion;

    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);

    py::class_<Mesh>(m, "Mesh")
        .def_property_readonly("num_vertices", &Mesh::num_vertices)
        .def_property_readonly("num_triangles", &Mesh::num_triangles)
        .def_property_readonly("num_edges", &Mesh::num_edges)
        .def_property_readonly("num_boundary_edges", &Mesh::num_boundary_edges)
        .def_property_readonly("h", &Mesh::h)
        .def_property_readonly("total_area", &Mesh::total_area)
        .def_property_readonly("vertices", &vertex_matrix)
        .def_property_readonly("triangles", &triangle_matrix)
        .def("shape_ratio", py::overload_cast<>(&Mesh::shape_ratio, py::const_))
        .def("to_text", &write_mesh);

    m.def("structured_mesh", [](int n) { return generate_structured(n); }, py::arg("n"));
    m.def("lshape_mesh", &generate_lshape, py::arg("n"));
    m.def("load_mesh", [](const std::string& text) { return load_mesh(text); }, py::arg("text"));
    m.def("refine", [](const Mesh& mesh, std::vector<Index> marked) { return refine(mesh, marked); },
          py::arg("mesh"), py::arg("marked"));
    m.def("refine_uniform", &refine_uniform, py::arg("mesh"));

    py::class_<ProblemSpec>(m, "Problem")
        .def_readonly("name", &ProblemSpec::name)
        .def_readonly("beta", &ProblemSpec::beta)
        .def_property_readonly("has_exact", &ProblemSpec::has_exact)
        .def("initial_mesh", [](const ProblemSpec& p, int n) { return initial_mesh(p.domain, n); }, py::arg("n"));

    m.def("problem", [](const std::string& name, double beta, bool strict) { return builtin_problem(name, beta, strict); },
          py::arg("name"), py::arg("beta") = 1.0, py::arg("strict_boundary") = false);
    m.def("problem_from_json", [](const std::string& text) { return problem_from_json(nlohmann::json::parse(text)); },
          py::arg("text"));
    m.def("problem_names", &builtin_problem_names);

    m.def(
        "solve",
        [](const Mesh& mesh, const ProblemSpec& problem, double alpha, double tol, const std::string& stopping,
           const std::string& guess, double gamma_tilde, int max_iter) {
            const SolverConfig cfg = make_config(alpha, tol, stopping, guess, gamma_tilde, max_iter);
            SolveResult r;
            {
                py::gil_scoped_release release;
                const Discretization disc(mesh, problem);
                r = solve(disc, cfg);
            }
            py::dict d;
            d["u"] = as_matrix(r.u);
            d["p"] = Eigen::VectorXd(r.p.values);
            d["iterations"] = r.iterations;
            d["converged"] = r.converged;
            py::list trace;
            for (const auto& t : r.trace) {
                py::dict row;
                row["iter"] = t.iter;
                row["err_L"] = t.err_L;
                row["eta_L"] = t.eta_L;
                row["eta_D"] = t.eta_D;
                trace.append(row);
            }
            d["trace"] = trace;
            d["eta_L"] = r.indicators.global.eta_L;
            d["eta_D"] = r.indicators.global.eta_D;
            if (problem.has_exact()) {
                const ExactErrors e = exact_errors(mesh, problem, r.u, r.p);
                d["err"] = e.relative();
                d["EI"] = effectivity_index(r.indicators.global, e.u_L3, e.grad_p_L32);
            }
            return d;
        },
        py::arg("mesh"), py::arg("problem"), py::arg("alpha") = 1.0, py::arg("tol") = 1e-5,
        py::arg("stopping") = "fixed-tol", py::arg("guess") = "zero", py::arg("gamma_tilde") = 1e-3,
        py::arg("max_iter") = 5000);

    m.def(
        "alpha_sweep",
        [](const Mesh& mesh, const ProblemSpec& problem, const std::vector<double>& alphas, double tol,
           const std::string& guess, int threads) {
            const Discretization disc(mesh, problem);
            const auto rows = alpha_sweep(disc, alphas, make_config(1.0, tol, "fixed-tol", guess, 1e-3, 5000), threads);
            py::list out;
            for (const auto& r : rows) {
                py::dict d;
                d["alpha"] = r.alpha;
                d["nbr"] = r.nbr;
                d["converged"] = r.converged;
                d["err"] = r.err;
                out.append(d);
            }
            return out;
        },
        py::arg("mesh"), py::arg("problem"), py::arg("alphas"), py::arg("tol") = 1e-5, py::arg("guess") = "zero",
        py::arg("threads") = 1);

    m.def(
        "adapt",
        [](const ProblemSpec& problem, int n, double alpha, double theta, int levels, Index max_vertices) {
            AdaptConfig ac;
            ac.theta = theta;
            ac.max_levels = levels;
            ac.max_vertices = max_vertices;
            const auto r = adaptive_loop(initial_mesh(problem.domain, n), problem,
                                         make_config(alpha, 1e-5, "indicator-balance", "darcy", 1e-3, 5000), ac);
            py::list out;
            for (const auto& l : r.levels) out.append(level_dict(l));
            return py::make_tuple(out, r.mesh);
        },
        py::arg("problem"), py::arg("n") = 10, py::arg("alpha") = 1.0, py::arg("theta") = 0.5, py::arg("levels") = 7,
        py::arg("max_vertices") = 0);

    m.def(
        "mark_doerfler", [](std::vector<double> eta2, double theta) { return mark_doerfler(eta2, theta); },
        py::arg("eta_squared"), py::arg("theta"));

    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            std::vector<const char*> argv{"dfadapt"};
            for (const auto& a : args) argv.push_back(a.c_str());
            return cli_main(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"));
}
