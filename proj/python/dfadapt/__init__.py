"""Adaptive P0/P1 finite elements for the steady Darcy-Forchheimer problem."""

from ._dfadapt import (
    ContractViolation,
    DataError,
    Mesh,
    ParseError,
    Problem,
    SolverError,
    __version__,
    adapt,
    alpha_sweep,
    load_mesh,
    lshape_mesh,
    mark_doerfler,
    problem,
    problem_from_json,
    problem_names,
    refine,
    refine_uniform,
    run_cli,
    solve,
    structured_mesh,
)

__all__ = [
    "ContractViolation",
    "DataError",
    "Mesh",
    "ParseError",
    "Problem",
    "SolverError",
    "__version__",
    "adapt",
    "alpha_sweep",
    "load_mesh",
    "lshape_mesh",
    "mark_doerfler",
    "problem",
    "problem_from_json",
    "problem_names",
    "refine",
    "refine_uniform",
    "run_cli",
    "solve",
    "structured_mesh",
]
