"""Certified interval bounds on the global minimum of bounded polynomial programs.

A polynomial program is rewritten over binary expansions of its variables
into two mixed binary linear programs: an optimistic one whose optimum is a
lower bound on the true minimum and a pessimistic one whose solutions map
to feasible points.  Both are solved by the built-in branch-and-bound code.
"""

__version__ = "0.1.0"

from .driver import (
    BoundOptions,
    IntervalResult,
    TauResult,
    bound_global_minimum,
    refine_focused,
    tau_variant,
)
from .model import MilpModel, build_linearized_program, build_lower_program, build_upper_program
from .parser import ParseError, parse_program, print_program, read_program
from .poly import (
    Constraint,
    Polynomial,
    PolynomialProgram,
    ProgramError,
    VariableSpec,
    check_feasibility,
    evaluate,
    normalize_program,
)
from .reformulate import ReformParams, kappa_from_sigma, reformulate, sigma_from_kappa

__all__ = [
    "BoundOptions",
    "Constraint",
    "IntervalResult",
    "MilpModel",
    "ParseError",
    "Polynomial",
    "PolynomialProgram",
    "ProgramError",
    "ReformParams",
    "TauResult",
    "VariableSpec",
    "bound_global_minimum",
    "build_linearized_program",
    "build_lower_program",
    "build_upper_program",
    "check_feasibility",
    "evaluate",
    "kappa_from_sigma",
    "normalize_program",
    "parse_program",
    "print_program",
    "read_program",
    "refine_focused",
    "reformulate",
    "sigma_from_kappa",
    "tau_variant",
]


def problem_path(name: str):
    """Path of a bundled problem file such as ``"pp1"``."""
    from importlib.resources import files

    return files(__name__) / "problems" / f"{name}.pp"
