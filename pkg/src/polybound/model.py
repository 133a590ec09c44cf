"""Mixed binary linear programs over the lifted variables.

``build_lower_program`` and ``build_upper_program`` assemble the optimistic
and pessimistic programs whose optima bracket the global minimum of a
polynomial program.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np

from .poly import FEAS_TOL, PolynomialProgram, normalize_program
from .reformulate import (
    LinearExpr,
    LinearRow,
    ReformParams,
    Reformulation,
    linear_bounds,
    map_to_original,
    reformulate,
)

#: Integrality tolerance on binary variables.
INT_TOL = 1e-6


@dataclass(eq=False)
class MilpModel:
    """Minimize ``objective`` over binaries and bounded continuous variables.

    Row right-hand sides live in the rows; the objective keeps its constant.
    """

    binaries: list[str]
    continuous: list[tuple[str, float, float]]
    rows: list[LinearRow]
    objective: LinearExpr
    name: str = "model"
    kind: str = ""
    reformulation: Reformulation | None = field(default=None, repr=False)

    @property
    def variables(self) -> list[str]:
        return self.binaries + [c[0] for c in self.continuous]

    @property
    def n_binaries(self) -> int:
        return len(self.binaries)

    @cached_property
    def column(self) -> dict[str, int]:
        return {v: j for j, v in enumerate(self.variables)}

    @cached_property
    def arrays(self) -> "ModelArrays":
        """Dense array form, built once per model."""
        col = self.column
        n, m = len(col), len(self.rows)
        A = np.zeros((m, n))
        b = np.empty(m)
        sense = np.empty(m, dtype="<U2")
        for i, row in enumerate(self.rows):
            for k, v in row.coefs.items():
                A[i, col[k]] += v
            b[i] = row.rhs
            sense[i] = row.rel
        c = np.zeros(n)
        for k, v in self.objective.terms.items():
            c[col[k]] += v
        lb = np.array([0.0] * len(self.binaries) + [c_[1] for c_ in self.continuous])
        ub = np.array([1.0] * len(self.binaries) + [c_[2] for c_ in self.continuous])
        return ModelArrays(A, b, sense, c, self.objective.constant, lb, ub, len(self.binaries))

    def evaluate_objective(self, w: Mapping[str, float]) -> float:
        return self.objective.value(w)

    def violations(self, w: Mapping[str, float], tol: float = 1e-6) -> list[tuple[str, float]]:
        """Rows, bounds and integrality requirements violated by ``w``."""
        out = []
        for name in self.binaries:
            v = w[name]
            if abs(v - round(v)) > INT_TOL or not -tol <= v <= 1 + tol:
                out.append((f"integrality {name}", v))
        for name, lo, hi in self.continuous:
            v = w[name]
            if v < lo - tol or v > hi + tol:
                out.append((f"bound {name}", v))
        for i, row in enumerate(self.rows):
            lhs = sum(c * w[k] for k, c in row.coefs.items())
            if row.rel == "<=":
                ex = lhs - row.rhs
            elif row.rel == ">=":
                ex = row.rhs - lhs
            else:
                ex = abs(lhs - row.rhs)
            if ex > tol:
                out.append((row.label or f"row{i + 1}", ex))
        return out

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "binaries": list(self.binaries),
            "continuous": [[n, lo, hi] for n, lo, hi in self.continuous],
            "objective": {"constant": self.objective.constant, "terms": dict(self.objective.terms)},
            "rows": [
                {"label": r.label, "coefs": dict(r.coefs), "rel": r.rel, "rhs": r.rhs} for r in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MilpModel":
        return cls(
            binaries=list(d["binaries"]),
            continuous=[(n, float(lo), float(hi)) for n, lo, hi in d["continuous"]],
            rows=[LinearRow(dict(r["coefs"]), float(r["rhs"]), r["rel"], r.get("label", "")) for r in d["rows"]],
            objective=LinearExpr(d["objective"]["constant"], d["objective"]["terms"]),
            name=d.get("name", "model"),
            kind=d.get("kind", ""),
        )

    def map_to_original(self, w: Mapping[str, float]) -> dict[int, float]:
        if self.reformulation is None:
            raise ValueError("model carries no reformulation metadata")
        return self.reformulation.map_to_original(w)


@dataclass(frozen=True)
class ModelArrays:
    A: np.ndarray
    b: np.ndarray
    sense: np.ndarray
    c: np.ndarray
    c0: float
    lb: np.ndarray
    ub: np.ndarray
    n_binaries: int


def _assemble(R: Reformulation, objective: LinearExpr, problem_rows: list[LinearRow], name: str, kind: str) -> MilpModel:
    cont = [(r, 0.0, 1.0) for r in R.remainders] + [(p.name, 0.0, 1.0) for p in R.registry]
    return MilpModel(
        binaries=R.units,
        continuous=cont,
        rows=R.phi_rows() + problem_rows,
        objective=objective,
        name=name,
        kind=kind,
        reformulation=R,
    )


def _rows(exprs: list[LinearExpr], slack: float = 0.0) -> list[LinearRow]:
    # expr <= slack  ->  terms <= slack - constant
    return [LinearRow(dict(e.terms), slack - e.constant, "<=", f"g{j}") for j, e in enumerate(exprs, start=1)]


def _prepare(pp: PolynomialProgram, params: ReformParams | Reformulation) -> Reformulation:
    if isinstance(params, Reformulation):
        return params
    return reformulate(normalize_program(pp) if not pp.is_normalized() else pp, params)


def build_lower_program(pp: PolynomialProgram, params: ReformParams | Reformulation) -> MilpModel:
    """Optimistic program: ``llb[f]`` over ``llb[g_j] <= 0``."""
    R = _prepare(pp, params)
    obj = linear_bounds(R.objective, R.objective_error)[0]
    rows = _rows([linear_bounds(lin, eb)[0] for lin, eb in R.constraints])
    return _assemble(R, obj, rows, f"{R.program.name}_lower", "lower")


def build_upper_program(
    pp: PolynomialProgram, params: ReformParams | Reformulation, slack: float = FEAS_TOL / 2
) -> MilpModel:
    """Pessimistic program: ``lub[f]`` over ``lub[g_j] <= slack``.

    ``slack`` keeps equality constraints (written as two opposite
    inequalities) satisfiable when their linearization error is below the
    feasibility tolerance; any solution still maps to a point with
    ``g_j(x) <= slack``.
    """
    R = _prepare(pp, params)
    obj = linear_bounds(R.objective, R.objective_error)[1]
    rows = _rows([linear_bounds(lin, eb)[1] for lin, eb in R.constraints], slack)
    return _assemble(R, obj, rows, f"{R.program.name}_upper", "upper")


def build_linearized_program(pp: PolynomialProgram, params: ReformParams | Reformulation) -> MilpModel:
    """Single program over the plain linearizations ``[f]`` and ``[g_j] <= 0``."""
    R = _prepare(pp, params)
    rows = _rows([lin for lin, _ in R.constraints])
    return _assemble(R, LinearExpr(R.objective.constant, R.objective.terms), rows, f"{R.program.name}_lin", "linearized")


def lift_point(x: Mapping[int, float], R: Reformulation) -> dict[str, float]:
    """A lifted point representing ``x``: greedy binary digits, exact products.

    Digits are taken from the top bit down; whatever is left goes into the
    remainder (continuous) or must be zero (discrete).
    """
    w: dict[str, float] = {}
    for i, e in R.expansions.items():
        rest = (x[i] - e.alpha) / e.kappa
        for j in range(e.sigma, 0, -1):
            bit = 1.0 if rest >= 2 ** (j - 1) - 1e-9 else 0.0
            w[e.units[j - 1]] = bit
            rest -= bit * 2 ** (j - 1)
        if e.remainder:
            w[e.remainder] = min(max(rest, 0.0), 1.0)
    for p in R.registry:
        v = 1.0
        for u in p.units:
            v *= w[u]
        if p.remainder:
            v *= w[p.remainder]
        w[p.name] = v
    return w


__all__ = [
    "MilpModel",
    "ModelArrays",
    "build_lower_program",
    "build_upper_program",
    "build_linearized_program",
    "lift_point",
    "map_to_original",
    "INT_TOL",
]
