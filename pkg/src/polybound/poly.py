"""Sparse multivariate polynomials and box-bounded polynomial programs.

A monomial is a sorted tuple of ``(variable_index, power)`` pairs; the empty
tuple is the constant monomial.  Polynomials are immutable mappings from
monomials to nonzero float coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

Monomial = tuple  # tuple[tuple[int, int], ...]

CONSTANT: Monomial = ()

#: Default tolerance used when deciding polynomial feasibility.
FEAS_TOL = 1e-6


class ProgramError(ValueError):
    """Raised for malformed variables, polynomials or programs."""


def monomial(*pairs: tuple[int, int]) -> Monomial:
    """Build a canonical monomial from ``(index, power)`` pairs."""
    powers: dict[int, int] = {}
    for idx, p in pairs:
        if p < 0 or int(p) != p:
            raise ProgramError(f"exponent must be a nonnegative integer, got {p}")
        if p:
            powers[idx] = powers.get(idx, 0) + int(p)
    return tuple(sorted(powers.items()))


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    return monomial(*a, *b)


def mono_degree(m: Monomial) -> int:
    return sum(p for _, p in m)


def mono_indices(m: Monomial) -> tuple[int, ...]:
    """Index tuple with repetition, e.g. x1^2 x3 -> (1, 1, 3)."""
    return tuple(i for i, p in m for _ in range(p))


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in canonical form: merged terms, no zero coefficients."""

    terms: tuple[tuple[Monomial, float], ...] = ()

    @classmethod
    def from_terms(cls, items: Iterable[tuple[Monomial, float]]) -> "Polynomial":
        acc: dict[Monomial, float] = {}
        for m, c in items:
            acc[m] = acc.get(m, 0.0) + float(c)
        return cls(tuple(sorted((m, c) for m, c in acc.items() if c != 0.0)))

    @classmethod
    def constant(cls, value: float) -> "Polynomial":
        return cls.from_terms([(CONSTANT, value)])

    @classmethod
    def variable(cls, index: int) -> "Polynomial":
        return cls.from_terms([(((index, 1),), 1.0)])

    def as_dict(self) -> dict[Monomial, float]:
        return dict(self.terms)

    def __add__(self, other: "Polynomial | float") -> "Polynomial":
        other = _coerce(other)
        return Polynomial.from_terms(self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(tuple((m, -c) for m, c in self.terms))

    def __sub__(self, other: "Polynomial | float") -> "Polynomial":
        return self + (-_coerce(other))

    def __rsub__(self, other: "Polynomial | float") -> "Polynomial":
        return _coerce(other) - self

    def __mul__(self, other: "Polynomial | float") -> "Polynomial":
        other = _coerce(other)
        return Polynomial.from_terms(
            (mono_mul(m1, m2), c1 * c2) for m1, c1 in self.terms for m2, c2 in other.terms
        )

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Polynomial":
        if n < 0 or int(n) != n:
            raise ProgramError(f"exponent must be a nonnegative integer, got {n}")
        out = Polynomial.constant(1.0)
        for _ in range(int(n)):
            out = out * self
        return out

    @property
    def degree(self) -> int:
        return max((mono_degree(m) for m, _ in self.terms), default=0)

    @property
    def monomials(self) -> tuple[Monomial, ...]:
        return tuple(m for m, _ in self.terms)

    def variables(self) -> set[int]:
        return {i for m, _ in self.terms for i, _ in m}

    def constant_term(self) -> float:
        return self.as_dict().get(CONSTANT, 0.0)

    def substitute(self, values: Mapping[int, float]) -> "Polynomial":
        """Replace the listed variables by constants."""
        out = []
        for m, c in self.terms:
            keep = []
            for i, p in m:
                if i in values:
                    c *= values[i] ** p
                else:
                    keep.append((i, p))
            out.append((tuple(keep), c))
        return Polynomial.from_terms(out)

    def is_zero(self) -> bool:
        return not self.terms


def _coerce(x: "Polynomial | float") -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    return Polynomial.constant(float(x))


def evaluate(poly: Polynomial, point: Mapping[int, float], names: Sequence[str] | None = None) -> float:
    """Evaluate ``poly`` at ``point`` (variable index -> value)."""
    total = 0.0
    for m, c in poly.terms:
        v = c
        for i, p in m:
            try:
                v *= point[i] ** p
            except KeyError:
                label = names[i] if names is not None and i < len(names) else f"#{i}"
                raise ProgramError(f"no value assigned to variable {label}") from None
        total += v
    return total


# ---------------------------------------------------------------------------
# variables and programs


@dataclass(frozen=True)
class VariableSpec:
    """A bounded original variable.

    ``kind`` is ``"continuous"``, ``"discrete"`` (evenly spaced values
    ``lower, lower + step, ..., upper``) or ``"fixed"``.
    """

    name: str
    lower: float
    upper: float
    kind: str = "continuous"
    step: float | None = None

    def __post_init__(self):
        if not (self.lower <= self.upper):
            raise ProgramError(f"variable {self.name}: lower bound {self.lower} exceeds upper {self.upper}")
        if self.kind == "fixed":
            if self.lower != self.upper:
                raise ProgramError(f"fixed variable {self.name} needs lower == upper")
        elif self.kind == "discrete":
            if self.step is None or not self.step > 0:
                raise ProgramError(f"discrete variable {self.name} needs a positive step")
            n = (self.upper - self.lower) / self.step
            if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
                raise ProgramError(
                    f"discrete variable {self.name}: range {self.upper - self.lower} "
                    f"is not a multiple of step {self.step}"
                )
        elif self.kind != "continuous":
            raise ProgramError(f"unknown variable kind {self.kind!r}")

    @property
    def is_fixed(self) -> bool:
        return self.kind == "fixed" or self.lower == self.upper

    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    def values(self) -> list[float]:
        """Admissible values of a discrete variable."""
        if not self.is_discrete:
            raise ProgramError(f"variable {self.name} is not discrete")
        n = int(round((self.upper - self.lower) / self.step))
        return [self.lower + k * self.step for k in range(n + 1)]


RELATIONS = ("<=", ">=", "==")


@dataclass(frozen=True)
class Constraint:
    """``lhs <rel> rhs`` with a polynomial left side and constant right side."""

    poly: Polynomial
    rel: str = "<="
    rhs: float = 0.0

    def __post_init__(self):
        if self.rel not in RELATIONS:
            raise ProgramError(f"unknown relation {self.rel!r}")


@dataclass(frozen=True)
class PolynomialProgram:
    """Minimize ``objective`` subject to ``constraints`` and variable boxes."""

    variables: tuple[VariableSpec, ...]
    objective: Polynomial
    constraints: tuple[Constraint, ...] = ()
    name: str = "pp"
    sense: str = "minimize"

    def __post_init__(self):
        if self.sense != "minimize":
            raise ProgramError("only minimization programs are supported; negate the objective")
        n = len(self.variables)
        names = [v.name for v in self.variables]
        if len(set(names)) != n:
            raise ProgramError("duplicate variable names")
        for p in [self.objective, *(c.poly for c in self.constraints)]:
            bad = [i for i in p.variables() if not 0 <= i < n]
            if bad:
                raise ProgramError(f"polynomial refers to undeclared variable index {bad[0]}")

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def index(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise ProgramError(f"unknown variable {name!r}")

    def polynomials(self) -> list[Polynomial]:
        return [self.objective, *(c.poly for c in self.constraints)]

    def is_normalized(self) -> bool:
        return all(c.rel == "<=" and c.rhs == 0.0 for c in self.constraints) and not any(
            v.is_fixed and i in p.variables()
            for p in self.polynomials()
            for i, v in enumerate(self.variables)
        )

    def point(self, values: Mapping[str, float]) -> dict[int, float]:
        """Translate a name-keyed point to an index-keyed one."""
        return {self.index(k): float(v) for k, v in values.items()}

    def monomial_basis(self) -> list[Monomial]:
        """All distinct monomials of the program, constant first."""
        ms = {CONSTANT}
        for p in self.polynomials():
            ms.update(p.monomials)
        return sorted(ms)

    def with_bounds(self, bounds: Mapping[int, tuple[float, float]], name: str | None = None) -> "PolynomialProgram":
        vs = list(self.variables)
        for i, (lo, hi) in bounds.items():
            v = vs[i]
            kind = "fixed" if lo == hi else v.kind
            vs[i] = VariableSpec(v.name, lo, hi, kind, v.step if kind == "discrete" else None)
        return PolynomialProgram(tuple(vs), self.objective, self.constraints, name or self.name)


def normalize_program(pp: PolynomialProgram) -> PolynomialProgram:
    """Rewrite every constraint as ``g(x) <= 0`` and substitute fixed variables.

    ``g >= c`` becomes ``c - g <= 0``; ``g == c`` becomes the pair
    ``g - c <= 0``, ``c - g <= 0``.  Constraints that become constant after
    substitution are kept (a positive constant makes the program infeasible).
    """
    fixed = {i: v.lower for i, v in enumerate(pp.variables) if v.is_fixed}

    def sub(p: Polynomial) -> Polynomial:
        return p.substitute(fixed) if fixed else p

    out: list[Constraint] = []
    for c in pp.constraints:
        g = sub(c.poly) - c.rhs
        if c.rel == "<=":
            out.append(Constraint(g))
        elif c.rel == ">=":
            out.append(Constraint(-g))
        else:
            out.append(Constraint(g))
            out.append(Constraint(-g))
    return PolynomialProgram(pp.variables, sub(pp.objective), tuple(out), pp.name)


@dataclass
class FeasibilityReport:
    feasible: bool
    violations: list[tuple[str, float]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.feasible


def check_feasibility(pp: PolynomialProgram, point: Mapping[int, float], tol: float = FEAS_TOL) -> FeasibilityReport:
    """Check bounds and ``g_j(point) <= tol`` for a normalized program.

    Violations are reported as ``(label, amount)``; bound labels look like
    ``"bound x1"`` and constraint labels ``"g2"`` (1-based).
    """
    violations = []
    for i, v in enumerate(pp.variables):
        if i not in point:
            raise ProgramError(f"no value assigned to variable {v.name}")
        x = point[i]
        excess = max(v.lower - x, x - v.upper)
        if excess > tol:
            violations.append((f"bound {v.name}", excess))
        elif v.is_discrete:
            k = (x - v.lower) / v.step
            off = abs(k - round(k)) * v.step
            if off > tol:
                violations.append((f"grid {v.name}", off))
    for j, c in enumerate(pp.constraints, start=1):
        val = evaluate(c.poly, point, pp.names)
        if c.rel == "<=":
            excess = val - c.rhs
        elif c.rel == ">=":
            excess = c.rhs - val
        else:
            excess = abs(val - c.rhs)
        if excess > tol:
            violations.append((f"g{j}", excess))
    return FeasibilityReport(not violations, violations)


def appears_only_linearly(pp: PolynomialProgram) -> set[int]:
    """Indices of variables that occur only in degree-1 monomials."""
    nonlinear = set()
    present = set()
    for p in pp.polynomials():
        for m in p.monomials:
            for i, _ in m:
                present.add(i)
                if mono_degree(m) > 1:
                    nonlinear.add(i)
    return present - nonlinear
