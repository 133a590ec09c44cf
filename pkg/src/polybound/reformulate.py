"""Binary expansion of bounded variables and linearization of polynomials.

Each non-fixed variable ``x_i`` in ``[alpha, beta]`` is written as::

    x_i = alpha + kappa * sum_j 2**(j-1) * u_ij + kappa * r_i

with binary unit variables ``u_ij`` and a remainder ``r_i`` in ``[0, 1]``
(absent for discrete variables).  Distributing a monomial over these sums
gives elements ``a * n_r * prod(u) * prod(r)``; the product of remainders is
replaced by their mean and every remaining product of unit variables with at
most one remainder becomes a unit-product variable ``y`` in ``[0, 1]`` tied
to its factors by linear constraints.  The linearization error of every
polynomial is bounded before anything is solved.

Lifted variable names: ``u{i}_{j}``, ``r{i}`` and ``y{k}`` with 1-based
original variable positions ``i``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .poly import (
    Monomial,
    Polynomial,
    PolynomialProgram,
    ProgramError,
    VariableSpec,
    appears_only_linearly,
    mono_degree,
    mono_indices,
)

_OVERSHOOT_TOL = 1e-12


# ---------------------------------------------------------------------------
# sigma / kappa


def sigma_from_kappa(alpha: float, beta: float, kappa: float, discrete: bool = False) -> int:
    """Number of unit variables needed for error limit ``kappa``."""
    if alpha == beta:
        return 0
    if not kappa > 0:
        raise ProgramError("kappa must be positive unless the variable is fixed")
    if kappa > beta - alpha:
        raise ProgramError(f"kappa {kappa} exceeds the variable range {beta - alpha}")
    ratio = (beta - alpha) / kappa + (1.0 if discrete else 0.0)
    # guard against log2(4.000000000001) -> 3
    s = math.ceil(math.log2(ratio) - 1e-12)
    return max(s, 0)


def kappa_from_sigma(
    alpha: float, beta: float, sigma: int, discrete: bool = False, step: float | None = None
) -> float:
    """Smallest error limit reachable with ``sigma`` unit variables.

    For a discrete variable with a known ``step`` the error limit is the step
    itself (anything else leaves the value grid); ``sigma`` must then be large
    enough to count every grid value.
    """
    if sigma < 0 or int(sigma) != sigma:
        raise ProgramError(f"sigma must be a nonnegative integer, got {sigma}")
    width = beta - alpha
    if discrete:
        if sigma == 0:
            if width != 0:
                raise ProgramError("a discrete variable with sigma = 0 must be fixed")
            return 0.0
        if step is not None:
            needed = sigma_from_kappa(alpha, beta, step, True)
            if sigma < needed:
                raise ProgramError(
                    f"sigma = {sigma} cannot count the {round(width / step) + 1} values of a discrete variable"
                )
            return step
        return width / (2**sigma - 1)
    if sigma == 0:
        return width
    return width / 2**sigma


@dataclass(frozen=True)
class ReformParams:
    """Per-variable ``sigma`` or ``kappa`` settings keyed by variable name.

    Variables left unset default to ``default_sigma`` (or, for discrete
    variables, to the step of their value grid); variables that occur only
    linearly get ``sigma = 0`` unless pinned.
    """

    sigma: Mapping[str, int] = field(default_factory=dict)
    kappa: Mapping[str, float] = field(default_factory=dict)
    default_sigma: int = 0

    def __post_init__(self):
        both = set(self.sigma) & set(self.kappa)
        if both:
            raise ProgramError(f"both sigma and kappa given for {sorted(both)}")

    @classmethod
    def of(cls, pp: PolynomialProgram, sigmas: Iterable[int]) -> "ReformParams":
        return cls(sigma=dict(zip(pp.names, sigmas)))


@dataclass(frozen=True)
class VariableExpansion:
    index: int
    name: str
    alpha: float
    beta: float
    kappa: float
    sigma: int
    discrete: bool
    units: tuple[str, ...]
    remainder: str | None
    needs_upper_bound_constraint: bool

    def weight(self, j: int) -> float:
        """Coefficient of the ``j``-th (1-based) unit variable."""
        return self.kappa * 2 ** (j - 1)

    @property
    def max_value(self) -> float:
        return self.alpha + self.kappa * (2**self.sigma - 1) + (self.kappa if self.remainder else 0.0)

    def value(self, w: Mapping[str, float]) -> float:
        x = self.alpha + sum(self.weight(j) * w[u] for j, u in enumerate(self.units, start=1))
        if self.remainder:
            x += self.kappa * w[self.remainder]
        return x

    def as_linear(self) -> "LinearExpr":
        terms = {u: self.weight(j) for j, u in enumerate(self.units, start=1)}
        if self.remainder:
            terms[self.remainder] = self.kappa
        return LinearExpr(self.alpha, terms)


def expand_variable(
    spec: VariableSpec,
    index: int,
    sigma: int | None = None,
    kappa: float | None = None,
    linear_only: bool = False,
) -> VariableExpansion:
    """Expand one variable; ``index`` is its 0-based position in the program."""
    if sigma is not None and kappa is not None:
        raise ProgramError(f"variable {spec.name}: give sigma or kappa, not both")
    a, b = spec.lower, spec.upper
    if spec.is_fixed:
        raise ProgramError(f"fixed variable {spec.name} is substituted, not expanded")
    discrete = spec.is_discrete
    if discrete:
        if kappa is not None and not math.isclose(kappa, spec.step, rel_tol=1e-9):
            raise ProgramError(f"discrete variable {spec.name}: kappa must equal its step {spec.step}")
        if sigma is None:
            sigma = sigma_from_kappa(a, b, spec.step, True)
        k = kappa_from_sigma(a, b, sigma, True, spec.step)
    elif linear_only and sigma is None and kappa is None:
        sigma, k = 0, b - a
    elif kappa is not None:
        sigma = sigma_from_kappa(a, b, kappa, False)
        k = float(kappa)
    else:
        sigma = 0 if sigma is None else sigma
        k = kappa_from_sigma(a, b, sigma, False)
    if not (0 < k <= (b - a) * (1 + 1e-12)):
        raise ProgramError(f"variable {spec.name}: error limit {k} outside (0, {b - a}]")
    pos = index + 1
    units = tuple(f"u{pos}_{j}" for j in range(1, sigma + 1))
    rem = None if discrete else f"r{pos}"
    top = a + k * (2**sigma - 1) + (0.0 if discrete else k)
    over = top > b + _OVERSHOOT_TOL * max(1.0, abs(a), abs(b))
    return VariableExpansion(index, spec.name, a, b, k, sigma, discrete, units, rem, over)


def expand_program_variables(pp: PolynomialProgram, params: ReformParams) -> dict[int, VariableExpansion]:
    linear = appears_only_linearly(pp)
    used = set().union(*(p.variables() for p in pp.polynomials()))
    out = {}
    for i, v in enumerate(pp.variables):
        if v.is_fixed:
            continue
        sigma = params.sigma.get(v.name)
        kappa = params.kappa.get(v.name)
        lin = i in linear or i not in used
        if sigma is None and kappa is None and not lin and not v.is_discrete:
            sigma = params.default_sigma
        out[i] = expand_variable(v, i, sigma, kappa, linear_only=lin)
    return out


# ---------------------------------------------------------------------------
# elements


@dataclass(frozen=True)
class Element:
    """One term ``a * n_r * prod(units) * prod(remainders)`` of a monomial.

    ``units`` and ``remainders`` may repeat a name when a variable occurs
    with a power above one.
    """

    monomial: Monomial
    index: int
    a: float
    units: tuple[str, ...] = ()
    remainders: tuple[str, ...] = ()

    @property
    def n_u(self) -> int:
        return len(self.units)

    @property
    def n_r(self) -> int:
        return len(self.remainders)

    @property
    def n_kl(self) -> int:
        return max(self.n_r, 1)

    @property
    def is_constant(self) -> bool:
        return not self.units and not self.remainders

    def value(self, w: Mapping[str, float]) -> float:
        """Exact value of the element at a lifted point."""
        v = self.a * (self.n_r if self.n_r else 1)
        for u in self.units:
            v *= w[u]
        for r in self.remainders:
            v *= w[r]
        return v

    def linear_value(self, w: Mapping[str, float]) -> float:
        """Value of the linearized element (remainder product -> sum)."""
        pu = 1.0
        for u in set(self.units):
            pu *= w[u]
        if not self.remainders:
            return self.a * pu
        return self.a * pu * sum(w[r] for r in self.remainders)


def _factor_choices(e: VariableExpansion):
    # (kind, name, weight); kind in "a", "u", "r"
    out = []
    if e.alpha != 0.0:
        out.append(("a", None, e.alpha))
    out.extend(("u", u, e.weight(j)) for j, u in enumerate(e.units, start=1))
    if e.remainder:
        out.append(("r", e.remainder, e.kappa))
    return out


def expand_monomial(mono: Monomial, expansions: Mapping[int, VariableExpansion], merge_constants: bool = True) -> list[Element]:
    """Distribute a monomial over the expansions of its variables.

    Elements are listed in factor-choice order (constant, units by bit,
    remainder for each factor).  Constant elements are merged into one,
    placed first.
    """
    idx = mono_indices(mono)
    missing = [i for i in idx if i not in expansions]
    if missing:
        raise ProgramError(f"no expansion for variable index {missing[0]}")
    raw = []
    for combo in itertools.product(*(_factor_choices(expansions[i]) for i in idx)):
        coef = 1.0
        units, rems = [], []
        for kind, name, wt in combo:
            coef *= wt
            if kind == "u":
                units.append(name)
            elif kind == "r":
                rems.append(name)
        n_r = len(rems)
        raw.append((coef / n_r if n_r else coef, tuple(units), tuple(rems)))
    if merge_constants:
        const = [c for c, u, r in raw if not u and not r]
        rest = [t for t in raw if t[1] or t[2]]
        raw = ([(math.fsum(const), (), ())] if const else []) + rest
    return [Element(mono, l, a, u, r) for l, (a, u, r) in enumerate(raw, start=1)]


# ---------------------------------------------------------------------------
# linear expressions and unit products


class LinearExpr:
    """``constant + sum(coef * var)`` over lifted variable names."""

    __slots__ = ("constant", "terms")

    def __init__(self, constant: float = 0.0, terms: Mapping[str, float] | None = None):
        self.constant = float(constant)
        self.terms = {k: float(v) for k, v in (terms or {}).items() if v != 0.0}

    def add_term(self, name: str, coef: float) -> None:
        v = self.terms.get(name, 0.0) + coef
        if v == 0.0:
            self.terms.pop(name, None)
        else:
            self.terms[name] = v

    def shifted(self, delta: float) -> "LinearExpr":
        return LinearExpr(self.constant + delta, self.terms)

    def scaled(self, s: float) -> "LinearExpr":
        return LinearExpr(self.constant * s, {k: v * s for k, v in self.terms.items()})

    def __add__(self, other: "LinearExpr") -> "LinearExpr":
        out = LinearExpr(self.constant + other.constant, self.terms)
        for k, v in other.terms.items():
            out.add_term(k, v)
        return out

    def __neg__(self) -> "LinearExpr":
        return self.scaled(-1.0)

    def __sub__(self, other: "LinearExpr") -> "LinearExpr":
        return self + (-other)

    def value(self, w: Mapping[str, float]) -> float:
        return self.constant + sum(c * w[k] for k, c in self.terms.items())

    def __eq__(self, other) -> bool:
        return isinstance(other, LinearExpr) and self.constant == other.constant and self.terms == other.terms

    def __repr__(self) -> str:
        parts = [f"{self.constant:g}"] + [f"{c:+g}*{k}" for k, c in sorted(self.terms.items())]
        return f"LinearExpr({' '.join(parts)})"


@dataclass(frozen=True)
class UnitProduct:
    name: str
    units: frozenset
    remainder: str | None = None

    @property
    def size(self) -> int:
        return len(self.units) + (1 if self.remainder else 0)

    @property
    def is_trivial(self) -> bool:
        return self.size <= 1

    def sorted_units(self) -> list[str]:
        return sorted(self.units, key=_lifted_key)


def _lifted_key(name: str):
    kind = name[0]
    nums = tuple(int(p) for p in name[1:].split("_"))
    return ("ury".index(kind), nums)


class ProductRegistry:
    """Interns nontrivial unit products by signature so each is built once."""

    def __init__(self):
        self._by_sig: dict[tuple, UnitProduct] = {}
        self.products: list[UnitProduct] = []

    def resolve(self, units: Iterable[str], remainder: str | None = None) -> str | None:
        """Variable standing for ``prod(units) * remainder``; ``None`` means 1."""
        us = frozenset(units)
        size = len(us) + (1 if remainder else 0)
        if size == 0:
            return None
        if size == 1:
            return remainder if remainder else next(iter(us))
        sig = (us, remainder)
        up = self._by_sig.get(sig)
        if up is None:
            up = UnitProduct(f"y{len(self.products) + 1}", us, remainder)
            self._by_sig[sig] = up
            self.products.append(up)
        return up.name

    def __len__(self) -> int:
        return len(self.products)

    def __iter__(self):
        return iter(self.products)


def linearize_element(elem: Element, registry: ProductRegistry) -> LinearExpr:
    out = LinearExpr()
    if elem.n_r == 0:
        name = registry.resolve(elem.units)
        if name is None:
            out.constant = elem.a
        else:
            out.add_term(name, elem.a)
        return out
    for r in elem.remainders:
        out.add_term(registry.resolve(elem.units, r), elem.a)
    return out


@dataclass(frozen=True)
class LinearRow:
    """``sum(coef * var) <rel> rhs``; the relation is ``<=`` unless stated."""

    coefs: Mapping[str, float]
    rhs: float
    rel: str = "<="
    label: str = ""


def product_constraints(up: UnitProduct) -> list[LinearRow]:
    """Linear constraints forcing ``y = prod(u) * r`` at binary ``u``.

    ``y <= u_j`` for each unit, ``y >= r + sum(u) - n_u`` and ``y <= r``;
    without a remainder ``r`` is 1 and ``y <= 1`` is left to the bounds.
    """
    if up.is_trivial:
        return []
    y = up.name
    us = up.sorted_units()
    n = len(us)
    coefs = [{y: 1.0, u: -1.0} for u in us]
    rhs = [0.0] * n
    low = {u: 1.0 for u in us}
    if up.remainder:
        low[up.remainder] = 1.0
        low[y] = -1.0
        coefs += [low, {y: 1.0, up.remainder: -1.0}]
        rhs += [float(n), 0.0]
    else:
        low[y] = -1.0
        coefs.append(low)
        rhs.append(float(n - 1))
    rows = [LinearRow(c, b, "<=", f"{y}c{k}") for k, (c, b) in enumerate(zip(coefs, rhs), start=1)]
    return rows


def upper_bound_row(e: VariableExpansion) -> LinearRow:
    """``alpha + sum(weights) <= beta`` written with the constant moved right."""
    lin = e.as_linear()
    return LinearRow(lin.terms, e.beta - e.alpha, "<=", f"bound_{e.name}")


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class ErrorBounds:
    """``errlb <= lin[g] - g <= errub`` over the whole box."""

    errlb: float = 0.0
    errub: float = 0.0


def linearize_polynomial(
    poly: Polynomial, expansions: Mapping[int, VariableExpansion], registry: ProductRegistry
) -> tuple[LinearExpr, ErrorBounds]:
    lin = LinearExpr()
    lo: list[float] = []
    hi: list[float] = []
    for mono, c in poly.terms:
        for elem in expand_monomial(mono, expansions):
            part = linearize_element(elem, registry)
            lin.constant += c * part.constant
            for k, v in part.terms.items():
                lin.add_term(k, c * v)
            e = c * elem.a * (elem.n_kl - 1)
            if e < 0:
                lo.append(e)
            elif e > 0:
                hi.append(e)
    return lin, ErrorBounds(math.fsum(lo), math.fsum(hi))


def linear_bounds(lin: LinearExpr, eb: ErrorBounds) -> tuple[LinearExpr, LinearExpr]:
    """Linear lower and upper bounds ``lin - errub`` and ``lin - errlb``."""
    return lin.shifted(-eb.errub), lin.shifted(-eb.errlb)


# ---------------------------------------------------------------------------
# whole programs


@dataclass
class SizeCounts:
    """Structural counts of a reformulation.

    ``psi_raw`` and ``rho_raw`` count unit-product variables and their
    constraints per element before products are shared.
    """

    n: int
    t: int
    d: int
    sigma_max: int
    phi: int
    psi: int
    rho: int
    psi_raw: int
    rho_raw: int

    @property
    def psi_bound(self) -> int:
        return self.t * self.d * (self.sigma_max + 2) ** self.d

    @property
    def rho_bound(self) -> int:
        return self.t * self.d**2 * (self.d + 1) * (self.sigma_max + 2) ** self.d


@dataclass
class Reformulation:
    """Lifted form of a normalized program: expansions, products, linearized polynomials."""

    program: PolynomialProgram
    expansions: dict[int, VariableExpansion]
    registry: ProductRegistry
    objective: LinearExpr
    objective_error: ErrorBounds
    constraints: list[tuple[LinearExpr, ErrorBounds]]

    @property
    def units(self) -> list[str]:
        return [u for i in sorted(self.expansions) for u in self.expansions[i].units]

    @property
    def remainders(self) -> list[str]:
        return [e.remainder for i, e in sorted(self.expansions.items()) if e.remainder]

    def phi_rows(self) -> list[LinearRow]:
        """Constraints describing the lifted box: products then upper bounds."""
        rows = [r for up in self.registry for r in product_constraints(up)]
        rows += [upper_bound_row(e) for _, e in sorted(self.expansions.items()) if e.needs_upper_bound_constraint]
        return rows

    def map_to_original(self, w: Mapping[str, float]) -> dict[int, float]:
        return map_to_original(w, self.expansions, self.program)

    def counts(self) -> SizeCounts:
        basis = self.program.monomial_basis()
        psi_raw = rho_raw = 0
        for m in basis:
            for el in expand_monomial(m, self.expansions):
                rems = el.remainders or (None,)
                for r in rems:
                    size = len(el.units) + (1 if r else 0)
                    if size >= 2:
                        psi_raw += 1
                        rho_raw += len(el.units) + (2 if r else 1)
        n_bound = sum(e.needs_upper_bound_constraint for e in self.expansions.values())
        return SizeCounts(
            n=len(self.program.variables),
            t=len(basis),
            d=max((mono_degree(m) for m in basis), default=0),
            sigma_max=max((e.sigma for e in self.expansions.values()), default=0),
            phi=len(self.units),
            psi=len(self.registry),
            rho=len(self.phi_rows()),
            psi_raw=psi_raw,
            rho_raw=rho_raw + n_bound,
        )


def reformulate(pp: PolynomialProgram, params: ReformParams) -> Reformulation:
    if not pp.is_normalized():
        raise ProgramError("program must be normalized first")
    expansions = expand_program_variables(pp, params)
    registry = ProductRegistry()
    obj, obj_err = linearize_polynomial(pp.objective, expansions, registry)
    cons = [linearize_polynomial(c.poly, expansions, registry) for c in pp.constraints]
    return Reformulation(pp, expansions, registry, obj, obj_err, cons)


def map_to_original(
    w: Mapping[str, float], expansions: Mapping[int, VariableExpansion], pp: PolynomialProgram | None = None
) -> dict[int, float]:
    """Original-variable point ``x(w)``; fixed variables get their value."""
    x = {}
    for i, e in expansions.items():
        try:
            x[i] = e.value(w)
        except KeyError as exc:
            raise ProgramError(f"lifted point has no value for {exc.args[0]}") from None
    if pp is not None:
        for i, v in enumerate(pp.variables):
            if v.is_fixed:
                x[i] = v.lower
    return dict(sorted(x.items()))
