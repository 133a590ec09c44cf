"""Shared fixtures, random program generators and the acceptance summary hook."""

from __future__ import annotations

import itertools
import random

import numpy as np
import pytest

from polybound import problem_path
from polybound.parser import read_program
from polybound.poly import Constraint, Polynomial, PolynomialProgram, VariableSpec, monomial, normalize_program
from polybound.reformulate import ReformParams

# sigma settings under which the three bundled problems are studied
FIXTURE_SIGMAS = {
    "pp1": {"x1": 3, "x2": 2, "x3": 2},
    "pp2": {"x3": 9, "x4": 5},
    "pp3": {"x1": 7, "x2": 7, "x3": 7},
}


def load(name: str) -> PolynomialProgram:
    return read_program(problem_path(name))


def params_for(name: str) -> ReformParams:
    return ReformParams(sigma=FIXTURE_SIGMAS[name])


@pytest.fixture(scope="session")
def pp1():
    return load("pp1")


@pytest.fixture(scope="session")
def pp2():
    return load("pp2")


@pytest.fixture(scope="session")
def pp3():
    return load("pp3")


# ---------------------------------------------------------------------------
# random programs


def random_polynomial(rng: random.Random, n: int, degree: int, n_terms: int) -> Polynomial:
    terms = []
    for _ in range(n_terms):
        d = rng.randint(0, degree)
        idx = [rng.randrange(n) for _ in range(d)]
        mono = monomial(*((i, 1) for i in idx))
        terms.append((mono, rng.choice([-1, 1]) * round(rng.uniform(0.1, 3.0), 2)))
    return Polynomial.from_terms(terms)


def random_box(rng: random.Random, n: int) -> tuple[VariableSpec, ...]:
    out = []
    for i in range(n):
        lo = round(rng.uniform(-2, 1), 1)
        hi = lo + round(rng.uniform(0.5, 2.5), 1)
        out.append(VariableSpec(f"x{i + 1}", lo, hi))
    return tuple(out)


def random_program(seed: int, n_max: int = 3, degree: int = 3, n_cons: int | None = None) -> tuple[PolynomialProgram, ReformParams]:
    """Random box-bounded program with small sigmas.

    Constraints are shifted so that the center of the box satisfies them,
    which keeps most generated programs feasible.
    """
    rng = random.Random(seed)
    n = rng.randint(1, n_max)
    vs = random_box(rng, n)
    f = random_polynomial(rng, n, degree, rng.randint(1, 5))
    cons = []
    center = {i: (v.lower + v.upper) / 2 for i, v in enumerate(vs)}
    from polybound.poly import evaluate

    for _ in range(rng.randint(0, 2) if n_cons is None else n_cons):
        g = random_polynomial(rng, n, degree, rng.randint(1, 4))
        slack = rng.uniform(0.0, 1.0)
        cons.append(Constraint(g - evaluate(g, center) - slack))
    pp = normalize_program(PolynomialProgram(vs, f, tuple(cons), f"rand{seed}"))
    sig = {v.name: rng.randint(0, 4) for v in vs}
    return pp, ReformParams(sigma=sig)


def sample_lifted(rng: np.random.Generator, R, k: int) -> list[dict]:
    """Random lifted points with binary units, free remainders, exact products.

    Points that break an upper-bound row are redrawn so every sample lies in
    the lifted box.
    """
    out = []
    while len(out) < k:
        w = {}
        for e in R.expansions.values():
            for u in e.units:
                w[u] = float(rng.integers(0, 2))
            if e.remainder:
                w[e.remainder] = float(rng.random())
        if any(e.value(w) > e.beta + 1e-9 for e in R.expansions.values()):
            continue
        for p in R.registry:
            v = 1.0
            for u in p.units:
                v *= w[u]
            if p.remainder:
                v *= w[p.remainder]
            w[p.name] = v
        out.append(w)
    return out


def grid_minimum(pp: PolynomialProgram, step: float, tol: float = 1e-9):
    """Brute-force minimum of ``pp`` over a grid of the box (``None`` if no grid point is feasible)."""
    from polybound.poly import check_feasibility, evaluate

    axes = []
    for v in pp.variables:
        if v.is_fixed:
            axes.append(np.array([v.lower]))
        elif v.is_discrete:
            axes.append(np.array(v.values()))
        else:
            k = max(1, int(np.ceil((v.upper - v.lower) / step)))
            axes.append(np.linspace(v.lower, v.upper, k + 1))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = {i: m.ravel() for i, m in enumerate(mesh)}

    def ev(p):
        total = np.zeros_like(pts[0])
        for mono, c in p.terms:
            t = np.full_like(pts[0], c)
            for i, e in mono:
                t = t * pts[i] ** e
            total += t
        return total

    feas = np.ones_like(pts[0], dtype=bool)
    for c in pp.constraints:
        g = ev(c.poly) - c.rhs
        feas &= {"<=": g <= tol, ">=": g >= -tol, "==": np.abs(g) <= tol}[c.rel]
    if not feas.any():
        return None
    fv = ev(pp.objective)
    k = int(np.argmin(np.where(feas, fv, np.inf)))
    return float(fv[k]), {i: float(pts[i][k]) for i in pts}


# ---------------------------------------------------------------------------
# independent symbolic expansion (sympy) used as an oracle for the reformulator


def sympy_expansion(poly: Polynomial, R):
    """Expand ``poly`` over the lifted variables with sympy.

    Returns the expanded sympy expression and the symbols by lifted name.
    """
    import sympy as sp

    syms = {}

    def sym(name):
        if name not in syms:
            syms[name] = sp.Symbol(name)
        return syms[name]

    xs = {}
    for i, e in R.expansions.items():
        x = sp.nsimplify(e.alpha, rational=True)
        for j, u in enumerate(e.units, start=1):
            x += sp.nsimplify(e.weight(j), rational=True) * sym(u)
        if e.remainder:
            x += sp.nsimplify(e.kappa, rational=True) * sym(e.remainder)
        xs[i] = x
    expr = 0
    for mono, c in poly.terms:
        t = sp.nsimplify(c, rational=True)
        for i, p in mono:
            t *= xs[i] ** p
        expr += t
    return sp.expand(expr), syms


# ---------------------------------------------------------------------------
# acceptance summary

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record an acceptance verdict: ``criterion(n, ok, detail)`` then assert."""

    def record(n: int, ok: bool, detail: str) -> None:
        _ACCEPTANCE[n] = (bool(ok), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}: {detail}")


def all_patterns(n: int):
    return itertools.product((0.0, 1.0), repeat=n)
