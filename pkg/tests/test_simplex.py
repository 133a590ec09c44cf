import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from conftest import params_for
from polybound.model import build_lower_program
from polybound.poly import normalize_program
from polybound.simplex import solve_arrays, solve_lp


def test_trivial_bounds_only():
    out = solve_arrays(np.zeros((0, 2)), [], np.array([], dtype="<U2"), [1.0, -1.0], [0, 0], [3, 4], c0=2.0)
    assert out.status == "optimal"
    assert out.value == -2.0 and list(out.x) == [0.0, 4.0]


def test_small_lp():
    # max x + y s.t. x + 2y <= 4, 3x + y <= 6
    out = solve_arrays([[1, 2], [3, 1]], [4, 6], np.array(["<=", "<="]), [-1, -1], [0, 0], [np.inf, np.inf])
    assert out.value == pytest.approx(-2.8)
    assert out.x == pytest.approx([1.6, 1.2])


def test_infeasible():
    out = solve_arrays([[1, 1]], [3], np.array([">="]), [1, 1], [0, 0], [1, 1])
    assert out.status == "infeasible"
    assert solve_arrays([[1.0]], [0], np.array(["<="]), [0], [1], [0]).status == "infeasible"


def test_unbounded():
    out = solve_arrays([[1, -1]], [1], np.array(["<="]), [-1, 0], [0, 0], [np.inf, np.inf])
    assert out.status == "unbounded"


def test_equality_and_free_variable():
    out = solve_arrays([[1, 1]], [1], np.array(["=="]), [1, 2], [-np.inf, 0], [np.inf, 5])
    assert out.value == pytest.approx(1.0)
    assert out.x == pytest.approx([1.0, 0.0])


def test_pp1_relaxation_below_lower_bound(pp1):
    m = build_lower_program(normalize_program(pp1), params_for("pp1"))
    out = solve_lp(m)
    assert out.optimal
    # the relaxation can only be weaker than the mixed-binary optimum
    assert out.value <= -124.799 + 1e-3


def test_extra_bounds_validation(pp1):
    m = build_lower_program(normalize_program(pp1), params_for("pp1"))
    with pytest.raises(ValueError, match="inside"):
        solve_lp(m, {"u1_1": (0.0, 2.0)})
    with pytest.raises(ValueError):
        solve_lp(m, {"u1_1": (1.0, 0.0)})
    fixed = solve_lp(m, {"u1_1": (1.0, 1.0), 0: (1.0, 1.0)})
    assert fixed.x[0] == 1.0


def test_determinism(pp1):
    m = build_lower_program(normalize_program(pp1), params_for("pp1"))
    a, b = solve_lp(m), solve_lp(m)
    assert a.value == b.value and np.array_equal(a.x, b.x) and a.iterations == b.iterations


@st.composite
def random_lps(draw):
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    m, n = draw(st.integers(1, 8)), draw(st.integers(1, 8))
    A = np.round(rng.normal(size=(m, n)), 2)
    A[rng.random((m, n)) < 0.3] = 0.0
    b = np.round(rng.normal(size=m) * 2, 2)
    sense = rng.choice(["<=", ">=", "=="], size=m, p=[0.5, 0.3, 0.2])
    c = np.round(rng.normal(size=n), 2)
    lb = np.round(rng.uniform(-3, 0, size=n), 1)
    ub = lb + np.round(rng.uniform(0.5, 4, size=n), 1)
    return A, b, sense, c, lb, ub


def _scipy(A, b, sense, c, lb, ub):
    le, ge, eq = sense == "<=", sense == ">=", sense == "=="
    A_ub = np.vstack([A[le], -A[ge]])
    b_ub = np.concatenate([b[le], -b[ge]])
    return linprog(
        c,
        A_ub=A_ub if len(A_ub) else None,
        b_ub=b_ub if len(b_ub) else None,
        A_eq=A[eq] if eq.any() else None,
        b_eq=b[eq] if eq.any() else None,
        bounds=list(zip(lb, ub)),
        method="highs",
    )


@settings(max_examples=300, deadline=None)
@given(random_lps())
def test_agrees_with_scipy(lp):
    A, b, sense, c, lb, ub = lp
    ours = solve_arrays(A, b, sense, c, lb, ub)
    ref = _scipy(A, b, sense, c, lb, ub)
    if ref.status == 2:
        assert ours.status == "infeasible"
        return
    assert ref.status == 0
    assert ours.status == "optimal"
    assert ours.value == pytest.approx(ref.fun, abs=1e-6 * max(1.0, abs(ref.fun)))


@settings(max_examples=200, deadline=None)
@given(random_lps(), st.integers(0, 2**31))
def test_optimality_certificate(lp, seed):
    """Primal feasibility, dual sign conditions, complementary slackness and weak duality."""
    A, b, sense, c, lb, ub = lp
    out = solve_arrays(A, b, sense, c, lb, ub)
    if out.status != "optimal":
        return
    x, y, d = out.x, out.duals, out.reduced_costs
    tol = 1e-6
    assert (x >= lb - tol).all() and (x <= ub + tol).all()
    lhs = A @ x
    assert (lhs[sense == "<="] <= b[sense == "<="] + tol).all()
    assert (lhs[sense == ">="] >= b[sense == ">="] - tol).all()
    assert np.allclose(lhs[sense == "=="], b[sense == "=="], atol=tol)
    # stationarity c = A^T y + d
    assert np.allclose(c, A.T @ y + d, atol=1e-7)
    assert (y[sense == "<="] <= tol).all() and (y[sense == ">="] >= -tol).all()
    slack = np.abs(lhs - b)
    assert (np.abs(y) * slack <= 1e-6).all()
    at_lo, at_hi = np.isclose(x, lb, atol=1e-9), np.isclose(x, ub, atol=1e-9)
    assert (d[~at_lo & ~at_hi] == pytest.approx(0.0, abs=1e-7))
    assert (d[at_lo & ~at_hi] >= -tol).all() and (d[at_hi & ~at_lo] <= tol).all()
    # weak duality by sampling feasible points
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lb, ub, size=(2000, len(c)))
    lhs = pts @ A.T
    ok = np.ones(len(pts), dtype=bool)
    ok &= ((lhs <= b + 1e-12) | (sense != "<=")).all(axis=1)
    ok &= ((lhs >= b - 1e-12) | (sense != ">=")).all(axis=1)
    ok &= (sense != "==").all()
    assert (pts[ok] @ c >= out.value - 1e-9).all()
