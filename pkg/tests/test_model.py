import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import params_for, random_program
from polybound.model import MilpModel, build_linearized_program, build_lower_program, build_upper_program, lift_point
from polybound.poly import FEAS_TOL, Polynomial, PolynomialProgram, VariableSpec, evaluate, normalize_program
from polybound.reformulate import ReformParams, reformulate


@pytest.fixture(scope="module")
def pp1_models(pp1):
    npp = normalize_program(pp1)
    R = reformulate(npp, params_for("pp1"))
    return npp, R, build_lower_program(npp, R), build_upper_program(npp, R)


def test_pp1_sizes(pp1_models):
    _, R, lo, up = pp1_models
    assert lo.n_binaries == up.n_binaries == 7
    assert lo.binaries == ["u1_1", "u1_2", "u1_3", "u2_1", "u2_2", "u3_1", "u3_2"]
    assert [c[0] for c in lo.continuous[:3]] == ["r1", "r2", "r3"]
    c = R.counts()
    assert (c.phi, c.psi, c.rho) == (7, 67, 229)
    assert (c.psi_raw, c.rho_raw) == (114, 370)
    # the problem rows come last, one per normalized constraint
    assert [r.label for r in lo.rows[-2:]] == ["g1", "g2"]


def test_pp3_sizes_and_equalities(pp3):
    npp = normalize_program(pp3)
    R = reformulate(npp, params_for("pp3"))
    lo = build_lower_program(npp, R)
    assert lo.n_binaries == 21
    (l1, e1), (l2, e2) = R.constraints[0], R.constraints[1]
    # an equality becomes two opposite rows whose linearizations are opposite too
    assert l1 == -l2
    assert (e1.errlb, e1.errub) == (-e2.errub, -e2.errlb)


def test_upper_rows_carry_slack(pp1_models):
    _, R, lo, up = pp1_models
    for a, b in zip(lo.rows[-2:], up.rows[-2:]):
        assert a.coefs == b.coefs
    lin, eb = R.constraints[0]
    assert up.rows[-2].rhs == pytest.approx(FEAS_TOL / 2 - lin.constant + eb.errlb)
    assert lo.rows[-2].rhs == pytest.approx(-lin.constant + eb.errub)
    assert lo.objective.constant - up.objective.constant == pytest.approx(R.objective_error.errlb - R.objective_error.errub)


def test_linear_program_has_no_error():
    x, y = Polynomial.variable(0), Polynomial.variable(1)
    from polybound.poly import Constraint

    pp = normalize_program(PolynomialProgram((VariableSpec("x", 0, 3), VariableSpec("y", -1, 1)), 2 * x - y, (Constraint(x + y - 1),)))
    R = reformulate(pp, ReformParams(default_sigma=3))
    assert R.objective_error.errlb == R.objective_error.errub == 0
    assert not R.units and not len(R.registry)
    lo, up, li = (b(pp, R) for b in (build_lower_program, build_upper_program, build_linearized_program))
    assert lo.objective == up.objective == li.objective
    assert lo.rows[0].rhs == li.rows[0].rhs


def test_map_to_original_corners(pp1_models):
    npp, R, lo, _ = pp1_models
    zeros = {v: 0.0 for v in lo.variables}
    ones = {v: 1.0 for v in lo.variables}
    assert lo.map_to_original(zeros) == {0: 2.0, 1: 0.0, 2: 4.0}
    assert lo.map_to_original(ones) == {0: 5.0, 1: 10.0, 2: 8.0}


def test_map_to_original_fills_fixed(pp2):
    npp = normalize_program(pp2)
    R = reformulate(npp, params_for("pp2"))
    w = {v: 0.0 for v in build_lower_program(npp, R).variables}
    x = R.map_to_original(w)
    assert x[4] == 3.14159 and x[0] == 1.0 and x[1] == 0.625


def test_model_without_reformulation_cannot_map(pp1_models):
    m = MilpModel.from_dict(pp1_models[2].to_dict())
    with pytest.raises(ValueError):
        m.map_to_original({})


def test_dict_round_trip_and_determinism(pp1, pp1_models):
    _, _, lo, _ = pp1_models
    again = build_lower_program(pp1, params_for("pp1"))
    assert json.dumps(again.to_dict(), sort_keys=True) == json.dumps(lo.to_dict(), sort_keys=True)
    back = MilpModel.from_dict(json.loads(json.dumps(lo.to_dict())))
    a, b = lo.arrays, back.arrays
    assert np.array_equal(a.A, b.A) and np.array_equal(a.b, b.b) and np.array_equal(a.c, b.c) and a.c0 == b.c0


def test_arrays_shape_and_bounds(pp1_models):
    _, _, lo, _ = pp1_models
    a = lo.arrays
    assert a.A.shape == (len(lo.rows), len(lo.variables))
    assert (a.lb == 0).all() and (a.ub == 1).all()
    assert a.n_binaries == 7


def test_violations_reports_integrality_bounds_and_rows(pp1_models):
    _, _, lo, _ = pp1_models
    w = {v: 0.0 for v in lo.variables}
    w["u1_1"] = 0.5
    w["r1"] = 1.5
    labels = [lab for lab, _ in lo.violations(w)]
    assert "integrality u1_1" in labels and "bound r1" in labels


def _grid(pp, k=5):
    axes = []
    for v in pp.variables:
        axes.append(v.values() if v.is_discrete else [v.lower] if v.is_fixed else list(np.linspace(v.lower, v.upper, k)))
    return [dict(enumerate(p)) for p in np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T]


@pytest.mark.parametrize("name", ["pp1", "pp2", "pp3"])
def test_lift_point_covers_the_box(name, pp1, pp2, pp3):
    """Every point of the box has a lifted preimage satisfying the box rows."""
    pp = normalize_program({"pp1": pp1, "pp2": pp2, "pp3": pp3}[name])
    R = reformulate(pp, params_for(name))
    lo = build_lower_program(pp, R)
    n_box = len(R.phi_rows())
    for x in _grid(pp):
        w = lift_point(x, R)
        back = R.map_to_original(w)
        assert all(back[i] == pytest.approx(x[i], abs=1e-9) for i in x)
        bad = [lab for lab, _ in lo.violations(w, 1e-9) if not lab.startswith("g")]
        assert bad == []
        assert len(lo.rows) - n_box == len(pp.constraints)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 2**31))
def test_lifted_objectives_bracket_f(seed, pt_seed):
    pp, params = random_program(seed)
    R = reformulate(pp, params)
    lo, up = build_lower_program(pp, R), build_upper_program(pp, R)
    rng = np.random.default_rng(pt_seed)
    for _ in range(20):
        x = {i: float(rng.uniform(v.lower, v.upper)) for i, v in enumerate(pp.variables)}
        w = lift_point(x, R)
        f = evaluate(pp.objective, x)
        tol = 1e-9 * max(1.0, abs(f))
        assert lo.evaluate_objective(w) <= f + tol
        assert f <= up.evaluate_objective(w) + tol
        # a point feasible for the original program is feasible for the lower model
        if all(evaluate(c.poly, x) <= 0 for c in pp.constraints):
            assert lo.violations(w, 1e-9) == []
