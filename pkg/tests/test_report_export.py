import json

import numpy as np
import pytest
from scipy.optimize import Bounds, LinearConstraint, milp

from conftest import params_for
from polybound.bnb import solve_milp
from polybound.driver import bound_global_minimum
from polybound.export import export_milp, load_native_json, mps_number
from polybound.model import MilpModel, build_lower_program, build_upper_program
from polybound.parser import parse_program
from polybound.poly import normalize_program
from polybound.reformulate import LinearExpr, LinearRow, ReformParams, reformulate
from polybound.report import SCHEMA, BoundReport, reformulation_report, write_report


@pytest.fixture(scope="module")
def pp1_result(pp1):
    return bound_global_minimum(pp1, params_for("pp1"))


@pytest.fixture(scope="module")
def pp1_lower(pp1):
    return build_lower_program(normalize_program(pp1), params_for("pp1"))


# --- reports -------------------------------------------------------------------


def test_json_report_interval(pp1_result):
    d = json.loads(write_report(BoundReport.from_result(pp1_result), "json"))
    assert d["schema"] == SCHEMA and d["mode"] == "bound" and d["verdict"] == "bounded"
    assert d["interval"][0] == pytest.approx(-124.79948, abs=1e-4) and d["interval"][1] == -119
    assert d["upper_source"] == "x(w-)"
    assert [v["sigma"] for v in d["variables"]] == [3, 2, 2]
    assert d["errors"][0]["polynomial"] == "f"
    assert d["model"]["phi"] == 7
    assert d["witnesses"]["lower"]["feasible"] is True
    assert set(d["meta"]) == {"version", "created", "wall_time"}


def test_infeasible_report_has_no_interval():
    pp = parse_program("var x in [0, 1]; minimize x; subject to { x >= 2; }")
    res = bound_global_minimum(pp, ReformParams())
    d = BoundReport.from_result(res).to_dict()
    assert d["verdict"] == "infeasible-proven" and "interval" not in d
    assert "interval" not in write_report(BoundReport.from_result(res), "text").decode()


def test_fixed_variable_listed_as_fixed(pp2):
    npp = normalize_program(pp2)
    d = reformulation_report(npp, reformulate(npp, params_for("pp2")), [], meta=False)
    pi = [v for v in d["variables"] if v["name"] == "pi"][0]
    assert pi["kind"] == "fixed"


def test_report_bytes_are_deterministic(pp1):
    a = bound_global_minimum(pp1, params_for("pp1"))
    b = bound_global_minimum(pp1, params_for("pp1"))
    for fmt in ("json", "text"):
        assert write_report(BoundReport.from_result(a), fmt, meta=False) == write_report(BoundReport.from_result(b), fmt, meta=False)


def test_text_report_mentions_interval(pp1_result):
    text = write_report(BoundReport.from_result(pp1_result), "text", meta=False).decode()
    assert "interval: [-124.799, -119]" in text
    assert "version" not in text


def test_unknown_report_format(pp1_result):
    with pytest.raises(ValueError):
        write_report(BoundReport.from_result(pp1_result), "yaml")


# --- MPS ------------------------------------------------------------------------


def test_mps_number_width():
    assert mps_number(3.0) == "3"
    assert mps_number(-0.375) == "-0.375"
    assert len(mps_number(1 / 3)) <= 12 and float(mps_number(1 / 3)) == pytest.approx(1 / 3, rel=1e-9)
    assert len(mps_number(-1.23456789e-20)) <= 12


def test_mps_markers_wrap_binaries(pp1_lower):
    text = export_milp(pp1_lower).data.decode()
    lines = text.splitlines()
    a = next(i for i, l in enumerate(lines) if "'INTORG'" in l)
    b = next(i for i, l in enumerate(lines) if "'INTEND'" in l)
    inside = {l[4:12].strip() for l in lines[a + 1 : b]}
    assert inside == set(pp1_lower.binaries)
    assert sum(1 for l in lines if l.startswith(" UP BND") and l[14:22].strip() in inside) == 7


def test_mps_field_columns(pp1_lower):
    text = export_milp(pp1_lower).data.decode()
    sec = None
    for line in text.splitlines():
        if not line.startswith(" "):
            sec = line.split()[0]
            continue
        if sec == "COLUMNS" and "MARKER" not in line:
            assert line[1:3] == "  " and line[4:12].strip() and line[3] == " "
            assert line[14:22].strip() and line[24:36].strip()
            if len(line) > 36:
                assert line[39:47].strip() and line[49:61].strip()
        if sec == "ROWS":
            assert line[1:3].strip() in ("N", "L", "G", "E")


def test_mps_renames_long_names():
    m = MilpModel(
        ["a_long_binary_name"],
        [("r", 0.0, 1.0)],
        [LinearRow({"a_long_binary_name": 1.0, "r": 1.0}, 1.5, "<=", "a very long row label")],
        LinearExpr(2.0, {"r": -1.0}),
    )
    res = export_milp(m)
    assert res.renamed == {"C1": "a_long_binary_name", "R1": "a very long row label"}
    assert "OBJ" in res.data.decode() and " RHS       OBJ" in res.data.decode()


def test_empty_model_export():
    m = MilpModel([], [], [], LinearExpr(0.0, {}))
    text = export_milp(m).data.decode()
    assert text.splitlines()[0].startswith("NAME") and text.rstrip().endswith("ENDATA")
    assert "MARKER" not in text


def test_native_json_round_trip(pp1_lower):
    data = export_milp(pp1_lower, "native-json").data
    back = load_native_json(data)
    assert back.to_dict() == pp1_lower.to_dict()
    assert solve_milp(back).value == pytest.approx(solve_milp(pp1_lower).value, abs=1e-9)


def test_unknown_export_format(pp1_lower):
    with pytest.raises(ValueError):
        export_milp(pp1_lower, "lp")


def read_fixed_mps(text: str):
    """Minimal fixed-column MPS reader for the subset written by the exporter."""
    rows, kinds, obj = [], {}, None
    cols, integer = [], set()
    A, c = {}, {}
    rhs, lb, ub = {}, {}, {}
    sec, in_int = None, False
    for line in text.splitlines():
        if not line.strip():
            continue
        if not line.startswith(" "):
            sec = line.split()[0]
            continue
        f = [line[1:3].strip(), line[4:12].strip(), line[14:22].strip(), line[24:36].strip(), line[39:47].strip(), line[49:61].strip()]
        if sec == "ROWS":
            if f[0] == "N":
                obj = f[1]
            else:
                rows.append(f[1])
                kinds[f[1]] = f[0]
        elif sec == "COLUMNS":
            if f[2] == "'MARKER'":
                in_int = f[4] == "'INTORG'"
                continue
            if f[1] not in cols:
                cols.append(f[1])
                if in_int:
                    integer.add(f[1])
            for r, v in ((f[2], f[3]), (f[4], f[5])):
                if not r:
                    continue
                if r == obj:
                    c[f[1]] = float(v)
                else:
                    A[(r, f[1])] = float(v)
        elif sec == "RHS":
            rhs[f[2]] = float(f[3])
        elif sec == "BOUNDS":
            (lb if f[0] == "LO" else ub)[f[2]] = float(f[3])
    ci = {n: j for j, n in enumerate(cols)}
    ri = {n: i for i, n in enumerate(rows)}
    M = np.zeros((len(rows), len(cols)))
    for (r, col), v in A.items():
        M[ri[r], ci[col]] = v
    b = np.array([rhs.get(r, 0.0) for r in rows])
    lo = np.where([kinds[r] in ("G", "E") for r in rows], b, -np.inf)
    hi = np.where([kinds[r] in ("L", "E") for r in rows], b, np.inf)
    cv = np.array([c.get(n, 0.0) for n in cols])
    integ = np.array([1 if n in integer else 0 for n in cols])
    bl = np.array([lb.get(n, 0.0) for n in cols])
    bu = np.array([ub.get(n, np.inf) for n in cols])
    return cv, -rhs.get(obj, 0.0), M, lo, hi, integ, bl, bu


@pytest.mark.parametrize("kind", ["lower", "upper"])
def test_mps_reread_solved_externally(pp1, kind):
    npp = normalize_program(pp1)
    R = reformulate(npp, params_for("pp1"))
    m = (build_lower_program if kind == "lower" else build_upper_program)(npp, R)
    cv, c0, M, lo, hi, integ, bl, bu = read_fixed_mps(export_milp(m).data.decode())
    assert int(integ.sum()) == 7
    ref = milp(cv, constraints=[LinearConstraint(M, lo, hi)], integrality=integ, bounds=Bounds(bl, bu), options={"presolve": False})
    ours = solve_milp(m)
    assert ref.status == 0 and ours.status == "optimal"
    # numbers are shortened to 12 characters, so agreement is to about 1e-8 relative
    assert ref.fun + c0 == pytest.approx(ours.value, rel=1e-7)
