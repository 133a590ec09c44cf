"""Result reports in text and JSON.

The JSON layout is versioned by its ``schema`` field (``report_v1``) and is
documented in the README.  Timing and version information is kept under a
single ``meta`` key so that reports without it are byte-for-byte
reproducible.
"""

from __future__ import annotations

import datetime as _dt
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from .bnb import MilpOutcome
from .driver import IntervalResult, Refinement, TauResult, Witness
from .poly import PolynomialProgram
from .reformulate import Reformulation

SCHEMA = "report_v1"


def _f(v):
    """JSON-safe float (infinities and NaN become None)."""
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def variable_table(pp: PolynomialProgram, R: Reformulation) -> list[dict]:
    """Effective sigma and kappa per variable, fixed ones marked substituted."""
    by_index = R.expansions
    rows = []
    for i, v in enumerate(pp.variables):
        row = {"name": v.name, "kind": v.kind, "lower": v.lower, "upper": v.upper}
        e = by_index.get(i)
        if e is None:
            row.update(sigma=0, kappa=0.0, substituted=True)
        else:
            row.update(sigma=e.sigma, kappa=e.kappa, substituted=False, upper_bound_row=e.needs_upper_bound_constraint)
        rows.append(row)
    return rows


def error_table(R: Reformulation) -> list[dict]:
    out = [{"polynomial": "f", "errlb": R.objective_error.errlb, "errub": R.objective_error.errub}]
    for j, (_, eb) in enumerate(R.constraints, start=1):
        out.append({"polynomial": f"g{j}", "errlb": eb.errlb, "errub": eb.errub})
    return out


def size_table(R: Reformulation) -> dict:
    c = R.counts()
    return {
        "n": c.n,
        "t": c.t,
        "d": c.d,
        "phi": c.phi,
        "psi": c.psi,
        "rho": c.rho,
        "psi_before_sharing": c.psi_raw,
        "rho_before_sharing": c.rho_raw,
        "psi_bound": c.psi_bound,
        "rho_bound": c.rho_bound,
        "columns": c.phi + len(R.remainders) + c.psi,
    }


def _outcome(out: MilpOutcome | None) -> dict | None:
    if out is None:
        return None
    return {
        "status": out.status,
        "value": _f(out.value),
        "bound": _f(out.bound),
        "gap": _f(out.gap),
        "nodes": out.nodes,
        "lp_iterations": out.lp_iterations,
    }


def _witness(w: Witness | None) -> dict | None:
    if w is None:
        return None
    return {
        "source": w.source,
        "x": {k: _f(v) for k, v in w.x.items()},
        "objective": _f(w.objective),
        "model_value": _f(w.model_value),
        "feasible": w.feasible,
        "violations": [[lab, _f(v)] for lab, v in w.violations],
        # y values follow from these, so they are left out
        "lifted": {k: _f(v) for k, v in w.lifted.items() if k[0] in "ur"},
    }


def _refinement(step: Refinement) -> dict:
    return {
        "round": step.round,
        "program": step.program.name,
        "center": {k: _f(v) for k, v in step.center.items()},
        "kappas_used_for_focus": dict(step.kappas),
        "variables": variable_table(step.program, step.reformulation),
        "upper_program": _outcome(step.outcome),
        "witness": _witness(step.witness),
        "lower_program": _outcome(step.lower_outcome),
    }


@dataclass
class BoundReport:
    """Everything a bound run reports; see :meth:`to_dict` for the layout."""

    problem: str
    variables: list[dict]
    verdict: str
    lower: float | None
    upper: float | None
    upper_source: str | None
    witnesses: dict[str, dict | None]
    errors: list[dict]
    sizes: dict
    solver: dict[str, dict | None]
    refinement: list[dict] = field(default_factory=list)
    oracle: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_result(cls, res: IntervalResult, notes: list[str] | None = None) -> "BoundReport":
        R = res.reformulation
        notes = list(notes or [])
        fixed = [v.name for v in res.program.variables if v.is_fixed]
        if fixed:
            notes.append(f"fixed variables substituted as constants: {', '.join(fixed)}")
        if res.verdict == "lower-only":
            notes.append("no feasible point was found; this does not prove the problem infeasible")
        timings = {"total": res.wall_time}
        if res.lower_outcome:
            timings["lower_program"] = res.lower_outcome.wall_time
        if res.upper_outcome:
            timings["upper_program"] = res.upper_outcome.wall_time
        for step in res.refinement_trace:
            timings[f"refinement_{step.round}"] = step.outcome.wall_time
        return cls(
            problem=res.program.name,
            variables=variable_table(res.program, R),
            verdict=res.verdict,
            lower=_f(res.lower),
            upper=_f(res.upper),
            upper_source=res.upper_source,
            witnesses={"lower": _witness(res.witness_lower), "upper": _witness(res.witness_upper)},
            errors=error_table(R),
            sizes=size_table(R),
            solver={"lower_program": _outcome(res.lower_outcome), "upper_program": _outcome(res.upper_outcome)},
            refinement=[_refinement(s) for s in res.refinement_trace],
            oracle=[
                {
                    "model": c.model,
                    "solver": [c.solver_status, _f(c.solver_value)],
                    "oracle": [c.oracle_status, _f(c.oracle_value)],
                    "agree": c.agree,
                }
                for c in res.oracle_checks
            ],
            notes=notes,
            timings=timings,
        )

    def to_dict(self, meta: bool = True) -> dict:
        d: dict[str, Any] = {"schema": SCHEMA, "mode": "bound", "problem": self.problem, "verdict": self.verdict}
        if self.verdict != "infeasible-proven":
            d["interval"] = [self.lower, self.upper]
            d["upper_source"] = self.upper_source
        d["variables"] = self.variables
        d["witnesses"] = self.witnesses
        d["errors"] = self.errors
        d["model"] = self.sizes
        d["solver"] = self.solver
        if self.refinement:
            d["refinement"] = self.refinement
        if self.oracle:
            d["oracle"] = self.oracle
        d["notes"] = self.notes
        if meta:
            d["meta"] = _meta(self.timings)
        return d


def _meta(timings: Mapping[str, float] | None = None) -> dict:
    from . import __version__

    return {
        "version": __version__,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "wall_time": {k: round(v, 6) for k, v in (timings or {}).items()},
    }


def tau_report(pp: PolynomialProgram, R: Reformulation, tr: TauResult, meta: bool = True) -> dict:
    d = {
        "schema": SCHEMA,
        "mode": "tau",
        "problem": pp.name,
        "status": tr.status,
        "value": _f(tr.value),
        "interval": [_f(v) for v in tr.interval] if tr.interval else None,
        "tau": tr.tau,
        "tau_per_constraint": tr.tau_per_constraint,
        "x": {k: _f(v) for k, v in tr.x.items()} if tr.x else None,
        "variables": variable_table(pp, R),
        "errors": error_table(R),
        "model": size_table(R),
        "solver": _outcome(tr.outcome),
        "notes": [tr.note] if tr.note else [],
    }
    if meta:
        d["meta"] = _meta({"solve": tr.outcome.wall_time} if tr.outcome else None)
    return d


def reformulation_report(pp: PolynomialProgram, R: Reformulation, exports: list[str], meta: bool = True) -> dict:
    d = {
        "schema": SCHEMA,
        "mode": "reformulate-only",
        "problem": pp.name,
        "variables": variable_table(pp, R),
        "errors": error_table(R),
        "model": size_table(R),
        "exports": exports,
    }
    if meta:
        d["meta"] = _meta()
    return d


def write_report(report: BoundReport | Mapping, fmt: str = "text", meta: bool = True) -> bytes:
    """Serialize a report; the output depends only on its content (and ``meta``)."""
    d = report.to_dict(meta) if isinstance(report, BoundReport) else dict(report)
    if not meta:
        d.pop("meta", None)
    if fmt == "json":
        return (json.dumps(d, indent=2, allow_nan=False) + "\n").encode("utf-8")
    if fmt == "text":
        return _text(d).encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def _num(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _text(d: dict) -> str:
    lines = [f"problem {d['problem']} ({d['mode']})"]
    if d["mode"] == "bound":
        lines.append(f"verdict: {d['verdict']}")
        if "interval" in d:
            lo, hi = d["interval"]
            lines.append(f"interval: [{_num(lo)}, {_num(hi)}]" + (f"  (upper from {d['upper_source']})" if hi is not None else ""))
    elif d["mode"] == "tau":
        lines.append(f"status: {d['status']}")
        lines.append(f"tau: {_num(d['tau'])}  per constraint: {', '.join(_num(t) for t in d['tau_per_constraint']) or '-'}")
        if d["interval"]:
            lines.append(f"objective at solution in: [{_num(d['interval'][0])}, {_num(d['interval'][1])}]")
    lines.append("")
    lines.append("variable  kind        lower        upper  sigma        kappa")
    for v in d["variables"]:
        lines.append(
            f"{v['name']:<8}  {v['kind']:<10} {_num(v['lower']):>6} {_num(v['upper']):>12}  {v['sigma']:>5}  {_num(v['kappa']):>11}"
        )
    lines.append("")
    lines.append("error bounds: " + "; ".join(f"{e['polynomial']} [{_num(e['errlb'])}, {_num(e['errub'])}]" for e in d["errors"]))
    m = d["model"]
    lines.append(
        f"model: phi={m['phi']} psi={m['psi']} rho={m['rho']} t={m['t']} d={m['d']} "
        f"(before sharing psi={m['psi_before_sharing']} rho={m['rho_before_sharing']})"
    )
    for key in ("witnesses",):
        for name, w in (d.get(key) or {}).items():
            if w:
                xs = ", ".join(f"{k}={_num(v)}" for k, v in w["x"].items())
                state = "feasible" if w["feasible"] else "infeasible: " + ", ".join(f"{a} by {_num(b)}" for a, b in w["violations"])
                lines.append(f"{name} witness: ({xs}) f={_num(w['objective'])} [{state}]")
    if d["mode"] == "tau" and d.get("x"):
        lines.append("solution: " + ", ".join(f"{k}={_num(v)}" for k, v in d["x"].items()))
    solver = d.get("solver")
    if isinstance(solver, dict) and "status" in solver:
        solver = {"program": solver}
    for name, s in (solver or {}).items():
        if s:
            lines.append(f"{name}: {s['status']} value={_num(s['value'])} nodes={s['nodes']} lp_iterations={s['lp_iterations']}")
    for step in d.get("refinement", []):
        box = ", ".join(f"{v['name']} in [{_num(v['lower'])}, {_num(v['upper'])}]" for v in step["variables"])
        ks = ", ".join(_num(v["kappa"]) for v in step["variables"])
        up = step["upper_program"]
        lines.append(f"refinement {step['round']} ({step['program']}): {box}; kappa=({ks}); upper program {up['status']} {_num(up['value'])}")
    for chk in d.get("oracle", []):
        lines.append(f"oracle check {chk['model']}: solver {chk['solver']} oracle {chk['oracle']} agree={_num(chk['agree'])}")
    for e in d.get("exports", []):
        lines.append(f"exported: {e}")
    for n in d.get("notes", []):
        lines.append(f"note: {n}")
    if "meta" in d:
        lines.append(f"version {d['meta']['version']}, created {d['meta']['created']}")
    return "\n".join(lines) + "\n"


__all__ = ["SCHEMA", "BoundReport", "write_report", "tau_report", "reformulation_report", "variable_table"]
