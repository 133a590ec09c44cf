"""Interval bounds on the global minimum of a polynomial program.

:func:`bound_global_minimum` solves the optimistic program (its optimum is a
lower bound), checks whether its solution maps to a feasible point (whose
objective is then an upper bound), and otherwise solves the pessimistic
program, optionally on a box focused around the optimistic solution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping

from .bnb import MilpOutcome, enumerate_oracle, solve_milp
from .model import MilpModel, build_linearized_program, build_lower_program, build_upper_program
from .poly import FEAS_TOL, PolynomialProgram, ProgramError, check_feasibility, evaluate, normalize_program
from .reformulate import ReformParams, Reformulation, reformulate

BOUNDED = "bounded"
LOWER_ONLY = "lower-only"
INFEASIBLE = "infeasible-proven"
UNDECIDED = "undecided"

#: Largest binary count for which ``oracle=True`` runs the exhaustive check.
ORACLE_LIMIT = 22


@dataclass
class BoundOptions:
    """Solver settings for :func:`bound_global_minimum`.

    ``upper_slack`` is the right-hand side allowed in the pessimistic
    program's rows; ``None`` means half of ``tol``.
    """

    tol: float = FEAS_TOL
    abs_gap: float = 1e-6
    node_limit: int | None = None
    time_limit: float | None = None
    threads: int = 1
    refine: bool = False
    refine_rounds: int = 1
    upper_slack: float | None = None
    oracle: bool = False

    @property
    def slack(self) -> float:
        return self.tol / 2 if self.upper_slack is None else self.upper_slack

    def milp_kwargs(self) -> dict:
        return dict(abs_gap=self.abs_gap, node_limit=self.node_limit, time_limit=self.time_limit, threads=self.threads)


@dataclass
class Witness:
    """A lifted solution and the original point it maps to."""

    source: str
    lifted: dict[str, float]
    x: dict[str, float]
    objective: float
    model_value: float
    feasible: bool
    violations: list[tuple[str, float]] = field(default_factory=list)


@dataclass
class Refinement:
    """One focused pessimistic solve around a center point."""

    round: int
    center: dict[str, float]
    kappas: dict[str, float]
    program: PolynomialProgram
    reformulation: Reformulation
    outcome: MilpOutcome
    witness: Witness | None = None
    lower_outcome: MilpOutcome | None = None


@dataclass
class OracleCheck:
    model: str
    solver_status: str
    solver_value: float | None
    oracle_status: str
    oracle_value: float | None
    agree: bool


@dataclass
class IntervalResult:
    """Bounds ``lower <= min f <= upper`` together with how they were found."""

    program: PolynomialProgram
    reformulation: Reformulation
    verdict: str
    lower: float | None = None
    upper: float | None = None
    upper_source: str | None = None
    witness_lower: Witness | None = None
    witness_upper: Witness | None = None
    lower_outcome: MilpOutcome | None = None
    upper_outcome: MilpOutcome | None = None
    refinement_trace: list[Refinement] = field(default_factory=list)
    oracle_checks: list[OracleCheck] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def interval(self) -> tuple[float | None, float | None]:
        return self.lower, self.upper

    @property
    def width(self) -> float | None:
        if self.lower is None or self.upper is None:
            return None
        return self.upper - self.lower


@dataclass
class TauResult:
    """Outcome of the single linearized program.

    ``tau_per_constraint[j]`` bounds how far ``g_j`` can exceed zero at any
    point that satisfies the linearized constraint; the interval brackets
    ``f`` at the returned point, not the true minimum.
    """

    status: str
    tau_per_constraint: list[float]
    tau: float
    value: float | None = None
    interval: tuple[float, float] | None = None
    x: dict[str, float] | None = None
    outcome: MilpOutcome | None = None
    note: str = ""
    reformulation: Reformulation | None = field(default=None, repr=False)


def _witness(source: str, pp: PolynomialProgram, model: MilpModel, out: MilpOutcome, tol: float) -> Witness:
    x = model.map_to_original(out.point)
    rep = check_feasibility(pp, x, tol)
    return Witness(
        source,
        dict(out.point),
        {pp.variables[i].name: v for i, v in x.items()},
        evaluate(pp.objective, x, pp.names),
        float(out.value),
        rep.feasible,
        rep.violations,
    )


def _normalized(pp: PolynomialProgram) -> PolynomialProgram:
    return pp if pp.is_normalized() else normalize_program(pp)


def _oracle_check(kind: str, model: MilpModel, out: MilpOutcome, abs_gap: float) -> OracleCheck | None:
    if model.n_binaries > ORACLE_LIMIT:
        return None
    ref = enumerate_oracle(model)
    if out.status in ("optimal", "infeasible") and ref.status == out.status:
        agree = out.status == "infeasible" or abs(ref.value - out.value) <= max(abs_gap, 1e-9 * abs(ref.value))
    else:
        agree = False
    return OracleCheck(kind, out.status, out.value, ref.status, ref.value, agree)


def bound_global_minimum(
    pp: PolynomialProgram,
    params: ReformParams,
    options: BoundOptions | None = None,
) -> IntervalResult:
    """Bracket the global minimum of ``pp``.

    Verdicts: ``bounded`` (both bounds), ``lower-only`` (no feasible point
    was found; this does not prove infeasibility), ``infeasible-proven``
    (the optimistic program is infeasible, so ``pp`` is too) and
    ``undecided`` (a solver limit stopped the optimistic solve; any bounds
    found so far are still reported).
    """
    opts = options or BoundOptions()
    start = time.perf_counter()
    npp = _normalized(pp)
    R = reformulate(npp, params)
    low_model = build_lower_program(npp, R)
    low = solve_milp(low_model, **opts.milp_kwargs())
    res = IntervalResult(npp, R, UNDECIDED, lower_outcome=low)
    if opts.oracle:
        chk = _oracle_check("lower", low_model, low, opts.abs_gap)
        if chk:
            res.oracle_checks.append(chk)

    if low.status == "infeasible":
        res.verdict = INFEASIBLE
        res.wall_time = time.perf_counter() - start
        return res
    if low.status == "optimal":
        res.lower = low.value
    elif low.bound is not None and low.status == "feasible":
        res.lower = low.bound  # still a valid bound: no open node can do better
    if low.point is not None:
        res.witness_lower = _witness("lower", npp, low_model, low, opts.tol)
        if res.witness_lower.feasible:
            _offer_upper(res, res.witness_lower.objective, "x(w-)", res.witness_lower)

    if res.upper is None:
        up_model = build_upper_program(npp, R, slack=opts.slack)
        up = solve_milp(up_model, **opts.milp_kwargs())
        res.upper_outcome = up
        if opts.oracle:
            chk = _oracle_check("upper", up_model, up, opts.abs_gap)
            if chk:
                res.oracle_checks.append(chk)
        if up.point is not None:
            w = _witness("upper", npp, up_model, up, opts.tol)
            # f(x(w+)) <= lub[f](w+), so the point's own value is the tighter bound
            _offer_upper(res, w.objective, "x(w+)", w)

    if res.upper is None and opts.refine and res.witness_lower is not None:
        center = res.witness_lower.x
        expansions = R
        for k in range(1, max(1, opts.refine_rounds) + 1):
            kappas = {e.name: e.kappa for e in expansions.expansions.values()}
            focused, step = refine_focused(npp, center, kappas, expansions, opts, round_no=k, original=npp)
            res.refinement_trace.append(step)
            if step.witness is not None and step.witness.feasible:
                _offer_upper(res, step.witness.objective, f"refinement {k}", step.witness)
                break
            if k == opts.refine_rounds:
                break
            # next round centers on the focused optimistic solution
            fl_model = build_lower_program(focused, step.reformulation)
            fl = solve_milp(fl_model, **opts.milp_kwargs())
            step.lower_outcome = fl
            if fl.point is None:
                break
            center = {focused.variables[i].name: v for i, v in fl_model.map_to_original(fl.point).items()}
            expansions = step.reformulation

    if low.status == "optimal":
        res.verdict = BOUNDED if res.upper is not None else LOWER_ONLY
    if res.lower is not None and res.upper is not None and res.lower > res.upper + 1e-9:
        raise ProgramError(f"lower bound {res.lower} exceeds upper bound {res.upper}; numerical trouble")
    res.wall_time = time.perf_counter() - start
    return res


def _offer_upper(res: IntervalResult, value: float, source: str, witness: Witness) -> None:
    if not witness.feasible:
        return
    if res.upper is None or value < res.upper:
        res.upper = value
        res.upper_source = source
        res.witness_upper = witness


def focused_bounds(pp: PolynomialProgram, center: Mapping[str, float], kappas: Mapping[str, float]) -> dict[int, tuple[float, float]]:
    """``[c - kappa, c + kappa]`` clipped to each variable's box."""
    out = {}
    for i, v in enumerate(pp.variables):
        if v.is_fixed or v.name not in kappas:
            continue
        c, k = center[v.name], kappas[v.name]
        out[i] = (max(v.lower, c - k), min(v.upper, c + k))
    return out


def refine_focused(
    pp: PolynomialProgram,
    center: Mapping[str, float],
    kappas: Mapping[str, float],
    params: ReformParams | Reformulation,
    options: BoundOptions | None = None,
    round_no: int = 1,
    original: PolynomialProgram | None = None,
) -> tuple[PolynomialProgram, Refinement]:
    """Solve the pessimistic program on a box focused around ``center``.

    The focused program keeps every variable's ``sigma``; its error limits
    are re-derived from the narrower ranges.  A feasible solution is checked
    against ``original`` (default ``pp``) and becomes the witness.
    """
    opts = options or BoundOptions()
    npp = _normalized(pp)
    if isinstance(params, Reformulation):
        sigmas = {e.name: e.sigma for e in params.expansions.values()}
    else:
        R0 = reformulate(npp, params)
        sigmas = {e.name: e.sigma for e in R0.expansions.values()}
    bounds = focused_bounds(npp, center, kappas)
    focused = npp.with_bounds(bounds, name=f"{pp.name}.{round_no + 1}")
    keep = {n: s for n, s in sigmas.items() if not focused.variables[focused.index(n)].is_fixed}
    R = reformulate(_normalized(focused), ReformParams(sigma=keep))
    model = build_upper_program(focused, R, slack=opts.slack)
    out = solve_milp(model, **opts.milp_kwargs())
    step = Refinement(round_no, dict(center), dict(kappas), focused, R, out)
    if out.point is not None:
        step.witness = _witness(f"refinement {round_no}", original or npp, model, out, opts.tol)
    return focused, step


def tau_variant(pp: PolynomialProgram, params: ReformParams, options: BoundOptions | None = None) -> TauResult:
    """Solve one program over the plain linearizations.

    With ``z`` its optimum, the objective at the returned point lies in
    ``[z - errub[f], z - errlb[f]]`` and each constraint is violated by at
    most ``tau_j = max(0, -errlb[g_j])``.
    """
    opts = options or BoundOptions()
    npp = _normalized(pp)
    R = reformulate(npp, params)
    taus = [max(0.0, -eb.errlb) for _, eb in R.constraints]
    tau = max(taus, default=0.0)
    model = build_linearized_program(npp, R)
    out = solve_milp(model, **opts.milp_kwargs())
    if out.point is None:
        note = (
            "the linearized program is infeasible; this says nothing about the feasibility of the polynomial program"
            if out.status == "infeasible"
            else "a solver limit stopped the search before a solution was found"
        )
        return TauResult(out.status, taus, tau, outcome=out, note=note, reformulation=R)
    eb = R.objective_error
    x = model.map_to_original(out.point)
    return TauResult(
        out.status,
        taus,
        tau,
        out.value,
        (out.value - eb.errub, out.value - eb.errlb),
        {npp.variables[i].name: v for i, v in x.items()},
        out,
        reformulation=R,
    )


__all__ = [
    "BoundOptions",
    "IntervalResult",
    "TauResult",
    "Witness",
    "Refinement",
    "OracleCheck",
    "bound_global_minimum",
    "refine_focused",
    "focused_bounds",
    "tau_variant",
    "BOUNDED",
    "LOWER_ONLY",
    "INFEASIBLE",
    "UNDECIDED",
]
