"""Branch-and-bound over binary variables, plus an exhaustive oracle.

Nodes are explored best-bound first.  The branching binary maximizes its
fractionality times its relative weight in the binary expansion (its share
of the variable's range), so high-order bits are split before low-order
ones; ties go to the lowest column.  ``branching="fractional"`` drops the
weights.  A node's LP solution is also rounded and re-solved with the
binaries fixed, which is the only primal heuristic.
"""

from __future__ import annotations

import heapq
import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import INT_TOL, MilpModel
from .simplex import LpOutcome, solve_lp

ORACLE_MAX_BINARIES = 25


@dataclass
class MilpOutcome:
    """Result of a mixed binary solve.

    ``status`` is ``"optimal"`` (proven within ``abs_gap``), ``"infeasible"``,
    ``"feasible"`` (a limit stopped the search with an incumbent; ``gap`` > 0)
    or ``"undecided"`` (a limit stopped the search before any incumbent).
    """

    status: str
    value: float | None = None
    point: dict[str, float] | None = None
    nodes: int = 0
    lp_iterations: int = 0
    gap: float = 0.0
    bound: float | None = None
    wall_time: float = 0.0
    trace: list[tuple[int, float, float]] = field(default_factory=list, repr=False)

    @property
    def has_solution(self) -> bool:
        return self.point is not None


def _fix_all(model: MilpModel, pattern) -> dict[int, tuple[float, float]]:
    return {j: (float(v), float(v)) for j, v in enumerate(pattern)}


class _Search:
    def __init__(self, model: MilpModel, abs_gap: float):
        self.model = model
        self.nb = model.n_binaries
        self.abs_gap = abs_gap
        self.best_value = np.inf
        self.best_x: np.ndarray | None = None
        self.iterations = 0
        self.seen_patterns: set[bytes] = set()

    def lp(self, fixings) -> LpOutcome:
        out = solve_lp(self.model, fixings)
        self.iterations += out.iterations
        return out

    def offer(self, out: LpOutcome) -> None:
        if out.optimal and out.value < self.best_value:
            self.best_value = out.value
            self.best_x = out.x.copy()

    def try_rounding(self, x: np.ndarray) -> None:
        pattern = np.round(x[: self.nb])
        key = pattern.astype(np.int8).tobytes()
        if key in self.seen_patterns:
            return
        self.seen_patterns.add(key)
        self.offer(self.lp(_fix_all(self.model, pattern)))


def solve_milp(
    model: MilpModel,
    abs_gap: float = 1e-6,
    node_limit: int | None = None,
    time_limit: float | None = None,
    threads: int = 1,
    branching: str = "weighted",
) -> MilpOutcome:
    """Solve ``model`` to global optimality over its binaries.

    With ``threads > 1`` up to that many open nodes are solved concurrently;
    results are merged in node order so the returned optimum does not depend
    on scheduling.
    """
    start = time.perf_counter()
    S = _Search(model, abs_gap)
    nb = S.nb
    counter = itertools.count()
    root: dict[int, tuple[float, float]] = {}
    heap: list = [(-np.inf, next(counter), root)]
    nodes = 0
    trace = []
    limit_hit = False
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    if branching not in ("weighted", "fractional"):
        raise ValueError(f"unknown branching rule {branching!r}")
    weights = _branch_weights(model) if branching == "weighted" else np.ones(nb)

    def process(fix, out: LpOutcome):
        if not out.optimal:
            return
        if out.value >= S.best_value - abs_gap:
            return
        xb = out.x[:nb]
        frac = np.abs(xb - np.round(xb))
        if nb == 0 or frac.max() <= INT_TOL:
            if nb:
                # clean the binaries and re-solve the continuous part
                S.try_rounding(out.x)
            else:
                S.offer(out)
            return
        S.try_rounding(out.x)
        score = np.where(frac > INT_TOL, weights * frac, -1.0)
        j = int(np.argmax(score))  # first maximum -> lowest column on ties
        for v in (0.0, 1.0):
            child = dict(fix)
            child[j] = (v, v)
            heapq.heappush(heap, (out.value, next(counter), child))

    try:
        while heap:
            if heap[0][0] >= S.best_value - abs_gap:
                heap.clear()
                break
            if (node_limit is not None and nodes >= node_limit) or (
                time_limit is not None and time.perf_counter() - start > time_limit
            ):
                limit_hit = True
                break
            batch = [heapq.heappop(heap) for _ in range(min(threads, len(heap)))]
            batch = [b for b in batch if b[0] < S.best_value - abs_gap]
            fixes = [b[2] for b in batch]
            if pool is not None and len(fixes) > 1:
                outs = list(pool.map(S.lp, fixes))
            else:
                outs = [S.lp(f) for f in fixes]
            for fix, out in zip(fixes, outs):
                nodes += 1
                process(fix, out)
            trace.append((nodes, _best_bound(heap, S.best_value), S.best_value))
    finally:
        if pool is not None:
            pool.shutdown()

    elapsed = time.perf_counter() - start
    open_bound = _best_bound(heap, S.best_value)
    if S.best_x is None:
        status = "undecided" if limit_hit else "infeasible"
        return MilpOutcome(status, nodes=nodes, lp_iterations=S.iterations, bound=None if not limit_hit else open_bound,
                           wall_time=elapsed, trace=trace)
    gap = max(0.0, S.best_value - open_bound) if limit_hit and heap else 0.0
    status = "feasible" if gap > abs_gap else "optimal"
    point = dict(zip(model.variables, map(float, S.best_x)))
    for name in model.binaries:
        point[name] = float(round(point[name]))
    return MilpOutcome(status, float(S.best_value), point, nodes, S.iterations, gap,
                       min(open_bound, S.best_value), elapsed, trace)


def _branch_weights(model: MilpModel) -> np.ndarray:
    """Relative span of each binary: its expansion weight over the variable range."""
    R = model.reformulation
    if R is None:
        return np.ones(model.n_binaries)
    w = {}
    for e in R.expansions.values():
        span = e.beta - e.alpha
        for j, u in enumerate(e.units, start=1):
            w[u] = e.weight(j) / span if span > 0 else 1.0
    return np.array([w.get(u, 1.0) for u in model.binaries])


def _best_bound(heap, incumbent: float) -> float:
    return min([h[0] for h in heap] + [incumbent]) if heap else incumbent


def enumerate_oracle(model: MilpModel) -> MilpOutcome:
    """Exact reference answer: try every binary pattern.

    Lifted models are reduced per pattern (unit products become fixed
    multiples of remainders) and the small continuous problem is solved by
    enumerating vertices; other models fall back to one LP per pattern.
    """
    nb = model.n_binaries
    if nb > ORACLE_MAX_BINARIES:
        raise ValueError(f"{nb} binaries is too many to enumerate (limit {ORACLE_MAX_BINARIES})")
    start = time.perf_counter()
    if model.reformulation is not None:
        from .oracle import lifted_oracle

        res = lifted_oracle(model)
        if res is not None:
            res.wall_time = time.perf_counter() - start
            return res
    best_val, best_x, iters = np.inf, None, 0
    for pattern in itertools.product((0.0, 1.0), repeat=nb):
        out = solve_lp(model, _fix_all(model, pattern))
        iters += out.iterations
        if out.optimal and out.value < best_val:
            best_val, best_x = out.value, out.x
    elapsed = time.perf_counter() - start
    if best_x is None:
        return MilpOutcome("infeasible", nodes=2**nb, lp_iterations=iters, wall_time=elapsed)
    return MilpOutcome("optimal", float(best_val), dict(zip(model.variables, map(float, best_x))), 2**nb, iters,
                       0.0, float(best_val), elapsed)
