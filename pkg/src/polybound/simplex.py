"""Bounded-variable two-phase primal simplex on a dense tableau.

Variables carry their own bounds (no bound rows).  Every row gets a slack
whose bounds encode the row sense; rows whose slack starts out of bounds get
an artificial variable, and phase one drives those to zero.

Pricing is Dantzig's rule, switching to Bland's rule after
``BLAND_AFTER`` iterations so degenerate cycling cannot go on forever.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9
BLAND_AFTER = 5000
MAX_ITER = 200_000

_BASIC, _LOWER, _UPPER, _FREE = 0, 1, 2, 3


class SingularBasisError(RuntimeError):
    """The final basis could not reproduce a consistent solution."""


@dataclass
class LpOutcome:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float | None = None
    x: np.ndarray | None = None
    iterations: int = 0
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def point(self, names) -> dict[str, float]:
        return {k: float(v) for k, v in zip(names, self.x)}


def solve_lp(model, extra_bounds: Mapping | None = None) -> LpOutcome:
    """Solve the LP relaxation of a :class:`~polybound.model.MilpModel`.

    ``extra_bounds`` maps variable names or column indices to ``(lo, hi)``
    and may only tighten the model's bounds.
    """
    arr = model.arrays
    lb, ub = arr.lb, arr.ub
    if extra_bounds:
        lb, ub = lb.copy(), ub.copy()
        for key, (lo, hi) in extra_bounds.items():
            j = model.column[key] if isinstance(key, str) else int(key)
            if lo < arr.lb[j] - 1e-12 or hi > arr.ub[j] + 1e-12 or lo > hi:
                raise ValueError(f"extra bound ({lo}, {hi}) on {model.variables[j]} is not inside the model bounds")
            lb[j], ub[j] = lo, hi
    return solve_arrays(arr.A, arr.b, arr.sense, arr.c, lb, ub, arr.c0)


def solve_arrays(A, b, sense, c, lb, ub, c0: float = 0.0) -> LpOutcome:
    """Minimize ``c @ x + c0`` s.t. ``A x (sense) b``, ``lb <= x <= ub``."""
    A = np.asarray(A, dtype=float)
    m, n = A.shape if A.size else (len(b), len(c))
    A = A.reshape(m, n)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    if np.any(lb > ub):
        return LpOutcome("infeasible")

    # row scaling
    scale = np.abs(A).max(axis=1) if n else np.ones(m)
    scale = np.where(scale > 0, scale, 1.0)
    As = A / scale[:, None]
    bs = b / scale

    slo = np.where(np.isin(sense, ("<=", "==")), 0.0, -np.inf)
    shi = np.where(np.isin(sense, (">=", "==")), 0.0, np.inf)

    x0 = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
    resid = bs - As @ x0 if n else bs.copy()
    s0 = np.clip(resid, slo, shi)
    need_art = np.abs(resid - s0) > FEAS_TOL
    arts = np.flatnonzero(need_art)
    k = len(arts)
    N = n + m + k

    T = np.zeros((m, N))
    T[:, :n] = As
    T[:, n : n + m] = np.eye(m)
    sign = np.ones(m)
    art_sign = np.sign(resid[arts] - s0[arts])
    T[arts, n + m + np.arange(k)] = art_sign
    sign[arts] = art_sign
    T *= sign[:, None]  # B^{-1} of the starting basis is diag(sign)

    lo = np.concatenate([lb, slo, np.zeros(k)])
    hi = np.concatenate([ub, shi, np.full(k, np.inf)])
    x = np.concatenate([x0, s0, np.abs(resid[arts] - s0[arts])])
    state = np.where(np.isfinite(lo), _LOWER, np.where(np.isfinite(hi), _UPPER, _FREE))
    basis = n + np.arange(m)
    basis[arts] = n + m + np.arange(k)
    state[basis] = _BASIC
    # slacks of artificial rows sit nonbasic at the clamped bound
    for i in arts:
        state[n + i] = _LOWER if s0[i] == slo[i] else _UPPER

    solver = _Tableau(T, basis, x, lo, hi, state)
    iters = 0
    if k:
        cost1 = np.zeros(N)
        cost1[n + m :] = 1.0
        status, iters = solver.run(cost1, iters)
        infeas = x[n + m :].sum()
        if infeas > FEAS_TOL * max(1.0, math.sqrt(k)):
            return LpOutcome("infeasible", iterations=iters)
        # artificials may no longer move; basic ones sit at (numerically) zero
        solver.hi[n + m :] = 0.0
        solver.x[n + m :] = 0.0

    cost2 = np.zeros(N)
    cost2[:n] = c
    status, iters = solver.run(cost2, iters)
    if status == "unbounded":
        return LpOutcome("unbounded", iterations=iters)

    solver.refine(bs, n, m)
    xs = solver.x[:n].copy()
    lhs = A @ xs if n else np.zeros(m)
    viol = np.zeros(m)
    le = sense == "<="
    ge = sense == ">="
    eq = sense == "=="
    viol[le] = lhs[le] - b[le]
    viol[ge] = b[ge] - lhs[ge]
    viol[eq] = np.abs(lhs[eq] - b[eq])
    bad = viol > FEAS_TOL * np.maximum(1.0, scale)
    bnd = np.maximum(lb - xs, xs - ub)
    if bad.any() or (bnd > FEAS_TOL).any():
        raise SingularBasisError(
            f"basis lost accuracy: max row violation {viol.max() if m else 0.0:.3g}, "
            f"max bound violation {bnd.max() if n else 0.0:.3g}"
        )
    xs = np.clip(xs, lb, ub)
    d = solver.d
    duals = -d[n : n + m] / scale if m else np.zeros(0)
    return LpOutcome("optimal", float(c @ xs + c0), xs, iters, duals, d[:n].copy())


class _Tableau:
    def __init__(self, T, basis, x, lo, hi, state):
        self.T = T
        self.basis = basis
        self.x = x
        self.lo = lo
        self.hi = hi
        self.state = state
        self.d = np.zeros(T.shape[1])

    def run(self, cost: np.ndarray, iters: int) -> tuple[str, int]:
        T, basis, x, lo, hi, state = self.T, self.basis, self.x, self.lo, self.hi, self.state
        m = T.shape[0]
        d = cost - (cost[basis] @ T if m else 0.0)
        self.d = d
        while True:
            if iters >= MAX_ITER:
                raise SingularBasisError(f"simplex did not converge in {MAX_ITER} iterations")
            movable = hi > lo
            inc = ((state == _LOWER) | (state == _FREE)) & movable & (d < -OPT_TOL)
            dec = ((state == _UPPER) | (state == _FREE)) & movable & (d > OPT_TOL)
            cand = inc | dec
            if not cand.any():
                return "optimal", iters
            if iters < BLAND_AFTER:
                score = np.where(cand, np.abs(d), 0.0)
                j = int(np.argmax(score))
            else:
                j = int(np.flatnonzero(cand)[0])
            direction = 1.0 if inc[j] else -1.0
            col = T[:, j] if m else np.zeros(0)
            rate = -direction * col  # change of each basic variable per unit step
            xb = x[basis]
            lob = lo[basis]
            hib = hi[basis]
            theta = np.full(m, np.inf)
            down = rate < -PIVOT_TOL
            up = rate > PIVOT_TOL
            with np.errstate(invalid="ignore", divide="ignore"):
                theta[down] = (xb[down] - lob[down]) / -rate[down]
                theta[up] = (hib[up] - xb[up]) / rate[up]
            theta = np.maximum(theta, 0.0)
            flip = hi[j] - lo[j]
            r = -1
            t_best = flip
            if m and np.isfinite(theta).any():
                tmin = theta.min()
                if tmin < t_best:
                    # among near-ties prefer the largest pivot element
                    near = np.flatnonzero(theta <= tmin + 1e-12)
                    if iters < BLAND_AFTER:
                        r = int(near[np.argmax(np.abs(col[near]))])
                    else:
                        r = int(near[np.argmin(basis[near])])
                    t_best = theta[r]
            if not np.isfinite(t_best):
                return "unbounded", iters
            iters += 1
            step = direction * t_best
            if m:
                x[basis] = xb + rate * t_best
            x[j] += step
            if r < 0:
                # bound flip, basis unchanged
                if direction > 0:
                    x[j] = hi[j]
                    state[j] = _UPPER
                else:
                    x[j] = lo[j]
                    state[j] = _LOWER
                continue
            leave = basis[r]
            if rate[r] < 0:
                x[leave] = lo[leave]
                state[leave] = _LOWER
            else:
                x[leave] = hi[leave]
                state[leave] = _UPPER
            piv = T[r, j]
            prow = T[r] / piv
            T -= np.outer(col, prow)
            T[r] = prow
            d -= d[j] * prow
            basis[r] = j
            state[j] = _BASIC

    def refine(self, bs: np.ndarray, n: int, m: int) -> None:
        """Recompute basic values from the nonbasic ones (clears drift)."""
        if not m:
            return
        basis, x = self.basis, self.x
        nb = np.ones(len(x), dtype=bool)
        nb[basis] = False
        # T = B^{-1} M, so x_B = B^{-1} b - T_N x_N; B^{-1} b is recovered from the slack block
        binv = self.T[:, n : n + m]
        xb = binv @ bs - self.T[:, nb] @ x[nb]
        x[basis] = xb

