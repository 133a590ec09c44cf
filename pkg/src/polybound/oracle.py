"""Exhaustive reference solver for lifted models.

Once every unit variable is fixed, each unit product is either a constant
(no remainder) or a known 0/1 multiple of a single remainder, and its
product constraints hold automatically.  What is left is a linear program
over at most a handful of remainders in the unit box, which is solved here
by enumerating the vertices of the box cut by the remaining rows.  Nothing
in this module calls the simplex code, so it serves as an independent check
of it.

All ``2**phi`` patterns are processed in vectorized chunks.  Patterns whose
best corner of the remainder box is already worse than the incumbent, or
that violate a row at every corner, are dropped before any vertex is
computed.
"""

from __future__ import annotations

import itertools

import numpy as np

from .model import MilpModel
from .reformulate import product_constraints

#: Largest remainder count handled by vertex enumeration.
MAX_REMAINDERS = 5
#: Feasibility tolerance on rows, relative to the largest coefficient in the row.
ROW_TOL = 1e-7
CHUNK = 1 << 14


def lifted_oracle(model: MilpModel):
    """Global optimum of a lifted model by pattern and vertex enumeration.

    Returns ``None`` when the model does not carry reformulation metadata or
    has too many remainders, so the caller can fall back to solving an LP per
    pattern.
    """
    from .bnb import MilpOutcome

    R = model.reformulation
    if R is None:
        return None
    rems = R.remainders
    nr = len(rems)
    if nr > MAX_REMAINDERS:
        return None
    arr = model.arrays
    col = model.column
    nb = model.n_binaries
    n_prod_rows = sum(len(product_constraints(up)) for up in R.registry)
    A = arr.A[n_prod_rows:]
    b = arr.b[n_prod_rows:]
    sense = arr.sense[n_prod_rows:]
    # every row as "lhs <= rhs"; equalities contribute both directions
    G, h = [], []
    for i in range(len(b)):
        if sense[i] in ("<=", "=="):
            G.append(A[i])
            h.append(b[i])
        if sense[i] in (">=", "=="):
            G.append(-A[i])
            h.append(-b[i])
    G = np.array(G).reshape(-1, A.shape[1])
    h = np.array(h)
    tol = ROW_TOL * np.maximum(1.0, np.abs(G).max(axis=1) if len(G) else 1.0)

    rcol = np.array([col[r] for r in rems], dtype=int)
    products = list(R.registry)
    ycol = np.array([col[p.name] for p in products], dtype=int)
    y_units = [np.array([col[u] for u in p.units], dtype=int) for p in products]
    y_rem = [rems.index(p.remainder) if p.remainder else -1 for p in products]

    def reduce(vec_rows: np.ndarray, U: np.ndarray, prods: np.ndarray):
        """Split ``vec_rows @ w`` into pattern constants and remainder slopes."""
        const = U @ vec_rows[:, :nb].T  # (P, rows)
        slope = np.broadcast_to(vec_rows[:, rcol], (U.shape[0],) + vec_rows[:, rcol].shape).copy()
        for k in range(len(products)):
            coef = vec_rows[:, ycol[k]]
            if not coef.any():
                continue
            if y_rem[k] < 0:
                const += prods[:, k : k + 1] * coef
            else:
                slope[:, :, y_rem[k]] += prods[:, k : k + 1] * coef
        return const, slope

    c_rows = arr.c[None, :]
    best_val = np.inf
    best = None
    total = 1 << nb
    shifts = np.arange(nb, dtype=np.int64)
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(start + CHUNK, total), dtype=np.int64)
        U = ((idx[:, None] >> shifts) & 1).astype(float)
        prods = np.ones((len(idx), len(products)))
        for k, cols in enumerate(y_units):
            prods[:, k] = U[:, cols].prod(axis=1) if len(cols) else 1.0
        oc, os_ = reduce(c_rows, U, prods)
        oc, os_ = oc[:, 0] + arr.c0, os_[:, 0, :]
        gc, gs = reduce(G, U, prods)
        # cheapest corner of the box for the objective and for every row
        obj_floor = oc + np.minimum(os_, 0.0).sum(axis=1)
        row_floor = gc + np.minimum(gs, 0.0).sum(axis=2)
        alive = (obj_floor < best_val) & np.all(row_floor <= h + tol, axis=1)
        if not alive.any():
            continue
        sel = np.flatnonzero(alive)
        val, r = _vertex_min(oc[sel], os_[sel], gc[sel], gs[sel], h, tol)
        k = int(np.argmin(val))
        if val[k] < best_val:
            best_val = float(val[k])
            p = sel[k]
            best = (U[p], r[k], prods[p])

    if best is None:
        return MilpOutcome("infeasible", nodes=total)
    u, r, pr = best
    w = dict(zip(model.binaries, map(float, u)))
    w.update(zip(rems, map(float, r)))
    for k, p in enumerate(products):
        w[p.name] = float(pr[k] * (r[y_rem[k]] if y_rem[k] >= 0 else 1.0))
    point = {v: w[v] for v in model.variables}
    return MilpOutcome("optimal", best_val, point, total, 0, 0.0, best_val)


def _vertex_min(oc, os_, gc, gs, h, tol):
    """Minimum of ``oc + os_ @ r`` over ``{r in [0,1]^nr : gc + gs @ r <= h}`` per pattern.

    Infeasible patterns get ``inf``.
    """
    P, nr = os_.shape
    if nr == 0:
        ok = np.all(gc <= h + tol, axis=1)
        return np.where(ok, oc, np.inf), np.zeros((P, 0))
    m = gs.shape[1]
    # hyperplanes: rows (a . r = h - c) then box faces r_k = 0 and r_k = 1
    planes = list(range(m)) + [("lo", k) for k in range(nr)] + [("hi", k) for k in range(nr)]
    best_val = np.full(P, np.inf)
    best_r = np.zeros((P, nr))
    eye = np.eye(nr)
    for combo in itertools.combinations(planes, nr):
        M = np.empty((P, nr, nr))
        rhs = np.empty((P, nr))
        for t, pl in enumerate(combo):
            if isinstance(pl, tuple):
                M[:, t, :] = eye[pl[1]]
                rhs[:, t] = 0.0 if pl[0] == "lo" else 1.0
            else:
                M[:, t, :] = gs[:, pl, :]
                rhs[:, t] = h[pl] - gc[:, pl]
        det = np.linalg.det(M)
        good = np.abs(det) > 1e-10 * np.linalg.norm(M, axis=2).prod(axis=1)
        if not good.any():
            continue
        gi = np.flatnonzero(good)
        r = np.linalg.solve(M[gi], rhs[gi][..., None])[..., 0]
        inbox = np.all((r >= -1e-9) & (r <= 1 + 1e-9), axis=1)
        r = np.clip(r, 0.0, 1.0)
        lhs = gc[gi] + np.einsum("pmk,pk->pm", gs[gi], r)
        feas = inbox & np.all(lhs <= h + tol, axis=1)
        val = oc[gi] + np.einsum("pk,pk->p", os_[gi], r)
        val = np.where(feas, val, np.inf)
        better = val < best_val[gi]
        upd = gi[better]
        best_val[upd] = val[better]
        best_r[upd] = r[better]
    return best_val, best_r
