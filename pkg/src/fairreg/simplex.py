"""Dense two-phase tableau simplex for small linear programs.

Solves ``min c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq`` and
``x >= 0``. Intended for desk-scale problems (a few hundred rows).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None
    fun: float | None
    iterations: int

    @property
    def success(self) -> bool:
        return self.status == OPTIMAL


def _pivot(T, r, s):
    T[r] /= T[r, s]
    col = T[:, s].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T, basis, allowed, tol, max_iter, start_iter):
    """Iterate on tableau ``T`` whose last row holds reduced costs and ``-z``."""
    m = T.shape[0] - 1
    it = start_iter
    best = T[-1, -1]
    stall = 0
    while True:
        if it >= max_iter:
            return ITERATION_LIMIT, it
        r_costs = T[-1, :-1]
        cand = np.flatnonzero((r_costs < -tol) & allowed)
        if cand.size == 0:
            return OPTIMAL, it
        if stall > 50:
            s = int(cand[0])  # Bland's rule once progress stalls
        else:
            s = int(cand[np.argmin(r_costs[cand])])
        col = T[:m, s]
        pos = np.flatnonzero(col > tol)
        if pos.size == 0:
            return UNBOUNDED, it
        ratios = T[pos, -1] / col[pos]
        rmin = ratios.min()
        ties = pos[ratios <= rmin + tol * max(1.0, abs(rmin))]
        r = int(ties[np.argmin([basis[i] for i in ties])])
        _pivot(T, r, s)
        basis[r] = s
        it += 1
        # -z grows as z falls
        if T[-1, -1] > best + tol:
            best = T[-1, -1]
            stall = 0
        else:
            stall += 1


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, tol=1e-9, max_iter=100_000) -> LPResult:
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.shape[0]
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).reshape(-1)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).reshape(-1)
    m1, m2 = A_ub.shape[0], A_eq.shape[0]
    m = m1 + m2
    if m == 0:
        if np.any(c < -tol):
            return LPResult(UNBOUNDED, None, None, 0)
        return LPResult(OPTIMAL, np.zeros(n), 0.0, 0)

    A = np.zeros((m, n + m1))
    A[:m1, :n] = A_ub
    A[:m1, n:] = np.eye(m1)
    A[m1:, :n] = A_eq
    b = np.concatenate([b_ub, b_eq])
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    basis = [-1] * m
    for i in range(m1):
        if not neg[i]:
            basis[i] = n + i
    need = [i for i in range(m) if basis[i] < 0]
    n_art = len(need)
    total = n + m1 + n_art
    T = np.zeros((m + 1, total + 1))
    T[:m, : n + m1] = A
    T[:m, -1] = b
    for k, i in enumerate(need):
        T[i, n + m1 + k] = 1.0
        basis[i] = n + m1 + k

    # phase 1: minimise the sum of artificials
    is_art = np.zeros(total, dtype=bool)
    is_art[n + m1:] = True
    T[-1, :-1] = is_art.astype(float)
    for i in need:
        T[-1] -= T[i]
    status, it = _run(T, basis, np.ones(total, dtype=bool), tol, max_iter, 0)
    if status == ITERATION_LIMIT:
        return LPResult(status, None, None, it)
    if -T[-1, -1] > tol * max(1.0, np.abs(b).max()) * 10:
        return LPResult(INFEASIBLE, None, None, it)

    # drive remaining artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= n + m1:
            row = T[r, : n + m1]
            nz = np.flatnonzero(np.abs(row) > tol)
            if nz.size == 0:
                continue
            s = int(nz[0])
            _pivot(T, r, s)
            basis[r] = s
        keep.append(r)
    T = np.vstack([T[keep], T[-1:]])
    basis = [basis[r] for r in keep]
    T = np.delete(T, np.arange(n + m1, total), axis=1)
    m = len(keep)

    # phase 2
    cost = np.concatenate([c, np.zeros(m1)])
    T[-1, :] = 0.0
    T[-1, :-1] = cost
    for r in range(m):
        if cost[basis[r]] != 0.0:
            T[-1] -= cost[basis[r]] * T[r]
    status, it = _run(T, basis, np.ones(n + m1, dtype=bool), tol, max_iter, it)
    if status != OPTIMAL:
        return LPResult(status, None, None, it)
    x = np.zeros(n + m1)
    for r in range(m):
        x[basis[r]] = T[r, -1]
    x = np.maximum(x[:n], 0.0)
    return LPResult(OPTIMAL, x, float(c @ x), it)
