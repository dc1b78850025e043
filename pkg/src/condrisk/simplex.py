"""Dense two-phase simplex with Bland's rule, for the small LPs of the convex toolkit.

Solves ``min c @ x  s.t.  A_ub @ x <= b_ub,  A_eq @ x == b_eq,  x >= 0``.
Free variables are the caller's job (split into positive and negative parts).
"""

from dataclasses import dataclass

import numpy as np

from .errors import LPFailure

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray = None
    fun: float = None
    iterations: int = 0

    @property
    def ok(self):
        return self.status == "optimal"


def _pivot(T, row, col):
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _iterate(T, basis, allowed, max_iter):
    """Run simplex pivots on tableau ``T`` (objective in the last row)."""
    m = T.shape[0] - 1
    for it in range(max_iter):
        reduced = T[-1, :-1]
        candidates = np.flatnonzero((reduced < -PIVOT_TOL) & allowed)
        if candidates.size == 0:
            return "optimal", it
        col = candidates[0]
        column = T[:m, col]
        positive = column > PIVOT_TOL
        if not positive.any():
            return "unbounded", it
        ratios = np.full(m, np.inf)
        ratios[positive] = T[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12 * max(1.0, abs(best)))
        row = min(ties, key=lambda r: basis[r])
        _pivot(T, row, col)
        basis[row] = col
    raise LPFailure(f"simplex did not terminate within {max_iter} pivots")


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter=10000):
    c = np.asarray(c, dtype=float)
    n = c.size
    rows, rhs, slack_sign = [], [], []
    if A_ub is not None and len(A_ub):
        A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
        rows.append(A_ub)
        rhs.append(np.asarray(b_ub, dtype=float))
        slack_sign.append(np.ones(A_ub.shape[0]))
    n_ub = sum(len(s) for s in slack_sign)
    if A_eq is not None and len(A_eq):
        A_eq = np.atleast_2d(np.asarray(A_eq, dtype=float))
        rows.append(A_eq)
        rhs.append(np.asarray(b_eq, dtype=float))
    if not rows:
        if np.any(c < 0):
            return LPResult("unbounded")
        return LPResult("optimal", np.zeros(n), 0.0)
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    m = A.shape[0]
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise LPFailure("non-finite LP data")

    # columns: original | slacks | artificials | rhs
    n_tot = n + n_ub + m
    T = np.zeros((m + 1, n_tot + 1))
    T[:m, :n] = A
    T[np.arange(n_ub), n + np.arange(n_ub)] = 1.0
    T[:m, -1] = b
    neg = T[:m, -1] < 0
    T[:m][neg] *= -1.0
    T[np.arange(m), n + n_ub + np.arange(m)] = 1.0
    basis = list(range(n + n_ub, n_tot))

    # phase 1: minimise the sum of artificials
    T[-1, :] = -T[:m, :].sum(axis=0)
    T[-1, n + n_ub:n_tot] = 0.0
    allowed = np.ones(n_tot, dtype=bool)
    _, it1 = _iterate(T, basis, allowed, max_iter)
    scale = 1.0 + np.abs(b).max()
    if -T[-1, -1] > FEAS_TOL * scale:
        return LPResult("infeasible", iterations=it1)

    # drive remaining artificials out of the basis, dropping redundant rows
    keep = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] >= n + n_ub:
            row = T[r, : n + n_ub]
            nz = np.flatnonzero(np.abs(row) > 1e-9)
            if nz.size:
                _pivot(T, r, nz[0])
                basis[r] = nz[0]
            else:
                keep[r] = False
    T = np.vstack([T[:m][keep], T[-1:]])
    basis = [bv for bv, k in zip(basis, keep) if k]
    m = T.shape[0] - 1

    # phase 2
    allowed = np.zeros(n_tot, dtype=bool)
    allowed[: n + n_ub] = True
    T[-1, :] = 0.0
    T[-1, :n] = c
    for r, bv in enumerate(basis):
        if T[-1, bv] != 0.0:
            T[-1] -= T[-1, bv] * T[r]
    status, it2 = _iterate(T, basis, allowed, max_iter)
    if status == "unbounded":
        return LPResult("unbounded", iterations=it1 + it2)
    x = np.zeros(n_tot)
    x[basis] = T[:m, -1]
    x = x[:n]
    return LPResult("optimal", x, float(c @ x), it1 + it2)
