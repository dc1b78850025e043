"""Weighted Euclidean projection onto the convex hull of finitely many points.

The objective is ``||lam @ V - x||_w^2`` over the probability simplex, with
``w`` the (positive) entry weights. Small hulls (at most ``exact_limit``
vertices) are solved by face enumeration; larger ones by Frank-Wolfe with
away steps, followed by Wolfe's min-norm-point corrections on the active set
so that points inside the hull come back with a residual at rounding level.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

ACTIVE_TOL = 1e-14


@dataclass
class Projection:
    weights: np.ndarray
    point: np.ndarray
    sq_dist: float
    gap: float
    iterations: int
    method: str


def _sqdist(y, x, w):
    r = y - x
    return float(np.dot(w * r, r))


def affine_minimizer(V, x, w):
    """Barycentric weights (summing to 1) of the closest point of aff(V) to x."""
    if V.shape[0] == 1:
        return np.ones(1)
    sw = np.sqrt(w)
    D = (V[1:] - V[0]).T * sw[:, None]
    rhs = (x - V[0]) * sw
    t, *_ = np.linalg.lstsq(D, rhs, rcond=None)
    return np.concatenate([[1.0 - t.sum()], t])


def _exact(V, x, w):
    m = V.shape[0]
    best = None
    for size in range(1, m + 1):
        for S in combinations(range(m), size):
            mu = affine_minimizer(V[list(S)], x, w)
            if np.any(mu < -1e-12):
                continue
            mu = np.clip(mu, 0.0, None)
            mu /= mu.sum()
            lam = np.zeros(m)
            lam[list(S)] = mu
            y = lam @ V
            val = _sqdist(y, x, w)
            if best is None or val < best[0] - 1e-15 * (1.0 + val):
                best = (val, lam, y)
    val, lam, y = best
    g = w * (y - x)
    gap = float(g @ y - (V @ g).min())
    return Projection(lam, y, val, max(gap, 0.0), 0, "exact")


def _frank_wolfe(V, x, w, max_iter, gap_tol):
    m = V.shape[0]
    lam = np.zeros(m)
    # start from the vertex closest to x
    start = int(np.argmin([_sqdist(v, x, w) for v in V]))
    lam[start] = 1.0
    y = V[start].copy()
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        g = w * (y - x)
        scores = V @ g
        s = int(np.argmin(scores))
        gy = float(g @ y)
        gap = gy - scores[s]
        if gap <= gap_tol:
            break
        active = np.flatnonzero(lam > 0)
        a = active[np.argmax(scores[active])]
        away_gap = scores[a] - gy
        if gap >= away_gap:
            d = V[s] - y
            gmax = 1.0
            fw_step = True
        else:
            d = y - V[a]
            gmax = lam[a] / (1.0 - lam[a]) if lam[a] < 1.0 else np.inf
            fw_step = False
        dd = float(np.dot(w * d, d))
        if dd <= 0:
            break
        step = min(gmax, -float(g @ d) / dd)
        if step <= 0:
            break
        if fw_step:
            lam *= 1.0 - step
            lam[s] += step
        else:
            lam *= 1.0 + step
            lam[a] -= step
            if step == gmax:
                lam[a] = 0.0
        lam[lam < ACTIVE_TOL] = 0.0
        lam /= lam.sum()
        y = lam @ V
    return lam, y, float(max(gap, 0.0)), it


def _wolfe(V, x, w, lam, max_rounds=100):
    """Min-norm-point corrections starting from a feasible ``lam``."""
    m = V.shape[0]
    lam = lam.copy()
    S = [int(k) for k in np.flatnonzero(lam > ACTIVE_TOL)]
    scale = 1.0 + float(np.dot(w * x, x)) + float(np.max(np.sum(w * V * V, axis=1)))
    for _ in range(max_rounds):
        y = lam @ V
        g = w * (y - x)
        scores = V @ g
        j = int(np.argmin(scores))
        if float(g @ y) - scores[j] <= 1e-15 * scale:
            break
        if j not in S:
            S.append(j)
        for _minor in range(m + 1):
            mu = affine_minimizer(V[S], x, w)
            cur = lam[S]
            if np.all(mu > ACTIVE_TOL):
                lam[:] = 0.0
                lam[S] = mu
                break
            neg = np.flatnonzero((mu <= ACTIVE_TOL) & (cur - mu > 0))
            if neg.size == 0:
                lam[:] = 0.0
                lam[S] = np.clip(mu, 0.0, None) / np.clip(mu, 0.0, None).sum()
                break
            theta = min(1.0, float(np.min(cur[neg] / (cur[neg] - mu[neg]))))
            new = cur + theta * (mu - cur)
            new[new <= ACTIVE_TOL] = 0.0
            lam[:] = 0.0
            lam[S] = new
            S = [k for k in S if lam[k] > 0]
            lam /= lam.sum()
        else:
            break
    return lam


def project_hull(V, x, w, max_iter=10_000, gap_tol=1e-10, exact_limit=3):
    V = np.atleast_2d(np.asarray(V, dtype=float))
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if V.shape[0] <= exact_limit:
        return _exact(V, x, w)
    lam, y, gap, it = _frank_wolfe(V, x, w, max_iter, gap_tol)
    val = _sqdist(y, x, w)
    lam2 = _wolfe(V, x, w, lam)
    y2 = lam2 @ V
    val2 = _sqdist(y2, x, w)
    method = "frank-wolfe"
    if val2 <= val:
        lam, y, val = lam2, y2, val2
        method = "frank-wolfe+wolfe"
    g = w * (y - x)
    gap = float(g @ y - (V @ g).min())
    return Projection(lam, y, val, max(gap, 0.0), it, method)
