"""Fenchel conjugates, penalty functions and numerical checks of the dual representation.

For built-in measures the optimal dual densities are closed form:
Gibbs density (entropic), capped tail density (AV@R) and point mass
(worst case). Custom measures go through a generic ascent.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .errors import NotAdmissible, NotBounded, NotConvergent, OptimizerFailure, ShapeMismatch, SpaceMismatch
from .lpmod import STRUCT_TOL, DualElement, Position, pair, portfolio_norm
from .randvar import ExtRandVar, RandVar, encode_float
from .risk import avar_losses, evaluate_blocks
from .simplex import linprog

WEAK_TOL = 1e-8
GAP_TOL = 1e-6
RECESSION_TOL = 1e-9


def _check(rho, z):
    if z.space is not rho.f.space:
        raise SpaceMismatch("dual element and measure live on different spaces")
    if z.d != rho.d:
        raise ShapeMismatch(f"measure has d={rho.d}, dual element has d={z.d}")


def _as_dual(z):
    return z if isinstance(z, DualElement) else DualElement(z.space, z.values)


def _xlogx(q):
    out = np.zeros_like(q)
    pos = q > 0
    out[pos] = q[pos] * np.log(q[pos])
    return out


# ---------------------------------------------------------------- conjugate


@dataclass
class AscentOptions:
    max_iter: int = 100_000
    warm_iter: int = 500
    stall_tol: float = 1e-10
    stall_window: int = 50
    box: float = 50.0
    fd_step: float = 1e-6


def _fd_gradient(rho, x, h):
    """d rho / d x_{atom,i}, blockwise values expanded to atoms (local property)."""
    f = rho.f
    base = evaluate_blocks(rho, x)
    grad = np.zeros_like(x.values)
    vals = x.values
    for a in range(vals.shape[0]):
        blk = f.block_of[a]
        for i in range(vals.shape[1]):
            up = vals.copy()
            up[a, i] += h
            dn = vals.copy()
            dn[a, i] -= h
            grad[a, i] = (
                evaluate_blocks(rho, Position(x.space, up))[blk]
                - evaluate_blocks(rho, Position(x.space, dn))[blk]
            ) / (2 * h)
    return base, grad


def _ascent(rho, z, start, opts):
    """Blockwise max of E[X.z|F] - rho(X) over the box |X| <= opts.box by projected supergradient ascent."""
    f = rho.f
    w = f.cond_probs[:, None]
    x = np.clip(start.values.copy(), -opts.box, opts.box)
    best = np.full(f.n_blocks, -np.inf)
    best_x = x.copy()
    last_improve = np.zeros(f.n_blocks, dtype=int)
    it = 0
    for it in range(1, opts.max_iter + 1):
        pos = Position(f.space, x)
        r, g_rho = _fd_gradient(rho, pos, opts.fd_step)
        val = f.collapse(pair(pos, z, f).values) - r
        improved = val > best + opts.stall_tol
        last_improve[improved] = it
        for b in np.flatnonzero(val > best):
            idx = list(f.blocks[b])
            best_x[idx] = x[idx]
        best = np.maximum(best, val)
        if np.all(it - last_improve > opts.stall_window):
            break
        sup = w * z.values - g_rho
        nrm = math.sqrt(float(np.sum(sup * sup)))
        if nrm < 1e-14:
            break
        x = np.clip(x + (opts.box / math.sqrt(it)) * sup / nrm, -opts.box, opts.box)
    return best, Position(f.space, best_x), it


def _polish(rho, z, start, box, fd_step):
    """Quasi-Newton refinement of the ascent result on the box, finite-difference gradients."""
    f = rho.f
    shape = start.values.shape
    wz = f.space.probs[:, None] * z.values

    def neg(v):
        pos = Position(f.space, v.reshape(shape))
        r, g_rho = _fd_gradient(rho, pos, fd_step)
        # sum over blocks of P(B) * (E[X.z|B] - rho_B(X)); the blocks decouple
        val = float(np.sum(wz * pos.values)) - float(np.dot(f.block_probs, r))
        grad = wz - f.block_probs[f.block_of][:, None] * g_rho
        return -val, -grad.ravel()

    res = minimize(neg, start.values.ravel(), jac=True, method="L-BFGS-B",
                   bounds=[(-box, box)] * start.values.size,
                   options={"maxiter": 2000, "ftol": 1e-15, "gtol": 1e-10})
    x = Position(f.space, res.x.reshape(shape))
    val = f.collapse(pair(x, z, f).values) - evaluate_blocks(rho, x)
    return val, x, int(res.nit)


def _boxed_sup(rho, z, start, opts, box):
    # the ascent only warm-starts the quasi-Newton polish
    o = replace(opts, max_iter=min(opts.max_iter, opts.warm_iter), box=box)
    v1, x1, it1 = _ascent(rho, z, start, o)
    v2, x2, it2 = _polish(rho, z, x1, box, opts.fd_step)
    better = v2 >= v1
    x = np.where(better[rho.f.block_of][:, None], x2.values, x1.values)
    return np.maximum(v1, v2), Position(rho.f.space, x), it1 + it2


def _numeric_conjugate(rho, z, start=None, opts=None):
    """Numerical conjugate for custom measures; +inf where doubling the box keeps raising the value."""
    opts = opts or AscentOptions()
    f = rho.f
    start = start if start is not None else Position.zeros(f.space, rho.d)
    v1, x1, it1 = _boxed_sup(rho, z, start, opts, opts.box)
    v2, _, it2 = _boxed_sup(rho, z, x1, opts, 2 * opts.box)
    grows = v2 - v1 > 1e-6 * (1.0 + np.abs(v1))
    return np.where(grows, np.inf, np.maximum(v1, v2)), it1 + it2


def conjugate_blocks(rho, z, opts=None):
    """rho*(z) per block; +inf wherever z is not admissible."""
    _check(rho, z)
    z = _as_dual(z)
    f = rho.f
    adm = z.admissible_blocks(f)
    out = np.full(f.n_blocks, np.inf)
    if rho.kind == "custom":
        if adm.any():
            vals, _ = _numeric_conjugate(rho, z, opts=opts)
            out[adm] = vals[adm]
        return out
    for k, b in enumerate(f.blocks):
        if not adm[k]:
            continue
        zb = z.values[list(b)]
        # sum aggregation: any spread between coordinates is an unbounded direction
        if np.any(np.ptp(zb, axis=1) > STRUCT_TOL):
            continue
        q = -zb.mean(axis=1)
        w = f.cond_probs[list(b)]
        if rho.kind == "entropic":
            out[k] = float(np.dot(w, _xlogx(q))) / rho.gamma[k]
        elif rho.kind == "avar":
            out[k] = 0.0 if np.all(q <= 1.0 / rho.lam[k] + STRUCT_TOL) else np.inf
        else:
            out[k] = 0.0
    return out


def conjugate(rho, z, opts=None):
    """rho*(z) = esssup_X E[X.z|F] - rho(X) as an ExtRandVar."""
    return ExtRandVar.from_blocks(rho.f, conjugate_blocks(rho, z, opts))


# ---------------------------------------------------------------- acceptance-set support


def _recession_unbounded(zb, w):
    """True iff some v with sum_i v_i >= 0 atomwise has E[v.z] > 0 on the block."""
    nb, d = zb.shape
    n = nb * d
    wz = (w[:, None] * zb).ravel()
    # v = u - s, u,s in [0,1]
    c = np.concatenate([-wz, wz])
    rows = []
    for a in range(nb):
        row = np.zeros(2 * n)
        row[a * d:(a + 1) * d] = -1.0
        row[n + a * d:n + (a + 1) * d] = 1.0
        rows.append(row)
    A_ub = np.vstack(rows + [np.eye(2 * n)])
    b_ub = np.concatenate([np.zeros(nb), np.ones(2 * n)])
    res = linprog(c, A_ub=A_ub, b_ub=b_ub)
    if not res.ok:
        raise OptimizerFailure(f"recession LP: {res.status}")
    return -res.fun > RECESSION_TOL


def _support_lp(zb, w, kind, lam=None):
    """sup E[X.z] over the block's acceptance set for worst case / AV@R; +inf if unbounded."""
    nb, d = zb.shape
    n = nb * d
    wz = (w[:, None] * zb).ravel()
    # X = u - s (free); AV@R adds c = c1 - c2 and tail slacks t >= 0
    extra = 0 if kind == "worst_case" else 2 + nb
    nv = 2 * n + extra
    c = np.zeros(nv)
    c[:n] = -wz
    c[n:2 * n] = wz
    rows, rhs = [], []
    for a in range(nb):
        row = np.zeros(nv)
        row[a * d:(a + 1) * d] = -1.0
        row[n + a * d:n + (a + 1) * d] = 1.0
        if kind == "worst_case":
            # -sum_i X_i <= 0
            rows.append(row)
            rhs.append(0.0)
        else:
            # -sum_i X_i - c - t_a <= 0
            row[2 * n] = -1.0
            row[2 * n + 1] = 1.0
            row[2 * n + 2 + a] = -1.0
            rows.append(row)
            rhs.append(0.0)
    if kind == "avar":
        # c + (1/lam) E[t] <= 0
        row = np.zeros(nv)
        row[2 * n] = 1.0
        row[2 * n + 1] = -1.0
        row[2 * n + 2:] = w / lam
        rows.append(row)
        rhs.append(0.0)
    res = linprog(c, A_ub=np.vstack(rows), b_ub=np.array(rhs))
    if res.status == "unbounded":
        return math.inf
    if not res.ok:
        raise OptimizerFailure(f"acceptance LP: {res.status}")
    return -res.fun


def _entropic_support(zb, w, gamma):
    """sup E[X.z] - rho(X) on one block (equal to the acceptance-set support after the cash shift)."""
    nb, d = zb.shape
    bound = 60.0 / gamma + 10.0

    def neg_obj(v):
        X = v.reshape(nb, d)
        s = X.sum(axis=1)
        t = -gamma * s
        m = t.max()
        e = w * np.exp(t - m)
        tot = e.sum()
        rho = (m + math.log(tot)) / gamma
        val = float(np.sum(w[:, None] * X * zb)) - rho
        pi = e / tot
        grad = w[:, None] * zb + pi[:, None]
        return -val, -grad.ravel()

    res = minimize(
        neg_obj,
        np.zeros(nb * d),
        jac=True,
        method="L-BFGS-B",
        bounds=[(-bound, bound)] * (nb * d),
        options={"maxiter": 20_000, "ftol": 1e-16, "gtol": 1e-13, "maxcor": 30},
    )
    if not np.isfinite(res.fun):
        raise OptimizerFailure(f"entropic acceptance optimisation failed: {res.message}")
    return -float(res.fun)


def penalty_from_acceptance(rho, z, opts=None):
    """esssup of E[X.z|F] over the acceptance set, per block, as an ExtRandVar.

    Feasible points are pushed onto the boundary by the cash shift
    X + rho(X) (1/d) sum_i e_i, which turns the constrained problem into
    an unconstrained one for the entropic case.
    """
    _check(rho, z)
    z = _as_dual(z)
    f = rho.f
    adm = z.admissible_blocks(f)
    if not adm.all():
        raise NotAdmissible(f"dual element is not admissible on blocks {np.flatnonzero(~adm).tolist()}")
    if rho.kind == "custom":
        vals, _ = _numeric_conjugate(rho, z, opts=opts)
        return ExtRandVar.from_blocks(f, vals)
    out = np.empty(f.n_blocks)
    for k, b in enumerate(f.blocks):
        idx = list(b)
        zb = z.values[idx]
        w = f.cond_probs[idx]
        if rho.kind == "entropic":
            if _recession_unbounded(zb, w):
                out[k] = math.inf
            else:
                out[k] = _entropic_support(zb, w, rho.gamma[k])
        else:
            lam = None if rho.kind == "worst_case" else rho.lam[k]
            out[k] = _support_lp(zb, w, rho.kind, lam)
    return ExtRandVar.from_blocks(f, out)


# ---------------------------------------------------------------- representation


@dataclass
class DualityReport:
    """rho(x) against the dual value E[x.z*|F] - alpha(z*) at the maximising z*."""

    x: Position
    rho_value: RandVar
    dual_value: RandVar
    gap: RandVar
    argmax_z: DualElement
    iterations: int
    tolerance: float

    @property
    def max_gap(self):
        return float(np.max(np.abs(self.gap.values)))

    @property
    def ok(self):
        return self.max_gap <= self.tolerance and float(np.min(self.gap.values)) >= -WEAK_TOL

    def to_json(self):
        return {
            "rho_value": self.rho_value.to_json(),
            "dual_value": self.dual_value.to_json(),
            "gap": self.gap.to_json(),
            "max_gap": self.max_gap,
            "argmax_z": self.argmax_z.to_json()["values"],
            "iterations": self.iterations,
            "tolerance": self.tolerance,
            "ok": self.ok,
        }


def optimal_density(rho, x):
    """Closed-form maximising density q* per atom (built-in kinds)."""
    f = rho.f
    losses = -x.values.sum(axis=1)
    q = np.zeros(f.space.n)
    for k, b in enumerate(f.blocks):
        idx = list(b)
        w = f.cond_probs[idx]
        lb = losses[idx]
        if rho.kind == "entropic":
            t = rho.gamma[k] * lb
            e = np.exp(t - t.max())
            q[idx] = e / np.dot(w, e)
        elif rho.kind == "avar":
            _, q[idx] = avar_losses(lb, w, rho.lam[k])
        else:
            j = int(np.argmax(lb))
            q[idx[j]] = 1.0 / w[j]
    return q


def _custom_argmax(rho, x, opts):
    """Supergradient of rho at x turned into an admissible dual element."""
    f = rho.f
    _, grad = _fd_gradient(rho, x, opts.fd_step)
    z = grad / f.cond_probs[:, None]
    z = np.minimum(z, 0.0)
    for b in f.blocks:
        idx = list(b)
        w = f.cond_probs[idx]
        for i in range(z.shape[1]):
            m = float(np.dot(w, z[idx, i]))
            if m >= 0:
                z[idx, i] = -1.0
            else:
                z[idx, i] = -z[idx, i] / m
    return DualElement(f.space, z)


def represent(rho, x, tol=GAP_TOL, opts=None):
    """Evaluate both sides of the dual representation at x and report the gap."""
    if x.space is not rho.f.space:
        raise SpaceMismatch("position and measure live on different spaces")
    f = rho.f
    rho_b = evaluate_blocks(rho, x)
    if rho.builtin:
        q = optimal_density(rho, x)
        z = DualElement(f.space, -np.repeat(q[:, None], rho.d, axis=1))
        alpha = conjugate_blocks(rho, z)
        iterations = 0
    else:
        opts = opts or AscentOptions()
        z = _custom_argmax(rho, x, opts)
        alpha, iterations = _numeric_conjugate(rho, z, start=x, opts=opts)
    if not np.all(np.isfinite(alpha)):
        raise OptimizerFailure(f"penalty is infinite at the maximiser on blocks {np.flatnonzero(~np.isfinite(alpha)).tolist()}")
    dual_b = f.collapse(pair(x, z, f).values) - alpha
    return DualityReport(
        x=x,
        rho_value=RandVar.from_blocks(f, rho_b),
        dual_value=RandVar.from_blocks(f, dual_b),
        gap=RandVar.from_blocks(f, rho_b - dual_b),
        argmax_z=z,
        iterations=iterations,
        tolerance=tol,
    )


# ---------------------------------------------------------------- Fatou and biconjugate checks


@dataclass
class FatouReport:
    rho_limit: RandVar
    liminf: RandVar
    raw_tail_inf: RandVar
    margin: RandVar
    bound: RandVar
    cells: list
    local_consistent: bool
    tolerance: float = WEAK_TOL

    @property
    def ok(self):
        return self.local_consistent and float(np.min(self.margin.values)) >= -self.tolerance

    def to_json(self):
        return {
            "rho_limit": self.rho_limit.to_json(),
            "liminf": self.liminf.to_json(),
            "raw_tail_inf": self.raw_tail_inf.to_json(),
            "margin": self.margin.to_json(),
            "bound": self.bound.to_json(),
            "cells": self.cells,
            "local_consistent": self.local_consistent,
            "ok": self.ok,
        }


def fatou_check(rho, sequence, limit, bound=None, conv_tol=1e-6, tail_fraction=0.5):
    """Check rho(limit) <= essliminf rho(x_n) along a bounded sequence converging to ``limit``.

    The liminf is estimated on the tail of the sequence as the blockwise
    infimum of rho(x_n) + d |||x_n - limit|F|||_inf, i.e. each tail value is
    credited with the Lipschitz slack still separating x_n from the limit.
    Evaluation runs cell by cell over the partition {k-1 <= Y < k} of the
    bound Y and is glued back through the local property.
    """
    sequence = list(sequence)
    if not sequence:
        raise ValueError("sequence must be nonempty")
    f, d = rho.f, rho.d
    for x in sequence + [limit]:
        if x.space is not f.space or x.d != d:
            raise ShapeMismatch("sequence members must match the measure's space and d")
    stack = np.stack([x.values for x in sequence])
    last_dev = np.abs(stack[-1] - limit.values).max(axis=1)
    off = np.flatnonzero(last_dev > conv_tol)
    if off.size:
        labels = [f.space.atom_ids[i] for i in off]
        raise NotConvergent(f"sequence does not approach the limit on atoms {labels}")

    env = np.maximum(np.abs(stack).max(axis=(0, 2)), np.abs(limit.values).max(axis=1))
    env_b = np.zeros(f.n_blocks)
    np.maximum.at(env_b, f.block_of, env)
    if bound is None:
        Yb = env_b
    else:
        Yv = np.asarray(getattr(bound, "values", bound), dtype=float)
        Yv = np.broadcast_to(Yv, (f.space.n,))
        if not f.is_measurable(Yv):
            raise NotBounded("the bound must be constant on the blocks of the algebra")
        Yb = f.collapse(Yv)
        if np.any(env_b > Yb):
            raise NotBounded(f"|x_n^i| exceeds the bound on blocks {np.flatnonzero(env_b > Yb).tolist()}")

    cell_of = np.floor(Yb).astype(int) + 1
    cells = sorted(set(cell_of.tolist()))
    rho_lim = np.empty(f.n_blocks)
    rho_seq = np.empty((len(sequence), f.n_blocks))
    for c in cells:
        blocks = np.flatnonzero(cell_of == c)
        atoms = f.atoms_of(blocks)
        rho_lim[blocks] = evaluate_blocks(rho, limit.indicator(atoms))[blocks]
        for n, x in enumerate(sequence):
            rho_seq[n, blocks] = evaluate_blocks(rho, x.indicator(atoms))[blocks]
    direct = evaluate_blocks(rho, limit)
    local_ok = bool(np.allclose(direct, rho_lim, rtol=0, atol=1e-12))

    start = min(len(sequence) - 1, int(math.floor(len(sequence) * (1 - tail_fraction))))
    tail = range(start, len(sequence))
    slack = np.stack(
        [f.collapse(portfolio_norm(sequence[n] - limit, f, math.inf).values) for n in tail]
    )
    credited = rho_seq[start:] + d * slack
    liminf = credited.min(axis=0)
    raw = rho_seq[start:].min(axis=0)
    return FatouReport(
        rho_limit=RandVar.from_blocks(f, rho_lim),
        liminf=RandVar.from_blocks(f, liminf),
        raw_tail_inf=RandVar.from_blocks(f, raw),
        margin=RandVar.from_blocks(f, liminf - rho_lim),
        bound=RandVar.from_blocks(f, Yb),
        cells=[{"k": int(c), "blocks": np.flatnonzero(cell_of == c).tolist()} for c in cells],
        local_consistent=local_ok,
    )


@dataclass
class BiconjugateReport:
    gaps: list
    tolerance: float
    reports: list = field(default_factory=list, repr=False)

    @property
    def max_gap(self):
        return max(self.gaps) if self.gaps else 0.0

    @property
    def ok(self):
        return self.max_gap <= self.tolerance

    def to_json(self):
        return {"gaps": [encode_float(g) for g in self.gaps], "max_gap": self.max_gap, "tolerance": self.tolerance, "ok": self.ok}


def biconjugate_check(rho, probes, tol=GAP_TOL, opts=None):
    """rho = rho** on every probe, via the gap of ``represent``."""
    probes = list(probes)
    if not probes:
        raise ValueError("probes must be nonempty")
    reports = [represent(rho, x, tol=tol, opts=opts) for x in probes]
    return BiconjugateReport([r.max_gap for r in reports], tol, reports)
