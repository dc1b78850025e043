"""Blockwise convex-analysis operations on generated sets.

Every operation splits along the blocks of the conditioning algebra and
solves one finite-dimensional problem per block; the per-block results are
glued back by concatenation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .._parallel import map_blocks
from ..errors import EmptyFamily, LPFailure, NonPositiveEps, NotSeparable, ShapeMismatch, SpaceMismatch
from ..lpmod import DualElement, Position, _exponent, conjugate_exponent, portfolio_norm
from ..randvar import ExtRandVar, RandVar, encode_float
from ..simplex import linprog
from .projection import project_hull
from .sets import GeneratedSet, NormBall, block_vector, block_weights

MEMBER_TOL = 1e-9
SEPARATION_TOL = 1e-9
POLAR_TOL = 1e-9


def _block_norm(v, w, p):
    a = np.abs(v)
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    return float(np.sum(w * a**p) ** (1.0 / p))


def _require_convex(k, what):
    if isinstance(k, NormBall):
        return
    if not k.convex:
        raise ValueError(f"{what} needs a set with the l0_convex closure flag")


# ---------------------------------------------------------------- membership


@dataclass
class HullMembership:
    """Per-block membership with convex weights over the block vertices as witness."""

    f: object
    member: np.ndarray
    weights: list

    @property
    def blocks(self):
        return frozenset(int(k) for k in np.flatnonzero(self.member))

    @property
    def atoms(self):
        return frozenset(a for k in self.blocks for a in self.f.block_labels(k))

    def __bool__(self):
        return bool(np.all(self.member))

    def to_json(self):
        return {
            "member": [bool(m) for m in self.member],
            "weights": [None if w is None else [float(v) for v in w] for w in self.weights],
        }


def _feasible(V, xb):
    m = V.shape[0]
    A_eq = np.vstack([V.T, np.ones((1, m))])
    b_eq = np.concatenate([xb, [1.0]])
    return linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq)


def _lex_witness(V, xb, lam):
    """Drop high-index vertices while the remaining ones still represent xb."""
    m = V.shape[0]
    keep = np.ones(m, dtype=bool)
    for j in range(m - 1, -1, -1):
        if lam[j] <= 0:
            keep[j] = False
            continue
        trial = keep.copy()
        trial[j] = False
        if not trial.any():
            continue
        res = _feasible(V[trial], xb)
        if res.ok:
            keep = trial
            lam = np.zeros(m)
            lam[trial] = res.x
    return lam


def hull_member(k, x, witness=True):
    """Decide per block whether x lies in the (closed) hull; returns HullMembership."""
    k.check_position(x)
    f = k.f
    if isinstance(k, NormBall):
        nrm = f.collapse(k.norm(x).values)
        r = f.collapse(k.radius)
        return HullMembership(f, nrm <= r + MEMBER_TOL, [None] * f.n_blocks)

    def one(b):
        V = k.block_vertices(b)
        xb = block_vector(x, f, b)
        if not k.convex:
            hit = np.flatnonzero(np.all(np.abs(V - xb) <= MEMBER_TOL, axis=1))
            if hit.size == 0:
                return False, None
            lam = np.zeros(V.shape[0])
            lam[hit[0]] = 1.0
            return True, lam
        res = _feasible(V, xb)
        if not res.ok:
            return False, None
        lam = res.x
        if witness:
            lam = _lex_witness(V, xb, lam)
        return True, lam

    out = map_blocks(one, f.n_blocks)
    return HullMembership(f, np.array([o[0] for o in out]), [o[1] for o in out])


# ---------------------------------------------------------------- gauge


def gauge(k, x):
    """Blockwise inf{t >= 0 : x in t K}; +inf where no t works."""
    k.check_position(x)
    f = k.f
    if isinstance(k, NormBall):
        return ExtRandVar(f.space, k.norm(x).values / k.radius)
    _require_convex(k, "gauge")

    def one(b):
        xb = block_vector(x, f, b)
        if not np.any(xb):
            return 0.0
        V = k.block_vertices(b)
        res = linprog(np.ones(V.shape[0]), A_eq=V.T, b_eq=xb)
        if res.status == "infeasible":
            return math.inf
        if not res.ok:
            raise LPFailure(f"gauge LP on block {b}: {res.status}")
        return res.fun

    return ExtRandVar.from_blocks(f, map_blocks(one, f.n_blocks))


# ---------------------------------------------------------------- Mazur projection


@dataclass
class NoApproximant:
    block: int
    distance: float
    lower_bound: float

    def to_json(self):
        return {"block": self.block, "distance": self.distance, "lower_bound": self.lower_bound}


@dataclass
class MazurResult:
    """Closest hull point, its distance to the target, and per-block certification."""

    z: Position
    distance: RandVar
    lower_bound: RandVar
    weights: list
    certified: np.ndarray
    no_approximant: list = field(default_factory=list)
    iterations: list = field(default_factory=list)

    @property
    def ok(self):
        return bool(np.all(self.certified))

    def to_json(self):
        return {
            "z": self.z.to_json()["values"],
            "distance": self.distance.to_json(),
            "lower_bound": self.lower_bound.to_json(),
            "weights": [[float(v) for v in w] for w in self.weights],
            "certified": [bool(c) for c in self.certified],
            "no_approximant": [n.to_json() for n in self.no_approximant],
        }


def _separating_bound(V, xb, yb, w, p):
    """Lower bound on the p-distance from xb to conv(V) via the hyperplane normal xb - yb."""
    r = xb - yb
    if not np.any(r):
        return 0.0
    margin = float(np.dot(w * r, xb)) - float(np.max(V @ (w * r)))
    if margin <= 0:
        return 0.0
    return margin / _block_norm(r, w, conjugate_exponent(p))


def mazur_project(family, x, f, eps, p=2, max_iter=10_000, gap_tol=1e-10):
    """Closest point to ``x`` in the concatenation-convex hull of ``family``.

    The projection is computed in the conditional L2 geometry; distances are
    reported in |||.|F|||_p. Blocks whose distance exceeds ``eps`` are listed
    as NoApproximant together with a certified lower bound.
    """
    family = list(family)
    if not family:
        raise EmptyFamily("Mazur projection needs a nonempty family")
    eps_vals = np.broadcast_to(np.asarray(getattr(eps, "values", eps), dtype=float), (f.space.n,))
    if np.any(eps_vals <= 0):
        raise NonPositiveEps("eps must be strictly positive")
    p = _exponent(p)
    k = GeneratedSet(family, f)
    k.check_position(x)
    d = x.d

    def one(b):
        V = k.block_vertices(b)
        xb = block_vector(x, f, b)
        w = block_weights(f, b, d)
        proj = project_hull(V, xb, w, max_iter=max_iter, gap_tol=gap_tol)
        lb = _separating_bound(V, xb, proj.point, w, p)
        return proj, lb

    out = map_blocks(one, f.n_blocks)
    z = np.empty_like(x.values)
    for b, (proj, _) in enumerate(out):
        z[list(f.blocks[b])] = proj.point.reshape(-1, d)
    z = Position(f.space, z)
    dist = portfolio_norm(x - z, f, p)
    dist_b = f.collapse(dist.values)
    eps_b = np.array([eps_vals[list(bl)].min() for bl in f.blocks])
    lower = np.array([lb for _, lb in out])
    certified = dist_b <= eps_b
    bad = [
        NoApproximant(int(b), float(dist_b[b]), float(lower[b]))
        for b in np.flatnonzero(~certified)
    ]
    return MazurResult(
        z=z,
        distance=dist,
        lower_bound=RandVar.from_blocks(f, lower),
        weights=[proj.weights for proj, _ in out],
        certified=certified,
        no_approximant=bad,
        iterations=[proj.iterations for proj, _ in out],
    )


# ---------------------------------------------------------------- separation


@dataclass
class SeparationCertificate:
    """Functional z, slack eps and margin with sup_K <.,z> + eps <= <x,z> on every block."""

    z: DualElement
    eps: RandVar
    margin: RandVar
    x_value: RandVar
    sup_value: RandVar

    def check(self, k, x):
        """Re-evaluate the defining inequality against every generator; True iff it holds."""
        from ..lpmod import pair

        f = k.f
        xv = pair(x, self.z, f).values
        ok = True
        for g in k.generators:
            gv = pair(g, self.z, f).values
            ok &= bool(np.all(gv + self.eps.values <= xv + 1e-12))
            if k.balanced:
                ok &= bool(np.all(-gv + self.eps.values <= xv + 1e-12))
        return ok and bool(np.all(self.eps.values > 0))

    def to_json(self):
        return {
            "z": self.z.to_json()["values"],
            "eps": self.eps.to_json(),
            "margin": self.margin.to_json(),
            "x_value": self.x_value.to_json(),
            "sup_value": self.sup_value.to_json(),
        }


def separate(k, x):
    """Strictly separate x from the generated hull on every block."""
    if not isinstance(k, GeneratedSet):
        raise TypeError("separate works on finitely generated sets")
    _require_convex(k, "separate")
    k.check_position(x)
    f = k.f
    d = x.d

    def one(b):
        V = k.block_vertices(b)
        xb = block_vector(x, f, b)
        w = block_weights(f, b, d)
        proj = project_hull(V, xb, w)
        r = xb - proj.point
        dist = math.sqrt(max(proj.sq_dist, 0.0))
        scale = 1.0 + math.sqrt(float(np.dot(w * xb, xb)))
        if dist <= SEPARATION_TOL * scale:
            raise NotSeparable(b, dist)
        zb = r / dist
        x_val = float(np.dot(w * zb, xb))
        sup_val = float(np.max(V @ (w * zb)))
        margin = x_val - sup_val
        if margin <= SEPARATION_TOL * scale:
            raise NotSeparable(b, dist)
        return zb, x_val, sup_val, margin

    out = map_blocks(one, f.n_blocks)
    z = np.empty_like(x.values)
    for b, (zb, *_rest) in enumerate(out):
        z[list(f.blocks[b])] = zb.reshape(-1, d)
    margin = np.array([o[3] for o in out])
    return SeparationCertificate(
        z=DualElement(f.space, z),
        eps=RandVar.from_blocks(f, margin / 2.0),
        margin=RandVar.from_blocks(f, margin),
        x_value=RandVar.from_blocks(f, [o[1] for o in out]),
        sup_value=RandVar.from_blocks(f, [o[2] for o in out]),
    )


# ---------------------------------------------------------------- polars


def _polar_lp(V, xb, w, one_sided):
    wx = w * xb
    c = np.concatenate([-wx, wx])
    G = V * w
    A = np.hstack([G, -G])
    b = np.ones(V.shape[0])
    if not one_sided:
        A = np.vstack([A, -A])
        b = np.concatenate([b, b])
    res = linprog(c, A_ub=A, b_ub=b)
    if res.status == "unbounded":
        return math.inf
    if not res.ok:
        raise LPFailure(f"polar support LP: {res.status}")
    return -res.fun if res.fun != 0 else 0.0


def polar_support(d_set, x, one_sided=False):
    """Blockwise sup <x, z> over z in the polar of d_set (absolute or one-sided)."""
    if not isinstance(d_set, GeneratedSet):
        raise TypeError("polar_support works on finitely generated sets")
    d_set.check_position(x)
    f = d_set.f
    d = x.d

    def one(b):
        xb = block_vector(x, f, b)
        if not np.any(xb):
            return 0.0
        return _polar_lp(d_set.block_vertices(b), xb, block_weights(f, b, d), one_sided)

    return ExtRandVar.from_blocks(f, map_blocks(one, f.n_blocks))


def polar_member(d_set, z, one_sided=False, tol=POLAR_TOL):
    """Per block: does z lie in the polar of d_set?"""
    if z.space is not d_set.f.space:
        raise SpaceMismatch("dual element and set live on different spaces")
    if z.d != d_set.d:
        raise ShapeMismatch(f"set has d={d_set.d}, dual element has d={z.d}")
    f = d_set.f
    out = np.empty(f.n_blocks, dtype=bool)
    for b in range(f.n_blocks):
        vals = d_set.block_vertices(b) @ (block_weights(f, b, z.d) * block_vector(z, f, b))
        vals = vals if one_sided else np.abs(vals)
        out[b] = bool(np.all(vals <= 1.0 + tol))
    return out


def bipolar_member(d_set, x, one_sided=False, tol=POLAR_TOL):
    """Per block: x lies in the bipolar iff the polar support at x is at most 1."""
    vals = d_set.f.collapse(polar_support(d_set, x, one_sided).values)
    return vals <= 1.0 + tol


def bipolar_report(d_set, x, one_sided=False):
    f = d_set.f
    vals = f.collapse(polar_support(d_set, x, one_sided).values)
    return {
        "one_sided": bool(one_sided),
        "support": [encode_float(v) for v in vals],
        "member": [bool(v <= 1.0 + POLAR_TOL) for v in vals],
    }
