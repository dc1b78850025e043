"""Portfolio positions in L^p_F(E)^d: conditional norms, the pairing, cone order, dual norm."""

import math

import numpy as np

from .errors import BadCone, BadExponent, ShapeMismatch, SpaceMismatch
from .randvar import RandVar, block_mean
from .simplex import linprog

STRUCT_TOL = 1e-10
CONE_TOL = 1e-12


def _exponent(p):
    if isinstance(p, str):
        if p.lower() in ("inf", "infinity", "∞"):
            return math.inf
        p = float(p)
    p = float(p)
    if math.isnan(p) or p < 1:
        raise BadExponent(f"exponent must lie in [1, inf], got {p}")
    return p


def conjugate_exponent(p):
    p = _exponent(p)
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


class Position:
    """A portfolio vector: an atoms x d matrix of finite reals."""

    __slots__ = ("space", "values")

    def __init__(self, space, values):
        values = np.array(values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2 or values.shape[0] != space.n:
            raise ShapeMismatch(f"expected a {space.n} x d matrix, got shape {values.shape}")
        if values.shape[1] < 1:
            raise ShapeMismatch("a position needs at least one coordinate")
        if not np.all(np.isfinite(values)):
            raise ValueError("position entries must be finite")
        values.setflags(write=False)
        self.space = space
        self.values = values

    @property
    def d(self):
        return self.values.shape[1]

    @classmethod
    def zeros(cls, space, d):
        return cls(space, np.zeros((space.n, d)))

    @classmethod
    def unit(cls, space, d, i, scale=1.0):
        """scale * e_i as a position (``scale`` may be a RandVar)."""
        v = np.zeros((space.n, d))
        v[:, i] = np.asarray(scale, dtype=float)
        return cls(space, v)

    @classmethod
    def from_coordinates(cls, coords):
        coords = list(coords)
        return cls(coords[0].space, np.column_stack([c.values for c in coords]))

    def coordinate(self, i):
        return RandVar(self.space, self.values[:, i])

    def aggregate(self):
        """Sum over coordinates, one value per atom."""
        return RandVar(self.space, self.values.sum(axis=1))

    def block(self, f, k):
        """Rows of block ``k`` of ``f``."""
        return self.values[list(f.blocks[k])]

    def indicator(self, atoms):
        mask = np.zeros(self.space.n, dtype=bool)
        mask[list(atoms)] = True
        return type(self)(self.space, np.where(mask[:, None], self.values, 0.0))

    def _other(self, other):
        if isinstance(other, Position):
            if other.space is not self.space:
                raise SpaceMismatch("positions live on different spaces")
            if other.d != self.d:
                raise ShapeMismatch(f"d={self.d} vs d={other.d}")
            return other.values
        if isinstance(other, RandVar):
            if other.space is not self.space:
                raise SpaceMismatch("positions live on different spaces")
            return other.values[:, None]
        return np.asarray(other, dtype=float)

    def __add__(self, other):
        return type(self)(self.space, self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return type(self)(self.space, self.values - self._other(other))

    def __rsub__(self, other):
        return type(self)(self.space, self._other(other) - self.values)

    def __mul__(self, other):
        return type(self)(self.space, self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return type(self)(self.space, self.values / self._other(other))

    def __neg__(self):
        return type(self)(self.space, -self.values)

    def __eq__(self, other):
        if not isinstance(other, Position):
            return NotImplemented
        return self.space is other.space and np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self):
        return f"{type(self).__name__}({self.values.tolist()})"

    def to_json(self):
        return {"values": [[float(v) for v in row] for row in self.values]}


class DualElement(Position):
    """An element of L^1_F(E)^d acting on positions through the conditional pairing."""

    __slots__ = ()

    def admissible_blocks(self, f, tol=STRUCT_TOL):
        """Per block: z <= 0 and E[z_i | F] = -1 for every coordinate."""
        means = block_mean(self.values, f)
        ok = np.all(np.abs(means + 1.0) <= tol, axis=1)
        for k, b in enumerate(f.blocks):
            if np.any(self.values[list(b)] > tol):
                ok[k] = False
        return ok

    def is_admissible(self, f, tol=STRUCT_TOL):
        return bool(np.all(self.admissible_blocks(f, tol)))


class Cone:
    """Polyhedral cone {x : n_j . x >= 0 for all j} with nonnegative normals."""

    __slots__ = ("d", "inequalities")

    def __init__(self, inequalities, d=None):
        ineq = np.array(inequalities, dtype=float)
        if ineq.size == 0:
            if d is None:
                raise BadCone("an empty inequality list needs an explicit d")
            ineq = np.zeros((0, d))
        ineq = np.atleast_2d(ineq)
        if d is not None and ineq.shape[1] != d:
            raise BadCone(f"normals have length {ineq.shape[1]}, expected {d}")
        if not np.all(np.isfinite(ineq)):
            raise BadCone("normals must be finite")
        if np.any(ineq < 0):
            raise BadCone("every normal must have nonnegative components so that the cone contains R^d_+")
        ineq.setflags(write=False)
        self.d = ineq.shape[1]
        self.inequalities = ineq

    @classmethod
    def orthant(cls, d):
        return cls(np.eye(d))

    def contains(self, v, tol=CONE_TOL):
        """Row-wise membership for an (..., d) array."""
        v = np.asarray(v, dtype=float)
        if self.inequalities.shape[0] == 0:
            return np.ones(v.shape[:-1], dtype=bool)
        return np.all(v @ self.inequalities.T >= -tol, axis=-1)

    def aggregate_floor(self):
        """min sum(x) over x in K with ||x||_1 <= 1; the cone is sum-monotone iff this is >= 0."""
        d = self.d
        # x = u - v, u, v >= 0
        c = np.concatenate([np.ones(d), -np.ones(d)])
        A_ub = [np.concatenate([np.ones(d), np.ones(d)])]
        b_ub = [1.0]
        for nrm in self.inequalities:
            A_ub.append(np.concatenate([-nrm, nrm]))
            b_ub.append(0.0)
        res = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub))
        return res.fun

    def certify_aggregate(self, tol=1e-12):
        return self.aggregate_floor() >= -tol

    def sample(self, rng, size):
        """Random elements of K, shape (size, d)."""
        out = rng.normal(size=(size, self.d))
        bad = ~self.contains(out)
        out[bad] = np.abs(out[bad])
        return out

    def to_json(self):
        return {"inequalities": [[float(v) for v in row] for row in self.inequalities]}

    def __repr__(self):
        return f"Cone(d={self.d}, {self.inequalities.shape[0]} inequalities)"


def cond_norm(x, f, p):
    """||x | F||_p as a RandVar constant on the blocks of ``f``."""
    p = _exponent(p)
    if x.space is not f.space:
        raise SpaceMismatch("variable and algebra live on different spaces")
    a = np.abs(x.values)
    if math.isinf(p):
        out = np.zeros(f.n_blocks)
        np.maximum.at(out, f.block_of, a)
    elif p == 1:
        out = block_mean(a, f)
    else:
        m = a.max() if a.size else 0.0
        if m == 0:
            out = np.zeros(f.n_blocks)
        else:
            # scale out the max to keep a**p in range
            out = m * block_mean((a / m) ** p, f) ** (1.0 / p)
    return RandVar(x.space, out[f.block_of])


def portfolio_norm(x, f, p, literal=False):
    """|||x | F|||_p.

    For finite p the default is (sum_i ||x_i|F||_p^p)^(1/p); ``literal=True``
    gives the unpowered variant (sum_i ||x_i|F||_p)^(1/p).
    """
    p = _exponent(p)
    norms = np.column_stack([cond_norm(x.coordinate(i), f, p).values for i in range(x.d)])
    if math.isinf(p):
        return RandVar(x.space, norms.max(axis=1))
    if literal:
        return RandVar(x.space, norms.sum(axis=1) ** (1.0 / p))
    if p == 1:
        return RandVar(x.space, norms.sum(axis=1))
    m = norms.max()
    if m == 0:
        return RandVar(x.space, np.zeros(x.space.n))
    return RandVar(x.space, m * ((norms / m) ** p).sum(axis=1) ** (1.0 / p))


def _check_pair(x, z):
    if x.space is not z.space:
        raise SpaceMismatch("position and dual element live on different spaces")
    if x.values.shape != z.values.shape:
        raise ShapeMismatch(f"shapes {x.values.shape} and {z.values.shape} differ")


def pair(x, z, f):
    """E[x . z | F]."""
    _check_pair(x, z)
    prod = (x.values * z.values).sum(axis=1)
    return RandVar(x.space, block_mean(prod, f)[f.block_of])


def cone_geq(x, y, k):
    """Atom labels where x - y lies in K."""
    _check_pair(x, y)
    if k.d != x.d:
        raise ShapeMismatch(f"cone has d={k.d}, positions have d={x.d}")
    mask = k.contains(x.values - y.values)
    return frozenset(x.space.atom_ids[i] for i in np.flatnonzero(mask))


def dual_norm(z, f, p):
    """Operator norm of X -> E[X.z|F] on the unit ball of |||.|F|||_p: the conjugate-exponent norm."""
    return portfolio_norm(z, f, conjugate_exponent(p))
