"""Set objects: finitely generated L0-convex sets and built-in norm balls."""

import numpy as np

from ..errors import EmptyGenerators, ShapeMismatch, SpaceMismatch
from ..lpmod import Position, _exponent, portfolio_norm

FLAGS = frozenset({"l0_convex", "concatenation", "balanced"})
DEFAULT_FLAGS = frozenset({"l0_convex", "concatenation"})


def block_weights(f, k, d):
    """Entry weights P(atom | block) for the flattened (atoms x d) block."""
    return np.repeat(f.cond_probs[list(f.blocks[k])], d)


def block_vector(x, f, k):
    return x.values[list(f.blocks[k])].ravel()


class GeneratedSet:
    """Generators closed under the flagged operations with F-measurable coefficients.

    With ``l0_convex`` the set is, block by block, the convex hull of the
    generators' restrictions; ``balanced`` adds the negated generators;
    ``concatenation`` lets each block choose independently (which the
    L0-convex hull of finitely many points already does on a finite space).
    """

    def __init__(self, generators, f, closure_flags=DEFAULT_FLAGS):
        generators = list(generators)
        if not generators:
            raise EmptyGenerators("a generated set needs at least one generator")
        d = generators[0].d
        for g in generators:
            if g.space is not f.space:
                raise SpaceMismatch("generator and algebra live on different spaces")
            if g.d != d:
                raise ShapeMismatch("generators disagree on the coordinate count")
        flags = frozenset(closure_flags)
        unknown = flags - FLAGS
        if unknown:
            raise ValueError(f"unknown closure flags {sorted(unknown)}")
        self.generators = generators
        self.f = f
        self.d = d
        self.closure_flags = flags
        self._stack = np.stack([g.values for g in generators])

    @property
    def convex(self):
        return "l0_convex" in self.closure_flags

    @property
    def balanced(self):
        return "balanced" in self.closure_flags

    def block_vertices(self, k):
        """Rows: generator restrictions to block k (and their negatives when balanced)."""
        idx = list(self.f.blocks[k])
        V = self._stack[:, idx, :].reshape(len(self.generators), -1)
        if self.balanced:
            V = np.vstack([V, -V])
        return V

    def with_origin(self):
        zero = Position.zeros(self.f.space, self.d)
        return GeneratedSet(self.generators + [zero], self.f, self.closure_flags)

    def balanced_version(self):
        return GeneratedSet(self.generators, self.f, self.closure_flags | {"balanced"})

    def check_position(self, x):
        if x.space is not self.f.space:
            raise SpaceMismatch("position and set live on different spaces")
        if x.d != self.d:
            raise ShapeMismatch(f"set has d={self.d}, position has d={x.d}")

    def __repr__(self):
        return f"GeneratedSet({len(self.generators)} generators, flags={sorted(self.closure_flags)})"


class NormBall:
    """{X : |||X|F|||_p <= radius} with membership and gauge by formula."""

    closure_flags = frozenset({"l0_convex", "concatenation", "balanced"})

    def __init__(self, f, d, p, radius=1.0):
        self.f = f
        self.d = d
        self.p = _exponent(p)
        r = np.asarray(radius.values if hasattr(radius, "values") else radius, dtype=float)
        r = np.broadcast_to(r, (f.space.n,)).copy()
        if np.any(r <= 0) or not f.is_measurable(r):
            raise ValueError("radius must be strictly positive and constant on blocks")
        self.radius = r

    def check_position(self, x):
        if x.space is not self.f.space:
            raise SpaceMismatch("position and set live on different spaces")
        if x.d != self.d:
            raise ShapeMismatch(f"ball has d={self.d}, position has d={x.d}")

    def norm(self, x):
        return portfolio_norm(x, self.f, self.p)

    def __repr__(self):
        return f"NormBall(p={self.p}, d={self.d})"
