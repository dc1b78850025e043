"""Random variables on a finite space: order, essential bounds, conditioning, concatenation."""

import numpy as np

from .errors import (
    ArityMismatch,
    EmptyFamily,
    InfMinusInf,
    NonPositiveEps,
    NotMeasurable,
    PartitionNotInF,
    SpaceMismatch,
)
from .prob import is_coarser

ARITH_TOL = 1e-10


def _check_space(a, b):
    if a.space is not b.space:
        raise SpaceMismatch("random variables live on different spaces")


def _values_of(other, space):
    if isinstance(other, (RandVar, ExtRandVar)):
        if other.space is not space:
            raise SpaceMismatch("random variables live on different spaces")
        return other.values
    return np.asarray(other, dtype=float)


class RandVar:
    """One finite real per atom."""

    __slots__ = ("space", "values")

    def __init__(self, space, values):
        values = np.array(values, dtype=float, copy=True).reshape(-1)
        if values.shape != (space.n,):
            raise ValueError(f"expected {space.n} values, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise ValueError("RandVar values must be finite; use ExtRandVar for +-inf")
        values.setflags(write=False)
        self.space = space
        self.values = values

    @classmethod
    def constant(cls, space, c):
        return cls(space, np.full(space.n, float(c)))

    @classmethod
    def from_blocks(cls, f, block_values):
        return cls(f.space, f.expand(block_values))

    def is_measurable(self, f, tol=0.0):
        _check_space(self, f)
        return f.is_measurable(self.values, tol)

    def indicator(self, atoms):
        """1_A * self for an atom index collection A."""
        mask = np.zeros(self.space.n, dtype=bool)
        mask[list(atoms)] = True
        return RandVar(self.space, np.where(mask, self.values, 0.0))

    def allclose(self, other, tol=ARITH_TOL):
        return bool(np.all(np.abs(self.values - _values_of(other, self.space)) <= tol))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def __add__(self, other):
        return RandVar(self.space, self.values + _values_of(other, self.space))

    __radd__ = __add__

    def __sub__(self, other):
        return RandVar(self.space, self.values - _values_of(other, self.space))

    def __rsub__(self, other):
        return RandVar(self.space, _values_of(other, self.space) - self.values)

    def __mul__(self, other):
        return RandVar(self.space, self.values * _values_of(other, self.space))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return RandVar(self.space, self.values / _values_of(other, self.space))

    def __neg__(self):
        return RandVar(self.space, -self.values)

    def __abs__(self):
        return RandVar(self.space, np.abs(self.values))

    def __eq__(self, other):
        if not isinstance(other, RandVar):
            return NotImplemented
        return self.space is other.space and np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self):
        return f"RandVar({self.values.tolist()})"

    def to_json(self):
        return [float(v) for v in self.values]


class ExtRandVar:
    """One extended real per atom.

    Addition is total except for ``(+inf) + (-inf)``, which raises InfMinusInf.
    """

    __slots__ = ("space", "values")

    def __init__(self, space, values):
        values = np.array(values, dtype=float, copy=True).reshape(-1)
        if values.shape != (space.n,):
            raise ValueError(f"expected {space.n} values, got {values.size}")
        if np.any(np.isnan(values)):
            raise ValueError("NaN is not an extended real")
        values.setflags(write=False)
        self.space = space
        self.values = values

    @classmethod
    def from_blocks(cls, f, block_values):
        return cls(f.space, f.expand(block_values))

    def is_finite(self):
        return bool(np.all(np.isfinite(self.values)))

    def to_randvar(self):
        return RandVar(self.space, self.values)

    def __add__(self, other):
        b = _values_of(other, self.space)
        a = self.values
        if np.any((a == np.inf) & (b == -np.inf)) or np.any((a == -np.inf) & (b == np.inf)):
            raise InfMinusInf("(+inf) + (-inf) is undefined")
        return ExtRandVar(self.space, a + b)

    __radd__ = __add__

    def __neg__(self):
        return ExtRandVar(self.space, -self.values)

    def __sub__(self, other):
        return self + (-ExtRandVar(self.space, _values_of(other, self.space)))

    def __rsub__(self, other):
        return ExtRandVar(self.space, _values_of(other, self.space)) - self

    def __eq__(self, other):
        if not isinstance(other, (RandVar, ExtRandVar)):
            return NotImplemented
        return self.space is other.space and np.array_equal(self.values, other.values)

    __hash__ = None

    def __repr__(self):
        return f"ExtRandVar({self.values.tolist()})"

    def to_json(self):
        return [encode_float(v) for v in self.values]


def encode_float(v):
    v = float(v)
    if v == np.inf:
        return "inf"
    if v == -np.inf:
        return "-inf"
    if np.isnan(v):
        raise ValueError("NaN cannot be serialized")
    return v


def compare(x, y, rel):
    """Atom labels on which ``x rel y`` holds pointwise; ``rel`` is '>=' or '>'."""
    _check_space(x, y)
    if rel in (">=", "≥", "ge"):
        mask = x.values >= y.values
    elif rel in (">", "gt"):
        mask = x.values > y.values
    else:
        raise ValueError(f"unsupported relation {rel!r}")
    return frozenset(x.space.atom_ids[i] for i in np.flatnonzero(mask))


def _stack(family):
    family = list(family)
    if not family:
        raise EmptyFamily("essential bound of an empty family")
    space = family[0].space
    for x in family[1:]:
        if x.space is not space:
            raise SpaceMismatch("family members live on different spaces")
    return space, np.vstack([x.values for x in family])


def ess_inf(family):
    space, vals = _stack(family)
    return ExtRandVar(space, vals.min(axis=0))


def ess_sup(family):
    space, vals = _stack(family)
    return ExtRandVar(space, vals.max(axis=0))


def block_mean(values, f):
    """E[values | f] as per-block numbers; ``values`` may carry trailing axes."""
    values = np.asarray(values, dtype=float)
    shape = (-1,) + (1,) * (values.ndim - 1)
    out = np.zeros((f.n_blocks,) + values.shape[1:])
    np.add.at(out, f.block_of, f.space.probs.reshape(shape) * values)
    return out / f.block_probs.reshape(shape)


def cond_expect(x, f):
    """E[x | f]: on each block, the probability-weighted average."""
    _check_space(x, f)
    return RandVar(x.space, block_mean(x.values, f)[f.block_of])


def concatenate(partition, parts, f):
    """The unique X with 1_{A_n} X = 1_{A_n} parts[n] for the blocks A_n of ``partition``.

    Every block of ``partition`` must be a union of blocks of ``f``.
    """
    if partition.space is not f.space:
        raise SpaceMismatch("partition and algebra live on different spaces")
    parts = list(parts)
    if len(parts) != partition.n_blocks:
        raise ArityMismatch(f"{partition.n_blocks} blocks but {len(parts)} parts")
    if not is_coarser(partition, f):
        raise PartitionNotInF("a partition block is not measurable with respect to the algebra")
    out = np.empty(f.space.n)
    for b, part in zip(partition.blocks, parts):
        _check_space(part, f)
        idx = list(b)
        out[idx] = part.values[idx]
    return RandVar(f.space, out)


def eps_attain_inf(generators, f, eps, return_choice=False):
    """Element of the concatenation closure of ``generators`` within ``eps`` of its essential infimum.

    On a finite space the infimum is attained block by block, so the exact
    minimiser is returned. Generators must be measurable for ``f``. With
    ``return_choice`` the per-block generator index is returned as well
    (lowest index wins ties).
    """
    generators = list(generators)
    if not generators:
        raise EmptyFamily("no generators")
    if np.any(eps.values <= 0):
        raise NonPositiveEps("eps must be strictly positive on every atom")
    for k, g in enumerate(generators):
        _check_space(g, f)
        if not f.is_measurable(g.values):
            raise NotMeasurable(f"generator {k} is not constant on the blocks of the algebra")
    block_vals = np.vstack([f.collapse(g.values) for g in generators])
    choice = np.argmin(block_vals, axis=0)
    out = RandVar(f.space, block_vals[choice, np.arange(f.n_blocks)][f.block_of])
    if return_choice:
        return out, [int(c) for c in choice]
    return out
