"""Finite probability spaces and sub-sigma-algebras given as partitions."""

import math

import numpy as np

from .errors import (
    DuplicateLabel,
    EmptyBlock,
    NotAPartition,
    ProbSum,
    SpaceMismatch,
    ZeroProbabilityAtom,
)

PROB_SUM_TOL = 1e-12


class ProbSpace:
    """Finite atom set with strictly positive probabilities.

    Atom order is fixed at construction; every array indexed by atoms
    follows it.
    """

    __slots__ = ("atom_ids", "probs", "_index")

    def __init__(self, atom_ids, probs):
        atom_ids = tuple(atom_ids)
        probs = np.asarray(probs, dtype=float)
        if len(atom_ids) == 0:
            raise ValueError("a probability space needs at least one atom")
        if probs.shape != (len(atom_ids),):
            raise ValueError("one probability per atom is required")
        if len(set(atom_ids)) != len(atom_ids):
            seen = set()
            dup = next(a for a in atom_ids if a in seen or seen.add(a))
            raise DuplicateLabel(f"atom label {dup!r} appears twice")
        bad = [a for a, p in zip(atom_ids, probs) if not p > 0]
        if bad:
            raise ZeroProbabilityAtom(f"atom(s) {bad} have non-positive probability")
        if not np.all(np.isfinite(probs)):
            raise ProbSum("probabilities must be finite")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ProbSum(f"probabilities sum to {total!r}, not 1")
        probs.setflags(write=False)
        self.atom_ids = atom_ids
        self.probs = probs
        self._index = {a: i for i, a in enumerate(atom_ids)}

    @property
    def n(self):
        return len(self.atom_ids)

    def index(self, label):
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"unknown atom {label!r}") from None

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"ProbSpace({self.n} atoms)"

    def trivial(self):
        return SubAlgebra(self, [tuple(range(self.n))])

    def finest(self):
        return SubAlgebra(self, [(i,) for i in range(self.n)])


class SubAlgebra:
    """A partition of the atoms, standing for the conditioning algebra.

    ``blocks`` holds atom indices; block order is fixed at construction.
    """

    __slots__ = ("space", "blocks", "block_of", "block_probs", "cond_probs")

    def __init__(self, space, blocks):
        n = space.n
        blocks = [tuple(sorted(int(i) for i in b)) for b in blocks]
        block_of = np.full(n, -1, dtype=int)
        for k, b in enumerate(blocks):
            if not b:
                raise EmptyBlock(f"block {k} is empty")
            for i in b:
                if not 0 <= i < n:
                    raise NotAPartition(f"block {k} references atom index {i} outside the space")
                if block_of[i] != -1:
                    raise NotAPartition(
                        f"atom {space.atom_ids[i]!r} lies in blocks {block_of[i]} and {k}"
                    )
                block_of[i] = k
        missing = [space.atom_ids[i] for i in np.flatnonzero(block_of < 0)]
        if missing:
            raise NotAPartition(f"atoms {missing} are not covered by any block")
        block_of.setflags(write=False)
        self.space = space
        self.blocks = tuple(blocks)
        self.block_of = block_of
        bp = np.bincount(block_of, weights=space.probs, minlength=len(blocks))
        bp.setflags(write=False)
        self.block_probs = bp
        cp = space.probs / bp[block_of]
        cp.setflags(write=False)
        # P(atom | its block)
        self.cond_probs = cp

    @property
    def n_blocks(self):
        return len(self.blocks)

    def __len__(self):
        return self.n_blocks

    def __repr__(self):
        return f"SubAlgebra({self.n_blocks} blocks over {self.space.n} atoms)"

    def block_labels(self, k):
        return [self.space.atom_ids[i] for i in self.blocks[k]]

    def expand(self, block_values):
        """Per-block values -> per-atom array."""
        block_values = np.asarray(block_values, dtype=float)
        if block_values.shape != (self.n_blocks,):
            raise ValueError(f"expected {self.n_blocks} block values, got shape {block_values.shape}")
        return block_values[self.block_of]

    def collapse(self, values):
        """Per-atom array (assumed measurable) -> value on the first atom of each block."""
        values = np.asarray(values)
        return values[[b[0] for b in self.blocks]]

    def is_measurable(self, values, tol=0.0):
        values = np.asarray(values, dtype=float)
        for b in self.blocks:
            v = values[list(b)]
            if np.all(np.isfinite(v)):
                if np.ptp(v) > tol:
                    return False
            elif not np.all(v == v[0]):
                return False
        return True

    def atoms_of(self, block_indices):
        """Atom index set for a collection of blocks."""
        out = []
        for k in block_indices:
            out.extend(self.blocks[k])
        return sorted(out)

    def same_as(self, other):
        return self.space is other.space and sorted(self.blocks) == sorted(other.blocks)


def build_space(atom_probs):
    """Build a ProbSpace from ``[(label, probability), ...]``."""
    atom_probs = list(atom_probs)
    if not atom_probs:
        raise ValueError("a probability space needs at least one atom")
    labels = [a for a, _ in atom_probs]
    probs = [float(p) for _, p in atom_probs]
    return ProbSpace(labels, probs)


def build_subalgebra(space, blocks):
    """Build a SubAlgebra from blocks given as collections of atom labels."""
    idx_blocks = []
    for k, b in enumerate(blocks):
        b = list(b)
        if not b:
            raise EmptyBlock(f"block {k} is empty")
        try:
            idx = [space.index(a) for a in b]
        except KeyError as exc:
            raise NotAPartition(f"block {k}: {exc.args[0]}") from None
        if len(set(idx)) != len(idx):
            raise NotAPartition(f"block {k} lists an atom twice")
        idx_blocks.append(idx)
    return SubAlgebra(space, idx_blocks)


def is_coarser(f, g):
    """True iff every block of ``g`` sits inside one block of ``f``."""
    if f.space is not g.space:
        raise SpaceMismatch("sub-algebras live on different spaces")
    return all(len({int(f.block_of[i]) for i in b}) == 1 for b in g.blocks)
