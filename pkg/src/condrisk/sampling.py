"""Random finite spaces, positions and dual elements for property checks."""

import numpy as np

from .lpmod import DualElement, Position
from .prob import ProbSpace, SubAlgebra
from .randvar import RandVar


def random_space(rng, n_atoms, n_blocks=1):
    """Space with probabilities bounded away from zero and a random partition into ``n_blocks``."""
    if not 1 <= n_blocks <= n_atoms:
        raise ValueError("need 1 <= n_blocks <= n_atoms")
    p = 0.5 / n_atoms + 0.5 * rng.dirichlet(np.ones(n_atoms))
    p /= p.sum()
    # push the rounding residue onto the largest atom
    p[np.argmax(p)] += 1.0 - p.sum()
    space = ProbSpace([f"w{i}" for i in range(n_atoms)], p)
    order = rng.permutation(n_atoms)
    cuts = np.sort(rng.choice(np.arange(1, n_atoms), size=n_blocks - 1, replace=False))
    blocks = [chunk.tolist() for chunk in np.split(order, cuts)]
    return space, SubAlgebra(space, blocks)


def random_position(rng, space, d, scale=1.0):
    return Position(space, scale * rng.normal(size=(space.n, d)))


def random_measurable(rng, f, low=-1.0, high=1.0):
    return RandVar.from_blocks(f, rng.uniform(low, high, size=f.n_blocks))


def random_density(rng, f, floor=0.0):
    """Per-atom q > floor with E[q | F] = 1."""
    q = rng.exponential(size=f.space.n) + floor
    means = np.bincount(f.block_of, weights=f.space.probs * q, minlength=f.n_blocks) / f.block_probs
    return q / means[f.block_of]


def random_admissible_dual(rng, f, d, aggregated=True, floor=0.0):
    """Z <= 0 with E[Z_i | F] = -1; ``aggregated`` makes all coordinates equal."""
    if aggregated:
        q = random_density(rng, f, floor)
        return DualElement(f.space, -np.repeat(q[:, None], d, axis=1))
    cols = [random_density(rng, f, floor) for _ in range(d)]
    return DualElement(f.space, -np.column_stack(cols))
