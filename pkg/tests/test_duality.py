import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condrisk.duality import (
    biconjugate_check,
    conjugate,
    fatou_check,
    penalty_from_acceptance,
    represent,
)
from condrisk.errors import NotAdmissible, NotBounded, NotConvergent
from condrisk.lpmod import DualElement, Position, pair
from condrisk.randvar import RandVar, cond_expect
from condrisk.risk import RiskMeasure, evaluate
from condrisk.sampling import random_admissible_dual, random_position, random_space

KINDS = [("entropic", {"gamma": 0.8}), ("avar", {"lam": 0.35}), ("worst_case", {})]


def make(kind, kw, f, d):
    return RiskMeasure(kind, f, d, **kw)


def dual(space, q, d=1):
    return DualElement(space, -np.repeat(np.asarray(q, dtype=float)[:, None], d, axis=1))


# ---- conjugate


def test_conjugate_at_reference_measure_is_zero(four_atoms):
    space, f = four_atoms
    for d in (1, 3):
        rho = RiskMeasure.entropic(f, d, 1.0)
        assert np.all(conjugate(rho, dual(space, np.ones(4), d)).values == 0)


def test_avar_box_constraint(two_atoms):
    space, f = two_atoms
    rho = RiskMeasure.avar(f, 1, 0.5)
    assert conjugate(rho, dual(space, [2.0, 0.0])).values.tolist() == [0.0, 0.0]
    tight = RiskMeasure.avar(f, 1, 0.25)
    assert conjugate(tight, dual(space, [1.5, 0.5])).values.tolist() == [0.0, 0.0]
    loose = RiskMeasure.avar(f, 1, 0.6)
    assert conjugate(loose, dual(space, [1.8, 0.2])).values.tolist() == [math.inf] * 2


def test_entropic_conjugate_is_scaled_relative_entropy(two_atoms):
    space, f = two_atoms
    rho = RiskMeasure.entropic(f, 1, 2.0)
    q = np.array([1.5, 0.5])
    expected = 0.5 * (1.5 * math.log(1.5) + 0.5 * math.log(0.5)) / 2.0
    assert conjugate(rho, dual(space, q)).values[0] == pytest.approx(expected, abs=1e-15)
    assert conjugate(rho, dual(space, [2.0, 0.0])).values[0] == pytest.approx(math.log(2.0) / 2.0)


def test_conjugate_infinite_off_admissible_blocks(four_atoms):
    space, f = four_atoms
    z = dual(space, np.ones(4)).values.copy()
    z[2:] *= 0.5  # E[z|F] = -0.5 on the second block
    for kind, kw in KINDS:
        out = conjugate(make(kind, kw, f, 1), DualElement(space, z)).values
        assert out.tolist()[2:] == [math.inf, math.inf]
        assert np.all(np.isfinite(out[:2]))
    pos = dual(space, [2.0, 0.0, 1.0, 1.0]).values.copy()
    pos[0, 0], pos[1, 0] = 0.5, -2.5
    out = conjugate(RiskMeasure.worst_case(f, 1), DualElement(space, pos)).values
    assert out.tolist() == [math.inf, math.inf, 0.0, 0.0]


def test_conjugate_infinite_when_coordinates_differ(two_atoms):
    space, f = two_atoms
    z = DualElement(space, [[-1.5, -0.5], [-0.5, -1.5]])
    assert z.is_admissible(f)
    for kind, kw in KINDS:
        assert conjugate(make(kind, kw, f, 2), z).values.tolist() == [math.inf] * 2


# ---- penalty from the acceptance set


def test_penalty_examples(four_atoms, rng):
    space, f = four_atoms
    worst = RiskMeasure.worst_case(f, 2)
    for _ in range(5):
        z = random_admissible_dual(rng, f, 2, aggregated=False)
        assert np.all(penalty_from_acceptance(worst, dual(space, np.ones(4), 2)).values == 0)
        assert np.all(np.isfinite(penalty_from_acceptance(worst, z).values)) == np.all(
            np.isfinite(conjugate(worst, z).values))
    ent = RiskMeasure.entropic(f, 1, 1.0)
    assert np.allclose(penalty_from_acceptance(ent, dual(space, np.ones(4))).values, 0.0, atol=1e-9)
    avar = RiskMeasure.avar(f, 1, 0.5)
    out = penalty_from_acceptance(avar, dual(space, [1.0, 1.0, 1.9, 0.1]))
    assert out.values.tolist() == [0.0, 0.0, 0.0, 0.0]


def test_penalty_infinite_outside_density_box(two_atoms):
    space, f = two_atoms
    avar = RiskMeasure.avar(f, 1, 0.6)
    assert penalty_from_acceptance(avar, dual(space, [1.8, 0.2])).values.tolist() == [math.inf] * 2
    avar = RiskMeasure.avar(f, 1, 0.4)
    assert penalty_from_acceptance(avar, dual(space, [1.8, 0.2])).values.tolist() == [0.0, 0.0]


def test_penalty_requires_admissible(two_atoms):
    space, f = two_atoms
    with pytest.raises(NotAdmissible):
        penalty_from_acceptance(RiskMeasure.worst_case(f, 1), dual(space, [0.5, 0.5]))


def test_entropic_penalty_with_null_density_atoms(four_atoms):
    space, f = four_atoms
    rho = RiskMeasure.entropic(f, 2, 1.7)
    z = dual(space, [2.0, 0.0, 0.5, 1.5], 2)
    a = conjugate(rho, z).values
    b = penalty_from_acceptance(rho, z).values
    assert np.allclose(a, b, atol=1e-6)


# ---- representation


def _grid_dual_value(losses, w, gamma, steps=200_001):
    """sup over two-atom densities q of E[q L] - E[q log q]/gamma by a dense grid."""
    q0 = np.linspace(0, 1 / w[0], steps)
    q1 = (1 - w[0] * q0) / w[1]
    xlogx = lambda q: np.where(q > 0, q * np.log(np.where(q > 0, q, 1)), 0.0)  # noqa: E731
    vals = w[0] * q0 * losses[0] + w[1] * q1 * losses[1] - (w[0] * xlogx(q0) + w[1] * xlogx(q1)) / gamma
    return float(vals.max())


def test_entropic_representation_two_atoms(two_atoms):
    space, f = two_atoms
    rho = RiskMeasure.entropic(f, 1, 1.0)
    x = Position(space, [[0.0], [1.0]])
    report = represent(rho, x)
    assert report.max_gap <= 1e-8
    assert np.allclose(report.dual_value.values, -0.37989, atol=5e-6)
    grid = _grid_dual_value(np.array([0.0, -1.0]), np.array([0.5, 0.5]), 1.0)
    assert abs(grid - report.dual_value.values[0]) <= 1e-9
    assert report.argmax_z.is_admissible(f)


def test_avar_representation_two_atoms(two_atoms):
    space, f = two_atoms
    report = represent(RiskMeasure.avar(f, 1, 0.5), Position(space, [[-2.0], [4.0]]))
    assert report.dual_value.values.tolist() == [2.0, 2.0]
    assert report.max_gap <= 1e-10
    assert report.argmax_z.values.ravel().tolist() == [-2.0, 0.0]


@pytest.mark.parametrize("kind,kw", KINDS)
def test_constant_positions_represent_exactly(kind, kw, four_atoms):
    space, f = four_atoms
    for d in (1, 2, 3):
        c = -1.25
        report = represent(make(kind, kw, f, d), Position(space, np.full((4, d), c)))
        assert np.allclose(report.dual_value.values, -d * c, atol=1e-12)
        assert report.max_gap <= 1e-12


@pytest.mark.parametrize("kind,kw", KINDS)
def test_biconjugate_at_zero(kind, kw, four_atoms):
    space, f = four_atoms
    report = biconjugate_check(make(kind, kw, f, 2), [Position.zeros(space, 2)])
    assert report.ok and report.max_gap == 0.0


def test_biconjugate_random_probes(rng):
    space, f = random_space(rng, 4, 2)
    probes = [random_position(rng, space, 2, 2.0) for _ in range(20)]
    assert biconjugate_check(RiskMeasure.entropic(f, 2, 1.1), probes).max_gap <= 1e-6
    worst = biconjugate_check(RiskMeasure.worst_case(f, 2), probes)
    assert worst.max_gap <= 1e-12


def test_custom_measure_representation(four_atoms, rng):
    space, f = four_atoms

    def linear(x):
        return -cond_expect(RandVar(space, x.values.sum(axis=1)), f)

    rho = RiskMeasure.custom(f, 2, linear)
    x = random_position(rng, space, 2)
    report = represent(rho, x)
    assert report.max_gap <= 1e-6
    assert report.argmax_z.is_admissible(f)
    ent = RiskMeasure.entropic(f, 1, 1.0)
    wrapped = RiskMeasure.custom(f, 1, lambda y: evaluate(ent, y))
    y = random_position(rng, space, 1)
    assert represent(wrapped, y).max_gap <= 1e-6
    z = random_admissible_dual(rng, f, 1, floor=0.2)
    assert np.allclose(conjugate(wrapped, z).values, conjugate(ent, z).values, atol=1e-4)


# ---- Fatou


def test_fatou_constant_sequence(four_atoms, rng):
    space, f = four_atoms
    rho = RiskMeasure.entropic(f, 2, 1.0)
    x = random_position(rng, space, 2)
    report = fatou_check(rho, [x] * 5, x)
    assert report.ok
    assert np.all(report.margin.values == 0)


def test_fatou_vanishing_perturbation(four_atoms, rng):
    space, f = four_atoms
    x = random_position(rng, space, 2)
    for kind, kw in KINDS:
        rho = make(kind, kw, f, 2)
        seq = [x + Position.unit(space, 2, 0, 1.0 / n) for n in range(1, 2001)]
        report = fatou_check(rho, seq, x, conv_tol=1e-3)
        assert report.ok
        assert np.all(report.margin.values <= 2e-3 + 1e-12)
        # without the slack the tail is strictly below the limit value
        assert np.all(report.raw_tail_inf.values < report.rho_limit.values)


def test_fatou_guards(four_atoms, rng):
    space, f = four_atoms
    rho = RiskMeasure.worst_case(f, 1)
    x = random_position(rng, space, 1)
    with pytest.raises(NotConvergent):
        fatou_check(rho, [x + 1.0] * 3, x)
    with pytest.raises(NotBounded):
        fatou_check(rho, [x], x, bound=RandVar.constant(space, 1e-3))
    with pytest.raises(NotBounded):
        fatou_check(rho, [x], x, bound=RandVar(space, [5, 6, 7, 8]))
    with pytest.raises(ValueError):
        fatou_check(rho, [], x)


def test_fatou_non_constant_bound(four_atoms, rng):
    space, f = four_atoms
    rho = RiskMeasure.avar(f, 2, 0.3)
    x = Position(space, np.array([[0.2, 0.1], [0.4, -0.3], [4.5, -6.0], [5.0, 2.0]]))
    seq = [x + Position(space, rng.normal(size=(4, 2)) / n**2) for n in range(1, 60)] + [x]
    report = fatou_check(rho, seq, x)
    assert report.ok and report.local_consistent
    assert len(report.cells) == 2


# ---- weak duality

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(range(3)))
def test_weak_duality(seed, which):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 10))
    space, f = random_space(rng, n, int(rng.integers(1, min(n, 4) + 1)))
    d = int(rng.integers(1, 4))
    kind, kw = KINDS[which]
    rho = make(kind, kw, f, d)
    x = random_position(rng, space, d, 3.0)
    r = evaluate(rho, x).values
    for _ in range(20):
        raw = -rng.exponential(size=(n, d)) * (rng.random((n, d)) < 0.8)
        raw[raw.sum(axis=1) == 0] = -1.0
        means = np.zeros((f.n_blocks, d))
        for k, b in enumerate(f.blocks):
            means[k] = np.dot(f.cond_probs[list(b)], raw[list(b)])
        means[means == 0] = -1.0
        z = DualElement(space, raw / -means[f.block_of])
        alpha = conjugate(rho, z).values
        lhs = pair(x, z, f).values - alpha
        assert np.all(lhs <= r + 1e-8)
