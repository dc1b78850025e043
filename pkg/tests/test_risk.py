import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from condrisk.errors import AxiomViolation, BadCone, BadParameter
from condrisk.lpmod import Cone, Position
from condrisk.randvar import RandVar, cond_expect
from condrisk.risk import RiskMeasure, accept, avar_losses, check_axioms, evaluate
from condrisk.sampling import random_position, random_space

BUILTINS = [
    lambda f, d: RiskMeasure.entropic(f, d, 1.3),
    lambda f, d: RiskMeasure.avar(f, d, 0.3),
    lambda f, d: RiskMeasure.worst_case(f, d),
]


def test_entropic_two_atom_value(two_atoms):
    space, f = two_atoms
    rho = RiskMeasure.entropic(f, 1, 1.0)
    val = evaluate(rho, Position(space, [[0.0], [1.0]]))
    assert np.allclose(val.values, math.log((1 + math.exp(-1)) / 2), rtol=0, atol=1e-14)
    assert np.allclose(val.values, -0.37989, atol=5e-6)


def test_avar_two_atom_value(two_atoms):
    space, f = two_atoms
    rho = RiskMeasure.avar(f, 1, 0.5)
    assert evaluate(rho, Position(space, [[-2.0], [4.0]])).values.tolist() == [2.0, 2.0]


def test_avar_fractional_split():
    losses = np.array([3.0, 1.0, -2.0])
    probs = np.array([0.2, 0.5, 0.3])
    val, q = avar_losses(losses, probs, 0.4)
    # worst 0.2 at 3, then 0.2 of the 1.0 atom
    assert val == pytest.approx((0.2 * 3 + 0.2 * 1) / 0.4)
    assert q.tolist() == pytest.approx([2.5, 1.0, 0.0])
    assert np.dot(probs, q) == pytest.approx(1.0)


@pytest.mark.parametrize("make", BUILTINS)
def test_constant_positions_and_normalisation(make, four_atoms):
    space, f = four_atoms
    for d in (1, 2, 3):
        rho = make(f, d)
        assert np.allclose(evaluate(rho, Position.zeros(space, d)).values, 0.0)
        c = 0.7
        x = Position(space, np.full((space.n, d), c))
        assert np.allclose(evaluate(rho, x).values, -d * c, atol=1e-12)


def test_acceptance_examples(two_atoms, rng):
    space, f = two_atoms
    ent = RiskMeasure.entropic(f, 1, 1.0)
    x = Position(space, [[0.0], [-1.0]])
    assert evaluate(ent, x).values[0] == pytest.approx(math.log((1 + math.e) / 2))
    assert accept(ent, x) == frozenset()
    worst = RiskMeasure.worst_case(f, 2)
    assert accept(worst, Position(space, rng.uniform(0, 1, size=(2, 2)))) == {0}
    for rho in (ent, RiskMeasure.avar(f, 1, 0.25), RiskMeasure.worst_case(f, 1)):
        y = random_position(rng, space, 1, 3.0)
        shifted = y + Position(space, evaluate(rho, y).values[:, None])
        assert accept(rho, shifted) == {0}


def test_parameter_validation(four_atoms):
    _, f = four_atoms
    with pytest.raises(BadParameter):
        RiskMeasure.entropic(f, 1, 0.0)
    with pytest.raises(BadParameter):
        RiskMeasure.avar(f, 1, 1.0)
    with pytest.raises(BadParameter):
        RiskMeasure.entropic(f, 1, [1.0, 2.0, 3.0])
    with pytest.raises(BadCone):
        RiskMeasure.worst_case(f, 2, cone=Cone([[1.0, 0.0]]))
    rho = RiskMeasure.entropic(f, 1, [1.0, 2.0])
    assert rho.gamma.tolist() == [1.0, 2.0]


def test_custom_linear_measure_passes(four_atoms):
    space, f = four_atoms

    def linear(x):
        return -cond_expect(RandVar(space, x.values.sum(axis=1)), f)

    rho = RiskMeasure.custom(f, 2, linear, verify=True, trials=100)
    assert check_axioms(rho, trials=100).ok


def test_custom_squared_measure_fails_cash_invariance(four_atoms):
    space, f = four_atoms

    def squared(x):
        m = cond_expect(RandVar(space, x.values.sum(axis=1)), f)
        return -(m * m)

    rho = RiskMeasure.custom(f, 1, squared)
    report = check_axioms(rho, trials=50)
    assert report.counts()["cash_invariance"] > 0
    with pytest.raises(AxiomViolation) as exc:
        RiskMeasure.custom(f, 1, squared, verify=True, trials=50)
    assert exc.value.report.violations


def test_report_is_deterministic(four_atoms):
    _, f = four_atoms
    rho = RiskMeasure.entropic(f, 2, 0.5)
    a = check_axioms(rho, trials=40, seed=7).to_json()
    b = check_axioms(rho, trials=40, seed=7).to_json()
    assert a == b


@pytest.mark.parametrize("kind,kw", [("entropic", {"gamma": 1.3}), ("avar", {"lam": 0.3}), ("worst_case", {})])
def test_axioms_with_general_cone(kind, kw, four_atoms):
    _, f = four_atoms
    rho = RiskMeasure(kind, f, 2, cone=Cone([[1.0, 1.0], [2.0, 1.0]]), **kw)
    report = check_axioms(rho, trials=100, seed=3)
    assert report.ok
    assert report.checked["monotonicity"] == 100 * f.n_blocks


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([0, 1, 2]))
def test_acceptance_set_blockwise_convex(seed, which):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    space, f = random_space(rng, n, int(rng.integers(1, min(n, 4) + 1)))
    d = int(rng.integers(1, 4))
    rho = BUILTINS[which](f, d)
    acc = []
    while len(acc) < 2:
        y = random_position(rng, space, d, 2.0)
        # cash-shift onto the boundary, then push inward
        shift = f.expand(np.maximum(rho.f.collapse(evaluate(rho, y).values), -10)) / d
        acc.append(y + Position(space, np.repeat(shift[:, None], d, axis=1) + 1e-9))
    a = float(rng.uniform())
    assert accept(rho, acc[0] * a + acc[1] * (1 - a)) == frozenset(range(f.n_blocks))
