import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import ball_sup

from condrisk.errors import BadCone, BadExponent, ShapeMismatch
from condrisk.lpmod import Cone, DualElement, Position, cond_norm, cone_geq, dual_norm, pair, portfolio_norm
from condrisk.randvar import RandVar, compare
from condrisk.sampling import random_admissible_dual, random_measurable, random_position, random_space


def test_cond_norm_examples(four_atoms):
    space, f = four_atoms
    x = RandVar(space, [1, -3, 2, 6])
    assert cond_norm(x, f, math.inf).values.tolist() == [3, 3, 6, 6]
    one = space.trivial()
    y = RandVar(space.__class__(("a", "b"), [0.5, 0.5]), [3, 4])
    assert np.allclose(cond_norm(y, y.space.trivial(), 2).values, math.sqrt(12.5))
    for p in (1, 1.5, 2, 7, "inf"):
        assert np.all(cond_norm(RandVar.constant(space, 0), one, p).values == 0)


def test_bad_exponent(four_atoms):
    space, f = four_atoms
    with pytest.raises(BadExponent):
        cond_norm(RandVar.constant(space, 1), f, 0.5)


def test_portfolio_norm_examples(four_atoms):
    space, f = four_atoms
    x = Position(space, np.column_stack([[1, -3, 2, 6], [0, 2, -7, 1]]))
    assert portfolio_norm(x, f, "inf").values.tolist() == [3, 3, 7, 7]
    assert np.all(portfolio_norm(Position.zeros(space, 2), f, 2).values == 0)
    col = Position(space, [[1.0], [-3.0], [2.0], [6.0]])
    for p in (1, 2, 3.5, "inf"):
        assert np.allclose(portfolio_norm(col, f, p).values, cond_norm(col.coordinate(0), f, p).values, rtol=0, atol=1e-12)


def test_portfolio_norm_homogeneous_and_literal_variant(four_atoms):
    space, f = four_atoms
    x = Position(space, np.column_stack([[1, -3, 2, 6], [0, 2, -7, 1]]))
    assert np.allclose(portfolio_norm(x * 3.0, f, 2).values, 3 * portfolio_norm(x, f, 2).values)
    lit = portfolio_norm(x * 4.0, f, 2, literal=True).values
    # the unpowered variant scales like t**(1/p)
    assert np.allclose(lit, 2 * portfolio_norm(x, f, 2, literal=True).values)


def test_pair_examples(two_atoms):
    space, f = two_atoms
    x = Position(space, [[0.0], [1.0]])
    z = DualElement(space, [[-1.0], [-1.0]])
    assert pair(x, z, f).values.tolist() == [-0.5, -0.5]
    assert np.all(pair(x, DualElement(space, np.zeros((2, 1))), f).values == 0)
    e1 = Position.unit(space, 1, 0)
    assert np.allclose(pair(e1, z, f).values, -1.0)
    with pytest.raises(ShapeMismatch):
        pair(x, DualElement(space, np.zeros((2, 2))), f)


def test_cone_geq_examples(two_atoms):
    space, _ = two_atoms
    k = Cone.orthant(2)
    x = Position(space, [[1.0, 0.0], [0.0, 2.0]])
    y = Position.zeros(space, 2)
    assert cone_geq(x, y, k) == {"a", "b"}
    assert cone_geq(x, x, k) == {"a", "b"}
    x2 = Position(space, [[1.0, -1.0], [0.0, 0.0]])
    assert cone_geq(x2, y, k) == {"b"}


def test_cone_validation_and_certificate():
    with pytest.raises(BadCone):
        Cone([[1.0, -1.0]])
    assert Cone.orthant(3).certify_aggregate()
    assert Cone([[1.0, 1.0]]).certify_aggregate()
    # {x1 >= 0} contains (1, -5): the sum is not monotone
    assert not Cone([[1.0, 0.0]]).certify_aggregate()


def test_dual_norm_examples(two_atoms, rng):
    space, f = two_atoms
    z = DualElement(space, [[-2.0], [-1.0]])
    assert np.allclose(dual_norm(z, f, 1).values, 2.0)
    assert np.all(dual_norm(DualElement(space, np.zeros((2, 1))), f, 3).values == 0)
    s2, g = random_space(rng, 5, 2)
    za = random_admissible_dual(rng, g, 1)
    assert np.allclose(dual_norm(za, g, math.inf).values, 1.0)


seeds = st.integers(0, 2**32 - 1)
exponents = st.sampled_from([1.0, 1.25, 1.5, 2.0, 3.0, 6.0, math.inf])


def _instance(seed, max_atoms=8, max_d=3):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_atoms + 1))
    space, f = random_space(rng, n, int(rng.integers(1, n + 1)))
    return rng, space, f, int(rng.integers(1, max_d + 1))


@settings(max_examples=100, deadline=None)
@given(seeds, exponents, exponents)
def test_cond_norm_monotone_in_p(seed, p, q):
    rng, space, f, _ = _instance(seed)
    p, q = min(p, q), max(p, q)
    x = RandVar(space, 3 * rng.normal(size=space.n))
    assert np.all(cond_norm(x, f, p).values <= cond_norm(x, f, q).values + 1e-10)


@settings(max_examples=100, deadline=None)
@given(seeds, exponents)
def test_l0_homogeneity(seed, p):
    rng, space, f, d = _instance(seed)
    x = RandVar(space, rng.normal(size=space.n))
    y = random_measurable(rng, f, -3, 3)
    assert np.allclose(cond_norm(x * y, f, p).values, abs(y).values * cond_norm(x, f, p).values, rtol=1e-10, atol=1e-10)
    X = random_position(rng, space, d)
    assert np.allclose(portfolio_norm(X * y, f, p).values, abs(y).values * portfolio_norm(X, f, p).values, rtol=1e-10, atol=1e-10)


@settings(max_examples=100, deadline=None)
@given(seeds, exponents)
def test_holder(seed, p):
    rng, space, f, d = _instance(seed)
    x = random_position(rng, space, d, 2.0)
    z = DualElement(space, rng.normal(size=(space.n, d)))
    q = 1.0 if math.isinf(p) else (math.inf if p == 1 else p / (p - 1))
    lhs = np.abs(pair(x, z, f).values)
    rhs = portfolio_norm(x, f, p).values * portfolio_norm(z, f, q).values
    assert np.all(lhs <= rhs * (1 + 1e-10) + 1e-12)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_cone_geq_orthant_matches_compare(seed):
    rng, space, f, d = _instance(seed)
    x = Position(space, rng.integers(-2, 3, size=(space.n, d)))
    y = Position(space, rng.integers(-2, 3, size=(space.n, d)))
    expected = set(space.atom_ids)
    for i in range(d):
        expected &= compare(x.coordinate(i), y.coordinate(i), ">=")
    assert cone_geq(x, y, Cone.orthant(d)) == expected


# ---- dual norm against a brute-force sup over the unit ball


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([1.0, 1.5, 2.0, 4.0, math.inf]))
def test_dual_norm_matches_unit_ball_sup(seed, p):
    rng, space, f, d = _instance(seed, max_atoms=4, max_d=2)
    z = DualElement(space, rng.normal(size=(space.n, d)))
    got = f.collapse(dual_norm(z, f, p).values)
    for k, b in enumerate(f.blocks):
        idx = list(b)
        w = np.repeat(f.cond_probs[idx], d)
        ref = ball_sup(z.values[idx].ravel(), w, p)
        assert abs(got[k] - ref) <= 1e-6 * max(1.0, abs(ref))
