import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from residue_engine.errors import (
    DimensionError,
    NonAdmissibleError,
    NonGenericError,
    RegularityError,
)
from residue_engine.exact_algebra import I, ONE, ZERO, LinearForm, MultiPoly, Scalar, rational_det
from residue_engine.localization_model import narrow_cone
from residue_engine.residue_core import (
    ConeSpec,
    MeromorphicTerm,
    RaySpec,
    admissible,
    calibration_constant,
    check_ray_generic,
    jk_residue,
    jk_residue_via_h,
    residue_rank1,
)

from oracles import laurent_residue
from strategies import polys, scalars

E1, E2, E12 = [1, 0], [0, 1], [1, 1]
THREE = [E1, E2, E12]
ORTHANT = ConeSpec.orthant(2)


def omega(lam, forms=THREE, num=None):
    num = MultiPoly.one(len(lam)) if num is None else num
    return MeromorphicTerm(num, forms, lam)


def random_lambda(rng, chamber):
    """A rational lambda with lambda1 > lambda2 > 0 (chamber 'a') or the reverse."""
    while True:
        a = Fraction(rng.randint(1, 400), rng.randint(1, 13))
        b = Fraction(rng.randint(1, 400), rng.randint(1, 13))
        if a != b:
            hi, lo = max(a, b), min(a, b)
            return (hi, lo) if chamber == "a" else (lo, hi)


# ---------------------------------------------------------------------------
# rank one
# ---------------------------------------------------------------------------


def test_rank1_examples():
    psi = MultiPoly.variable(0, 1)
    assert residue_rank1(MeromorphicTerm(MultiPoly.one(1), [[1]], [2])) == ONE
    assert residue_rank1(MeromorphicTerm(MultiPoly.one(1), [([1], 3)], [2])) == Scalar(-2)
    assert residue_rank1(MeromorphicTerm(MultiPoly.one(1), [([1], 2)], [-1])) == ZERO
    assert residue_rank1(MeromorphicTerm(psi * psi, [], [3])) == ZERO


def test_rank1_zero_moment_is_an_error():
    with pytest.raises(RegularityError, match="moment image zero"):
        residue_rank1(MeromorphicTerm(MultiPoly.one(1), [[1]], [0]))


@given(
    polys(nvars=1, max_deg=5),
    st.fractions(min_value=Fraction(1, 7), max_value=10, max_denominator=7),
    st.lists(st.sampled_from([1, -1, 2, -3, Fraction(1, 2)]), min_size=1, max_size=5),
)
def test_rank1_matches_laurent_oracle(num, mu, weights):
    term = MeromorphicTerm(num, [[w] for w in weights], [mu])
    prod = math.prod(Fraction(w) for w in weights)
    assert residue_rank1(term) == laurent_residue(num, mu, prod, len(weights))


@given(
    polys(nvars=1, max_deg=4),
    st.fractions(min_value=-10, max_value=10, max_denominator=7).filter(bool),
    st.lists(st.sampled_from([1, -1, 2, -3]), min_size=1, max_size=4),
)
def test_jk_rank1_agrees_with_residue_rank1(num, mu, weights):
    term = MeromorphicTerm(num, [[w] for w in weights], [mu])
    assert jk_residue([term], ConeSpec([[1]])) == residue_rank1(term)


# ---------------------------------------------------------------------------
# admissibility and rays
# ---------------------------------------------------------------------------


def test_admissible_examples():
    assert admissible([omega((1, 1))], ORTHANT)
    assert not admissible([MeromorphicTerm(MultiPoly.one(2), [[1, -1]], [1, 1])], ORTHANT)
    assert admissible([MeromorphicTerm(MultiPoly.one(2), [], [1, 1])], ORTHANT)


def test_non_admissible_cone_is_rejected():
    term = MeromorphicTerm(MultiPoly.one(2), [[1, -1], E2], [1, 1])
    with pytest.raises(NonAdmissibleError):
        jk_residue([term], ORTHANT)
    with pytest.raises(NonAdmissibleError):
        jk_residue_via_h([term], ORTHANT)


def test_ray_genericity():
    assert check_ray_generic([omega((2, 2))], RaySpec([1, 2]))
    assert not check_ray_generic([omega((2, 2))], RaySpec([1, 1]))
    with pytest.raises(ValueError):
        RaySpec([0, 0])


# ---------------------------------------------------------------------------
# the three-weight worked example
# ---------------------------------------------------------------------------


def test_worked_example_values():
    assert jk_residue([omega((3, 1))], ORTHANT) == I
    assert jk_residue([omega((1, 3))], ORTHANT) == I
    assert jk_residue([omega((1, 1), [E1, E2])], ORTHANT) == ONE
    assert jk_residue([omega((-1, 2), [E1, E2])], ORTHANT) == ZERO


@pytest.mark.parametrize("chamber", ["a", "b"])
def test_worked_example_chambers_both_orders(chamber):
    rng = random.Random(11 if chamber == "a" else 12)
    for _ in range(20):
        lam = random_lambda(rng, chamber)
        expected = I * (lam[1] if chamber == "a" else lam[0])
        assert jk_residue([omega(lam)], ORTHANT, order=[0, 1]) == expected
        assert jk_residue([omega(lam)], ORTHANT, order=[1, 0]) == expected


def test_wall_needs_a_ray():
    with pytest.raises(NonGenericError):
        jk_residue([omega((2, 2))], ORTHANT)
    with pytest.raises(NonGenericError):
        jk_residue_via_h([omega((2, 2))], ORTHANT)
    # the two sides of the wall give i*lambda2 and i*lambda1, which agree here
    assert jk_residue([omega((2, 2))], ORTHANT, RaySpec([1, 0])) == 2 * I
    assert jk_residue([omega((2, 2))], ORTHANT, RaySpec([0, 1])) == 2 * I


def test_ray_selects_the_side_of_a_discontinuous_wall():
    # N = l: H jumps across the boundary ray of the cone
    term = omega((1, 0), [E1, E2])
    assert jk_residue([term], ORTHANT, RaySpec([1, 1])) == ONE
    assert jk_residue([term], ORTHANT, RaySpec([1, -1])) == ZERO
    assert jk_residue_via_h([term], ORTHANT, RaySpec([1, 1])) == ONE
    assert jk_residue_via_h([term], ORTHANT, RaySpec([1, -1])) == ZERO


def test_dimension_checks():
    with pytest.raises(DimensionError):
        jk_residue([omega((1, 1))], ConeSpec([[1]]))
    with pytest.raises(ValueError):
        jk_residue([omega((3, 1))], ORTHANT, order=[0, 0])


# ---------------------------------------------------------------------------
# cross-algorithm agreement and properties
# ---------------------------------------------------------------------------


def test_calibration_constant_is_one():
    assert calibration_constant(1) == ONE
    assert calibration_constant(2) == ONE


def test_h_path_examples():
    assert jk_residue_via_h([omega((1, 1), [E1, E2])], ORTHANT) == ONE
    assert jk_residue_via_h([omega((3, 1))], ORTHANT) == I
    psi1 = MultiPoly.variable(0, 2)
    # d/dlambda1 of i*lambda2 is zero on the chamber lambda1 > lambda2
    assert jk_residue_via_h([omega((3, 1), num=psi1)], ORTHANT) == ZERO
    assert jk_residue([omega((3, 1), num=psi1)], ORTHANT) == ZERO
    # and of i*lambda1 on the other chamber: (-i)(i) = 1
    assert jk_residue([omega((1, 3), num=psi1)], ORTHANT) == ONE


def test_non_unimodular_cross_check():
    term = MeromorphicTerm(MultiPoly.one(2), [[2, 1], [1, -3]], [5, 1])
    cone = ConeSpec([[1, 0], [3, -1]])
    assert jk_residue([term], cone) == jk_residue_via_h([term], cone) == Scalar(Fraction(1, 7))


FORM_POOL = [[1, 0], [0, 1], [1, 1], [1, 2], [2, 1], [1, -1], [2, -1], [1, 3], [3, -2]]


def _random_instance(rng):
    N = rng.randint(2, 4)
    forms = [rng.choice(FORM_POOL) for _ in range(N)]
    while rational_det([forms[0], forms[1]]) == 0:
        forms[1] = rng.choice(FORM_POOL)
    deg = rng.randint(0, N - 2)
    e1 = rng.randint(0, deg)
    num = MultiPoly.monomial((e1, deg - e1), Scalar(rng.randint(1, 3), rng.randint(-1, 1)))
    lam = (Fraction(rng.randint(-30, 30), rng.randint(1, 5)), Fraction(rng.randint(-30, 30), rng.randint(1, 5)))
    return MeromorphicTerm(num, forms, lam)


def _cone_for(term):
    xi = LinearForm([Fraction(7, 5), Fraction(1, 3)])
    return narrow_cone(xi, [f for f, _ in term.denominator])


def test_cross_algorithm_random():
    rng = random.Random(5)
    checked = 0
    while checked < 60:
        term = _random_instance(rng)
        cone = _cone_for(term)
        try:
            a = jk_residue([term], cone)
        except NonGenericError:
            continue
        assert jk_residue_via_h([term], cone) == a
        assert jk_residue([term], cone, order=[1, 0]) == a
        checked += 1


@settings(max_examples=60, deadline=None)
@given(scalars(), scalars(), st.integers(1, 6), st.integers(1, 6))
def test_linearity(a, b, x, y):
    lam = (Fraction(x), Fraction(y, 7))
    psi1 = MultiPoly.variable(0, 2)
    A = omega(lam)
    B = MeromorphicTerm(psi1, [E1, E1, E12, [1, 2]], lam)
    lhs = jk_residue([A.scale(a), B.scale(b)], ORTHANT)
    assert lhs == a * jk_residue([A], ORTHANT) + b * jk_residue([B], ORTHANT)


def test_empty_term_list_is_zero():
    assert jk_residue([], ORTHANT) == ZERO


def test_non_spanning_family_gives_zero():
    term = MeromorphicTerm(MultiPoly.one(2), [E1, ([2, 0], 2)], [3, 1])
    assert jk_residue([term], ORTHANT) == ZERO
    assert jk_residue_via_h([term], ORTHANT) == ZERO
