import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from mfinvariants.errors import UnsupportedSuperpotential
from mfinvariants.lg import LaurentElement as L, build_model
from mfinvariants.residue import (ResidueIntegrand, boundary_residue_sum, canonical_residue_sum,
                                  res_infinity, res_zero, residue_sum)
from mfinvariants.scalars import NovikovSeries as N
from mfinvariants.toric import cube

from oracles import critical_residue_sum_n1, critical_residue_sum_n3, origin_residue_n3


def T(model, q, t):
    return N.monomial(q, 0, F(t), den=model.den)


def test_infinity_examples(model1):
    assert res_infinity((1,), (1,), model1) == T(model1, -1, 0)
    assert res_infinity((2,), (1,), model1).is_zero()
    for l in range(1, 5):
        for m in range(0, 2 * l - 1):
            assert res_infinity((m,), (l,), model1).is_zero()


def test_zero_examples(model1, model3):
    assert res_zero((0,), (1,), model1).is_zero()
    assert res_zero((-1, 2, -1), (1, 1, 1), model3).is_zero()
    assert res_zero((-1,), (1,), model1) == T(model1, 1, -1)
    assert res_zero((-1, -1, -1), (1, 1, 1), model3) == T(model3, -1, -3)


def test_critical_sum_lemmas(model1):
    for l in range(1, 7):
        assert canonical_residue_sum((2 * l - 1,), (l,), model1) == T(model1, 1, 0)
        for m in range(0, 2 * l - 1):
            assert canonical_residue_sum((m,), (l,), model1).is_zero()


@pytest.mark.parametrize("m,l", list(itertools.product(range(-10, 11), range(1, 6))))
def test_n1_matches_direct_residues(model1, m, l):
    coeff, expo = critical_residue_sum_n1(m, l)
    expected = T(model1, coeff, expo) if coeff else N.zero(model1.den)
    assert canonical_residue_sum((m,), (l,), model1) == expected


@pytest.mark.parametrize("p,l", [
    ((-1, -1, -1), (1, 1, 1)),
    ((-2, -3, -2), (1, 2, 1)),
    ((-3, -2, -2), (2, 1, 1)),
    ((-1, -2, -1), (1, 1, 1)),
    ((-2, -2, -2), (1, 1, 2)),
    ((-5, -5, -5), (1, 1, 1)),
])
def test_n3_origin_matches_iterated_residues(model3, p, l):
    coeff, expo = origin_residue_n3(p, l)
    expected = T(model3, coeff, expo) if coeff else N.zero(model3.den)
    assert res_zero(p, l, model3) == expected


def n3_cases():
    rng = random.Random(7)
    cases = [((0, 0, 1), (1, 1, 1)), ((0, 0, 5), (1, 1, 2)), ((-1, -1, -1), (1, 1, 1))]
    while len(cases) < 40:
        cases.append((tuple(rng.randint(-6, 6) for _ in range(3)),
                      tuple(rng.randint(1, 3) for _ in range(3))))
    return cases


@pytest.mark.parametrize("p,l", n3_cases())
def test_n3_matches_shifted_simple_poles(model3, p, l):
    coeff, expo = critical_residue_sum_n3(p, l)
    expected = T(model3, coeff, expo) if coeff else N.zero(model3.den)
    assert canonical_residue_sum(p, l, model3) == expected


def test_boundary_sum_matches_for_n1(model1):
    for m in range(-10, 11):
        for l in range(1, 6):
            assert boundary_residue_sum((m,), (l,), model1) == canonical_residue_sum((m,), (l,), model1)


def test_boundary_sum_misses_hyperplane_poles(model3):
    # z_3 dz / prod (z_j P - T): four simple critical points, total T^-2
    assert canonical_residue_sum((0, 0, 1), (1, 1, 1), model3) == T(model3, 1, -2)
    assert boundary_residue_sum((0, 0, 1), (1, 1, 1), model3).is_zero()


def homogeneity_exponent(p, l, n):
    # z -> x z, T -> x^(n+1) T scales the form by x^(sum p + n - (n+1) sum l)
    return F(sum(p) + n, n + 1) - sum(l)


@given(st.lists(st.integers(-8, 12), min_size=3, max_size=3),
       st.lists(st.integers(1, 3), min_size=3, max_size=3))
def test_residue_weights(model3, p, l):
    for part in (res_infinity(p, l, model3), res_zero(p, l, model3), canonical_residue_sum(p, l, model3)):
        for a, t, _ in part.items():
            assert a == 0
            assert t == homogeneity_exponent(p, l, 3)


@given(st.integers(1, 4), st.lists(st.integers(1, 3), min_size=3, max_size=3), st.data())
def test_nonnegative_weight_region(model3, l, orders, data):
    orders = tuple(orders)
    total = 3 + l - 1
    if sum(orders) != total:
        return
    floor_sum = 4 * total - 3
    p = data.draw(st.lists(st.integers(-4, 12), min_size=3, max_size=3))
    if sum(p) < floor_sum:
        return
    assert canonical_residue_sum(p, orders, model3).valuation() >= 0


def test_integrand_carries_prefactors(model1):
    # numerator s * T^(1/2) * z^(m) with the Omega shift folded in
    num = L.monomial(model1, (0,), coeff=3, s=1, t=F(1, 2))
    got = residue_sum(ResidueIntegrand(num, (1,)))
    assert got == N.monomial(3, 1, F(1, 2), den=2) * canonical_residue_sum((1,), (1,), model1)


def test_integrand_is_linear(model1):
    a = L.monomial(model1, (2,), coeff=2)
    b = L.monomial(model1, (-1,), coeff=-5, t=1)
    lhs = residue_sum(ResidueIntegrand(a + b, (2,)))
    rhs = residue_sum(ResidueIntegrand(a, (2,))) + residue_sum(ResidueIntegrand(b, (2,)))
    assert lhs == rhs


def test_square_unsupported():
    m = build_model(cube(2))
    with pytest.raises(UnsupportedSuperpotential):
        res_infinity((0, 0), (1, 1), m)
