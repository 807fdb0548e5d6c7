from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from mfinvariants.errors import InputError, NotDelzant, NotSpin
from mfinvariants.toric import (PolytopeSpec, cube, free_class, is_free, kernel_lattice,
                                parse_polytope, simplex, spin_analysis, spin_structures,
                                validate_delzant)


def lattice(spec):
    return kernel_lattice(validate_delzant(spec))


def test_interval_vertices():
    p = validate_delzant(PolytopeSpec(1, ((-1,), (1,)), (F(0), F(1))))
    assert sorted(p.vertices) == [(0,), (1,)]


def test_simplex3_is_delzant():
    p = validate_delzant(simplex(3))
    assert len(p.vertices) == 4
    assert p.normals[-1] == (1, 1, 1)


def test_non_primitive_square_rejected():
    square = PolytopeSpec(2, ((-1, 0), (1, 0), (0, -1), (0, 2)), (F(0), F(1), F(0), F(1)))
    with pytest.raises(NotDelzant, match="primitive"):
        validate_delzant(square)


def test_non_unimodular_vertex_rejected():
    # the vertex at the origin-free corner has normals (1,0), (1,2): determinant 2
    tri = PolytopeSpec(2, ((-1, 0), (0, -1), (1, 2)), (F(0), F(0), F(2)))
    with pytest.raises(NotDelzant):
        validate_delzant(tri)


def test_parse_errors_name_the_field():
    with pytest.raises(InputError, match="facets\\[1\\]"):
        parse_polytope({"dim": 1, "facets": [{"normal": [1], "offset": "1"}, {"normal": [1]}]})
    with pytest.raises(InputError, match="'dim'"):
        parse_polytope({"facets": []})


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_simplex_kernel_is_diagonal(n):
    kl = lattice(simplex(n))
    assert kl.basis == ((1,) * (n + 1),)
    assert kl.grading == (2 * (n + 1),)
    assert kl.area == (F(1),)


def test_square_kernel():
    kl = lattice(cube(2))
    assert set(kl.basis) == {(1, 1, 0, 0), (0, 0, 1, 1)}


@pytest.mark.parametrize("spec", [simplex(1), simplex(2), simplex(3), simplex(5), cube(2), cube(3)])
def test_kernel_lies_in_kernel(spec):
    kl = lattice(spec)
    p = kl.polytope
    assert kl.rank + p.dim == p.n_facets
    for g in kl.basis:
        assert kl.contains(g)
        assert all(sum(b * v[c] for b, v in zip(g, p.normals)) == 0 for c in range(p.dim))


def test_simplex3_spin():
    sd = spin_analysis(lattice(simplex(3)))
    assert sd.q_values == (0,)
    assert sd.orientable and sd.comb_rel_spin


def test_simplex1_background_class():
    sd = spin_analysis(lattice(simplex(1)))
    assert sd.q_values == (0,)
    assert sd.sigma == (1,)


def test_simplex2_not_orientable():
    kl = lattice(simplex(2))
    assert kl.grading == (6,)
    assert not spin_analysis(kl).orientable


@pytest.mark.parametrize("n,spin,q,sigma", [
    (1, True, (0,), (1,)),
    (2, False, (0,), (0,)),
    (3, True, (0,), (0,)),
    (5, True, (1,), (1,)),
])
def test_simplex_spin_classification(n, spin, q, sigma):
    sd = spin_analysis(lattice(simplex(n)))
    assert sd.comb_rel_spin is spin
    assert sd.q_values == q
    assert sd.sigma == sigma


@pytest.mark.parametrize("n", [1, 3, 5])
def test_simplex_spin_structures(n):
    kl = lattice(simplex(n))
    ss = spin_structures(spin_analysis(kl), kl)
    assert ss.chosen == (0,)
    assert len(ss.orbit) == 2
    assert ss.act((1,), ss.chosen) == (1,)


def test_spin_structures_need_spin():
    kl = lattice(simplex(2))
    with pytest.raises(NotSpin):
        spin_structures(spin_analysis(kl), kl)


def test_every_class_free_for_square():
    kl = lattice(cube(2))
    assert all(is_free(s, kl) for s in [(0, 0), (1, 0), (0, 1), (1, 1)])


@pytest.mark.parametrize("spec", [simplex(1), simplex(3), simplex(5), cube(2), cube(3)])
def test_chosen_free_class_is_free(spec):
    kl = lattice(spec)
    assert is_free(free_class(spin_analysis(kl)), kl)


@pytest.mark.parametrize("spec", [simplex(1), simplex(2), simplex(3), cube(2), cube(3)])
def test_quadratic_form_polarizes(spec):
    kl = lattice(spec)
    sd = spin_analysis(kl)
    vecs = list(kl.basis) + [tuple(a + b for a, b in zip(x, y)) for x in kl.basis for y in kl.basis]
    for x in vecs:
        for y in vecs:
            xy = tuple(a + b for a, b in zip(x, y))
            assert (sd.q(xy) + sd.q(x) + sd.q(y)) % 2 == sd.bilinear(x, y)
    if sd.comb_rel_spin:
        assert all(sd.bilinear(x, y) == 0 for x in kl.basis for y in kl.basis)


elementary = st.tuples(st.sampled_from([(0, 1), (1, 0)]), st.sampled_from([-1, 1]))


@given(st.lists(elementary, min_size=1, max_size=6), st.sampled_from([cube(2), cube(3)]))
def test_orientability_independent_of_basis(ops, spec):
    kl = lattice(spec)
    basis = [list(g) for g in kl.basis]
    for (i, j), sign in ops:
        if max(i, j) < len(basis):
            basis[i] = [a + sign * b for a, b in zip(basis[i], basis[j])]
    p = kl.polytope
    grading = [sum(2 * b for b in g) for g in basis]   # every facet has degree 2
    assert all(g % 4 == 0 for g in grading) == spin_analysis(kl).orientable
