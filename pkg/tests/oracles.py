"""Independent reference computations used by the tests.

None of these go through the production code paths they check.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import sympy

from mfinvariants.cyclic import Chain, Operations, TensorWord
from mfinvariants.scalars import NovikovSeries


# -- residues by direct one-variable computation (n = 1) ---------------------

_z, _T = sympy.symbols("z T", positive=True)


def critical_residue_sum_n1(m: int, l: int) -> tuple[Fraction, Fraction]:
    """Sum of residues of z^m / (z^2 + T)^l at z = +-i sqrt(T), as (coeff, T-exponent)."""
    f = _z ** m / (_z ** 2 + _T) ** l
    total = sum(sympy.residue(f, _z, r) for r in (sympy.I * sympy.sqrt(_T), -sympy.I * sympy.sqrt(_T)))
    total = sympy.simplify(total)
    if total == 0:
        return Fraction(0), Fraction(0)
    coeff, expo = total.as_coeff_exponent(_T)
    coeff = sympy.nsimplify(coeff)
    assert coeff.is_Rational, total
    return Fraction(int(coeff.p), int(coeff.q)), Fraction(int(sympy.Rational(expo).p), int(sympy.Rational(expo).q))


# -- series by sympy -----------------------------------------------------------

_s = sympy.Symbol("s")


def sympy_series(expr: str, order: int, den: int = 1, t_exp: Fraction = Fraction(0)) -> NovikovSeries:
    """Taylor coefficients of a function of s up to s^order, times T^t_exp."""
    e = sympy.sympify(expr, locals={"s": _s})
    poly = sympy.series(e, _s, 0, order + 1).removeO()
    terms = {}
    for k in range(order + 1):
        q = sympy.Rational(poly.coeff(_s, k))
        if q:
            terms[(k, int(t_exp * den))] = Fraction(int(q.p), int(q.q))
    return NovikovSeries(terms, den)


# -- the free DGA on b with db = b^2 + c ---------------------------------------

class FreeElement:
    """R-combinations of c^k b^j; b odd of degree 1, c central of degree 2."""

    def __init__(self, terms, degree):
        self.terms = {k: v for k, v in terms.items() if v}
        self.degree = degree

    def __matmul__(self, other):
        out = {}
        for (k1, j1), v1 in self.terms.items():
            for (k2, j2), v2 in other.terms.items():
                key = (k1 + k2, j1 + j2)
                out[key] = out.get(key, 0) + v1 * v2
        return FreeElement(out, self.degree + other.degree)

    def differential(self):
        # d(c^k b^j) = c^k sum_i (-1)^i b^i (b^2 + c) b^(j-1-i), nonzero only for odd j
        out = {}
        for (k, j), v in self.terms.items():
            if j % 2:
                for key in ((k, j + 1), (k + 1, j - 1)):
                    out[key] = out.get(key, 0) + v
        return FreeElement(out, self.degree + 1)

    def weight(self):
        return min(2 * k + j for k, j in self.terms)


FREE_OPS = Operations(mul=lambda x, y: x @ y, diff=lambda x: x.differential(),
                      is_zero=lambda x: not x.terms)
FREE_B = FreeElement({(0, 1): 1}, 1)
FREE_ONE = FreeElement({(0, 0): 1}, 0)
FREE_C = FreeElement({(1, 0): 1}, 2)
_c = sympy.Symbol("c")


def free_word_weight(word: TensorWord) -> int:
    return sum(f.weight() for f in word.factors)


def free_monomials(chain: Chain) -> Chain:
    """Multilinear split into monomials, dropping words made only of scalars."""
    out = []
    for w in chain.words:
        parts = [[(FreeElement({key: 1}, f.degree), v) for key, v in f.terms.items()] for f in w.factors]
        for combo in itertools.product(*parts):
            if all(j == 0 for x, _ in combo for _, j in x.terms):
                continue
            coeff = w.scalar
            for _, v in combo:
                coeff *= v
            out.append(TensorWord(tuple(x for x, _ in combo), coeff))
    return Chain(out)


def free_fingerprint(x: FreeElement):
    """Tensor products are over R = Q[c]: the c-power moves into the scalar."""
    ((k, j), v), = x.terms.items()
    return j, v * _c ** k


# -- R-linear decomposition of End(M) words -------------------------------------

@dataclass(frozen=True)
class Unit:
    key: tuple
    degree: int


def r_linear_parts(phi):
    """Split a morphism into R-multiples of: id, traceless diagonal units, other units."""
    den = phi.module.model.den
    size = len(phi.module.basis)
    diag, out = {}, {}
    for i, j, k, v in phi.terms():
        r, m = (k[0], k[1]), k[2:]
        if i == j and not any(m):
            diag.setdefault(r, [Fraction(0)] * size)[i] += v
        else:
            key = ("E", i, j, m)
            out[key] = out.get(key, NovikovSeries.zero(den)) + NovikovSeries({r: v}, den)
    for r, vec in diag.items():
        mean = sum(vec) / size
        if mean:
            out[("ID",)] = out.get(("ID",), NovikovSeries.zero(den)) + NovikovSeries({r: mean}, den)
        for i in range(1, size):
            if vec[i] != mean:
                key = ("H", i)
                out[key] = out.get(key, NovikovSeries.zero(den)) + NovikovSeries({r: vec[i] - mean}, den)
    return [(Unit(key, phi.degree), val) for key, val in sorted(out.items()) if val]


def r_linear_chain(chain: Chain, den: int, keep_scalar: bool = False) -> Chain:
    """Expand over R and drop words lying in C_*(R) (every factor a multiple of id)."""
    words = []
    for w in chain.words:
        for combo in itertools.product(*[r_linear_parts(f) for f in w.factors]):
            if not keep_scalar and all(u.key == ("ID",) for u, _ in combo):
                continue
            coeff = w.scalar if isinstance(w.scalar, NovikovSeries) else NovikovSeries.constant(w.scalar, den)
            for _, v in combo:
                coeff = coeff * v
            words.append(TensorWord(tuple(u for u, _ in combo), coeff))
    return Chain(words)


def unit_fingerprint(u: Unit):
    return u.key, 1


# -- residue at the origin by iterated one-variable residues (n = 3) -----------

_zs = sympy.symbols("z1 z2 z3", positive=True)


def origin_residue_n3(p, l) -> tuple[Fraction, Fraction]:
    """Res_0 of z^p dz / prod_j (z_j z1 z2 z3 - T)^{l_j} (here Tbar = T)."""
    P = _zs[0] * _zs[1] * _zs[2]
    f = sympy.Integer(1)
    for z, pj, lj in zip(_zs, p, l):
        f = f * z ** pj / (z * P - _T) ** lj
    for z in reversed(_zs):
        f = sympy.residue(f, z, 0)
    f = sympy.simplify(f)
    if f == 0:
        return Fraction(0), Fraction(0)
    coeff, expo = f.as_coeff_exponent(_T)
    return Fraction(int(coeff.p), int(coeff.q)), Fraction(int(expo))


# -- critical-point residue sums via shifted simple poles (n = 3) ---------------

_cs = sympy.symbols("c1 c2 c3")


def critical_residue_sum_n3(p, l) -> tuple[Fraction, Fraction]:
    """Sum of Grothendieck residues of z^p dz / prod_j (z_j P - T)^{l_j} over the critical points.

    Simple poles of z_j P - T - c_j sit at z_j = (T + c_j)/P with
    P^4 = prod (T + c_j); there the residue is f / det(dg/dz).  Raising the
    pole orders is (1/(l_j - 1)!) d^(l_j - 1)/dc_j^(l_j - 1) at c = 0.
    """
    P = _zs[0] * _zs[1] * _zs[2]
    g = [z * P - _T - c for z, c in zip(_zs, _cs)]
    jac = sympy.Matrix([[sympy.diff(gi, zk) for zk in _zs] for gi in g]).det()
    f = _zs[0] ** p[0] * _zs[1] ** p[1] * _zs[2] ** p[2]
    R = (_T + _cs[0]) * (_T + _cs[1]) * (_T + _cs[2])
    total = 0
    for zeta in (1, sympy.I, -1, -sympy.I):
        root = zeta * R ** sympy.Rational(1, 4)
        point = {z: (_T + c) / root for z, c in zip(_zs, _cs)}
        total += (f / jac).subs(point)
    for c, lj in zip(_cs, l):
        total = sympy.diff(total, c, lj - 1) / sympy.factorial(lj - 1)
    total = sympy.simplify(sympy.expand(total.subs({c: 0 for c in _cs})))
    if total == 0:
        return Fraction(0), Fraction(0)
    coeff, expo = total.as_coeff_exponent(_T)
    return Fraction(int(coeff.p), int(coeff.q)), Fraction(int(expo.p), int(expo.q))
