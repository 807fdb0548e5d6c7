"""The Landau-Ginzburg algebra in dense Laurent coordinates.

Facets chosen as coordinates become the variables ``z_1..z_n``; every other
facet variable is rewritten as a signed power of ``T`` times a Laurent
monomial, using the defining relations of the algebra.

Elements are stored flat: a dict from ``(s_exp, t_num, m_1, ..., m_n)`` to a
rational coefficient, where the ``T`` exponent is ``t_num / den``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from operator import add
from typing import Mapping, Sequence

from .errors import InputError
from .scalars import NovikovSeries, as_fraction, fraction_text
from .toric import (KernelLattice, Polytope, SpinData, functional_value, kernel_lattice,
                    spin_analysis, validate_delzant, PolytopeSpec)

Key = tuple[int, ...]
Poly = dict[Key, Fraction]


# -- flat polynomial helpers (shared with dirac and trace) --------------

def poly_add(p: Mapping, q: Mapping, scale=1) -> dict:
    out = dict(p)
    for k, c in q.items():
        v = out.get(k, 0) + scale * c
        if v:
            out[k] = v
        else:
            out.pop(k, None)
    return out


def poly_iadd(acc: dict, q: Mapping, scale=1) -> None:
    for k, c in q.items():
        v = acc.get(k, 0) + scale * c
        if v:
            acc[k] = v
        else:
            del acc[k]


def poly_mul(p: Mapping, q: Mapping, max_s: int | None = None) -> dict:
    out: dict = {}
    for k1, c1 in p.items():
        for k2, c2 in q.items():
            if max_s is not None and k1[0] + k2[0] > max_s:
                continue
            k = tuple(map(add, k1, k2))
            v = out.get(k, 0) + c1 * c2
            if v:
                out[k] = v
            else:
                del out[k]
    return out


def poly_scale(p: Mapping, c) -> dict:
    if not c:
        return {}
    return {k: v * c for k, v in p.items()}


def poly_shift(p: Mapping, key: Key, c=1) -> dict:
    """Multiply every term by the monomial ``c * key``."""
    return {tuple(map(add, k, key)): v * c for k, v in p.items()}


# -- model -----------------------------------------------------------------

@dataclass(frozen=True)
class FacetMonomial:
    sign: int
    t_num: int
    exps: tuple[int, ...]

    def key(self) -> Key:
        return (0, self.t_num) + self.exps


@dataclass(frozen=True, eq=False)
class ModelHandle:
    polytope: Polytope
    kernel: KernelLattice
    spin: SpinData
    n: int
    d: int
    den: int
    coords: tuple[int, ...]
    facets: tuple[FacetMonomial, ...]
    vertex_values: tuple[tuple[Fraction, ...], ...]   # lambda_i - <p, v_i> per vertex
    t_degree: Fraction | None
    is_simplex: bool
    tbar: tuple[int, int] | None                      # (sign, t_num) of the simplex constant
    name: str = ""

    def one_key(self) -> Key:
        return (0,) * (self.n + 2)

    def facet_poly(self, i: int) -> Poly:
        f = self.facets[i]
        return {f.key(): Fraction(f.sign)}

    def variable_values(self, facet_values: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(facet_values[c] for c in self.coords)

    def key_degree(self, key: Key) -> Fraction | None:
        """Z-degree of s^a T^t z^m, or None when T has no well-defined degree."""
        a, t = key[0], key[1]
        deg = Fraction((1 - self.n) * a + 2 * sum(key[2:]))
        if t:
            if self.t_degree is None:
                return None
            deg += self.t_degree * Fraction(t, self.den)
        return deg

    def point_values(self, point: Sequence) -> tuple[Fraction, ...]:
        """Facet values of an interior point given in polytope or facet coordinates."""
        point = tuple(as_fraction(x) for x in point)
        if len(point) == self.n:
            values = self.polytope.facet_values(point)
        elif len(point) == self.d:
            values = point
            x = _point_from_facet_values(self, values)
            if x is None or self.polytope.facet_values(x) != values:
                raise InputError("facet coordinates do not describe a point of the polytope")
        else:
            raise InputError(f"point must have {self.n} or {self.d} coordinates")
        if not all(v > 0 for v in values):
            raise InputError("point is not in the interior of the polytope")
        return values


def _point_from_facet_values(model: ModelHandle, values) -> tuple[Fraction, ...] | None:
    import sympy
    rows = [model.polytope.normals[c] for c in model.coords]
    rhs = [model.polytope.offsets[c] - values[c] for c in model.coords]
    m = sympy.Matrix(rows)
    sol = m.LUsolve(sympy.Matrix([sympy.Rational(r.numerator, r.denominator) for r in rhs]))
    return tuple(Fraction(int(x.p), int(x.q)) for x in sol)


def build_model(spec: PolytopeSpec | Polytope) -> ModelHandle:
    poly = spec if isinstance(spec, Polytope) else validate_delzant(spec)
    kl = kernel_lattice(poly)
    sd = spin_analysis(kl)
    n, d = poly.dim, poly.n_facets
    den = kl.den

    facets: list[FacetMonomial | None] = [None] * d
    for pos, c in enumerate(kl.coords):
        facets[c] = FacetMonomial(1, 0, tuple(1 if j == pos else 0 for j in range(n)))
    for gamma, k, h in zip(kl.basis, kl.eliminated, kl.area):
        # z_k * prod z_c^{gamma_c} = (-1)^sigma T^h
        sign = -1 if functional_value(sd.sigma, kl, gamma) else 1
        t = h * den
        if t.denominator != 1:
            raise InputError("area of a kernel generator lies outside the value group")
        facets[k] = FacetMonomial(sign, int(t), tuple(-gamma[c] for c in kl.coords))

    vertex_values = tuple(poly.facet_values(v) for v in poly.vertices)
    is_simplex = d == n + 1
    tbar = None
    if is_simplex:
        f = facets[kl.eliminated[0]]
        if all(e == -1 for e in f.exps):
            tbar = (f.sign, f.t_num)
        else:
            is_simplex = False
    return ModelHandle(poly, kl, sd, n, d, den, kl.coords, tuple(facets), vertex_values,
                       kl.t_degree, is_simplex, tbar, poly.spec.name)


# -- elements -------------------------------------------------------------

class LaurentElement:
    """A Laurent polynomial in z_1..z_n with truncated Novikov coefficients."""

    __slots__ = ("model", "terms")

    def __init__(self, model: ModelHandle, terms: Mapping[Key, Fraction] | None = None):
        self.model = model
        self.terms: Poly = {k: Fraction(v) for k, v in (terms or {}).items() if v}

    # constructors

    @classmethod
    def constant(cls, model: ModelHandle, value=1) -> "LaurentElement":
        return cls(model, {model.one_key(): value})

    @classmethod
    def monomial(cls, model: ModelHandle, exps: Sequence[int], coeff=1, s: int = 0,
                 t: Fraction | int = 0) -> "LaurentElement":
        tn = as_fraction(t) * model.den
        if tn.denominator != 1:
            raise InputError(f"T-exponent {t} not in the value group")
        return cls(model, {(s, int(tn)) + tuple(exps): coeff})

    @classmethod
    def variable(cls, model: ModelHandle, j: int) -> "LaurentElement":
        """z_j for a coordinate index 1 <= j <= n."""
        return cls.monomial(model, [1 if i == j - 1 else 0 for i in range(model.n)])

    @classmethod
    def facet(cls, model: ModelHandle, i: int) -> "LaurentElement":
        return cls(model, model.facet_poly(i))

    @classmethod
    def from_series(cls, model: ModelHandle, x: NovikovSeries) -> "LaurentElement":
        x = x.with_den(model.den) if model.den % x.den == 0 else x
        if x.den != model.den:
            raise InputError("series exponent outside the model's value group")
        zeros = (0,) * model.n
        return cls(model, {(a, t) + zeros: q for (a, t), q in x.terms().items()})

    # arithmetic

    def _check(self, other: "LaurentElement") -> None:
        if other.model is not self.model:
            raise InputError("elements belong to different models")

    def _lift(self, other) -> "LaurentElement":
        if isinstance(other, LaurentElement):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return LaurentElement.constant(self.model, other)
        if isinstance(other, NovikovSeries):
            return LaurentElement.from_series(self.model, other)
        raise TypeError(f"cannot combine LaurentElement with {type(other).__name__}")

    def __add__(self, other):
        other = self._lift(other)
        return LaurentElement(self.model, poly_add(self.terms, other.terms))

    __radd__ = __add__

    def __neg__(self):
        return LaurentElement(self.model, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        return LaurentElement(self.model, poly_add(self.terms, other.terms, -1))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        return LaurentElement(self.model, poly_mul(self.terms, other.terms))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "LaurentElement":
        out = LaurentElement.constant(self.model)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        return self.terms == other.terms

    __hash__ = None

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def truncate_s(self, max_s: int) -> "LaurentElement":
        return LaurentElement(self.model, {k: v for k, v in self.terms.items() if k[0] <= max_s})

    def coefficients(self) -> dict[tuple[int, ...], NovikovSeries]:
        grouped: dict[tuple[int, ...], dict] = {}
        for k, v in self.terms.items():
            grouped.setdefault(k[2:], {})[(k[0], k[1])] = v
        return {m: NovikovSeries(c, self.model.den) for m, c in grouped.items()}

    def scalar_part(self) -> NovikovSeries:
        """The coefficient of z^0."""
        zeros = (0,) * self.model.n
        return self.coefficients().get(zeros, NovikovSeries.zero(self.model.den))

    def derivative(self, j: int) -> "LaurentElement":
        """Formal d/dz_j for 1 <= j <= n."""
        pos = j + 1
        out = {}
        for k, v in self.terms.items():
            e = k[pos]
            if e:
                nk = k[:pos] + (e - 1,) + k[pos + 1:]
                out[nk] = v * e
        return LaurentElement(self.model, out)

    def degrees(self) -> set:
        return {self.model.key_degree(k) for k in self.terms}

    # valuations

    def valuation_at(self, point: Sequence) -> Fraction | float:
        values = self.model.point_values(point)
        return _min_weight(self.model, self.terms, self.model.variable_values(values))

    def norm(self) -> Fraction | float:
        best = math.inf
        for values in self.model.vertex_values:
            best = min(best, _min_weight(self.model, self.terms, self.model.variable_values(values)))
        return best

    # rendering

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(term_text(self.model, k, v) for k, v in sorted(self.terms.items()))

    def __repr__(self) -> str:
        return f"LaurentElement({self.to_text()})"


def term_weight(model: ModelHandle, key: Key, zvals: Sequence[Fraction]) -> Fraction:
    w = key[0] + Fraction(key[1], model.den)
    for e, v in zip(key[2:], zvals):
        if e:
            w += e * v
    return w


def _min_weight(model: ModelHandle, terms: Mapping[Key, Fraction], zvals) -> Fraction | float:
    if not terms:
        return math.inf
    return min(term_weight(model, k, zvals) for k in terms)


def term_text(model: ModelHandle, key: Key, coeff: Fraction) -> str:
    parts = [fraction_text(coeff)]
    if key[0]:
        parts.append(f"s^{key[0]}")
    if key[1]:
        parts.append(f"T^({fraction_text(Fraction(key[1], model.den))})")
    for j, e in enumerate(key[2:], start=1):
        if e:
            parts.append(f"z{j}^{e}" if e != 1 else f"z{j}")
    return " * ".join(parts)


def superpotential(model: ModelHandle) -> LaurentElement:
    out: Poly = {}
    for i in range(model.d):
        poly_iadd(out, model.facet_poly(i))
    return LaurentElement(model, out)


def partials(model: ModelHandle) -> list[LaurentElement]:
    w = superpotential(model)
    return [w.derivative(j) for j in range(1, model.n + 1)]
