"""Clifford algebra, Dirac module and its endomorphisms.

Generators ``e_i`` (one per facet) square to the facet variable ``z_i`` and
either commute or anticommute pairwise.  Subsets of facets are bitmasks; a
Clifford element is a dict ``mask -> Poly``.  The Dirac module is the quotient
by the right ideal generated by the kernel-lattice relations, realised on a
transversal of ``F_2^d / span(odd supports)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from operator import add
from typing import Iterable, Mapping, Sequence

from .errors import ConsistencyFailure, InputError, NotSpin
from .lg import (Key, LaurentElement, ModelHandle, Poly, poly_add, poly_iadd, poly_mul,
                 poly_scale, poly_shift, superpotential, term_text)
from .scalars import NovikovSeries, fraction_text
from .toric import commutation_flags, free_class, functional_value, is_free, opposite_pairs


def bits(mask: int) -> list[int]:
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def facet_power(model: ModelHandle, i: int, e: int) -> tuple[int, Key]:
    """z_i^e as (sign, key)."""
    f = model.facets[i]
    sign = f.sign ** (e % 2) if f.sign < 0 else 1
    return sign, (0, f.t_num * e) + tuple(x * e for x in f.exps)


class CliffordAlgebra:
    def __init__(self, model: ModelHandle, flags: Sequence[Sequence[int]]):
        self.model = model
        self.d = model.d
        # swap[i][j] = sign picked up when moving e_j left past e_i
        self.swap = [[-1 if flags[i][j] else 1 for j in range(self.d)] for i in range(self.d)]
        self._cache: dict[tuple[int, int], tuple[int, Key, int]] = {}

    def mono_mul(self, left: int, right: int) -> tuple[int, Key, int]:
        """e_left * e_right = sign * z^key * e_result."""
        hit = self._cache.get((left, right))
        if hit is not None:
            return hit
        model = self.model
        sign = 1
        key = model.one_key()
        current = bits(left)
        for j in bits(right):
            for i in current:
                if i > j:
                    sign *= self.swap[i][j]
            if j in current:
                current.remove(j)
                s, k = facet_power(model, j, 1)
                sign *= s
                key = tuple(map(add, key, k))
            else:
                current.append(j)
                current.sort()
        mask = 0
        for i in current:
            mask |= 1 << i
        out = (sign, key, mask)
        self._cache[(left, right)] = out
        return out

    def mul(self, x: Mapping[int, Poly], y: Mapping[int, Poly]) -> dict[int, Poly]:
        out: dict[int, Poly] = {}
        for m1, p1 in x.items():
            for m2, p2 in y.items():
                sign, key, mask = self.mono_mul(m1, m2)
                prod = poly_shift(poly_mul(p1, p2), key, sign)
                acc = out.setdefault(mask, {})
                poly_iadd(acc, prod)
                if not acc:
                    del out[mask]
        return out


def _lex_key(mask: int, d: int) -> int:
    """Order subsets by characteristic vector, facet 0 most significant."""
    return sum(1 << (d - 1 - i) for i in bits(mask))


@dataclass
class Relation:
    odd: int                 # odd support of gamma as a mask
    half: Key                # z^{floor(gamma/2)} * T^{-h/2} as a key
    sign: int                # (-1)^{spin structure}


class DiracModule:
    """The Dirac module, its operator D and the constant w."""

    def __init__(self, model: ModelHandle, spin_structure: Sequence[int] | None = None):
        sd, kl = model.spin, model.kernel
        if not sd.comb_rel_spin:
            raise NotSpin("polytope is not combinatorially relatively spin")
        sigma_prime = free_class(sd)
        if not is_free(sigma_prime, kl):
            raise NotSpin("background class is not free")
        self.model = model
        self.n = model.n
        self.d = model.d
        self.spin_structure = tuple(spin_structure) if spin_structure else tuple(0 for _ in kl.basis)
        self.algebra = CliffordAlgebra(model, commutation_flags(kl, sigma_prime))

        self.relations = []
        for gamma, h, s in zip(kl.basis, kl.area, self.spin_structure):
            odd = sum(1 << i for i, g in enumerate(gamma) if g % 2)
            key = list(model.one_key())
            sign = -1 if s else 1
            for i, g in enumerate(gamma):
                if g // 2:
                    fs, fk = facet_power(model, i, g // 2)
                    sign *= fs
                    key = list(map(add, key, fk))
            th = h * model.den / 2
            if th.denominator != 1:
                raise ConsistencyFailure("half area outside value group")
            key[1] -= int(th)
            self.relations.append(Relation(odd, tuple(key), sign))

        # span of odd supports, with the combination producing each element
        span: dict[int, tuple[int, ...]] = {0: ()}
        for k, rel in enumerate(self.relations):
            for mask, combo in list(span.items()):
                span.setdefault(mask ^ rel.odd, combo + (k,))
        self._span = span

        reps = set()
        self._rep: dict[int, tuple[int, tuple[int, ...]]] = {}
        for mask in range(1 << self.d):
            best = min(((mask ^ w, combo) for w, combo in span.items()),
                       key=lambda item: _lex_key(item[0], self.d))
            self._rep[mask] = best
            reps.add(best[0])
        self.basis = sorted(reps, key=lambda m: (bin(m).count("1"), bits(m)))
        if len(self.basis) != 2 ** self.n:
            raise ConsistencyFailure(f"module rank {len(self.basis)} != 2^{self.n}")
        self.index = {m: i for i, m in enumerate(self.basis)}
        self.degrees = tuple(bin(m).count("1") for m in self.basis)
        self.parities = tuple(deg % 2 for deg in self.degrees)
        self.labels = tuple(basis_label(m) for m in self.basis)
        self._reduced: dict[int, tuple[Poly, int]] = {}

        # valuations of basis elements at each vertex
        self.vertex_data = []
        for values in model.vertex_values:
            zvals = model.variable_values(values)
            bvals = tuple(sum((values[i] for i in bits(m)), Fraction(0)) / 2 for m in self.basis)
            self.vertex_data.append((zvals, bvals))

        self.D = EndMorphism(self, self._left_mult_generators(), 1)
        self.w = self._w_constant()
        self._partials: dict[int, EndMorphism] = {}
        self.W = superpotential(model)
        square = self.D @ self.D
        expected = self.identity() * (self.W - LaurentElement.from_series(model, self.w))
        if square != expected:
            raise ConsistencyFailure("D^2 != (W - w) id")

    # -- reduction ----------------------------------------------------

    def apply_relation(self, x: Mapping[int, Poly], k: int, inverse: bool = False) -> dict[int, Poly]:
        """x * chi(gamma_k) (or its inverse), which is congruent to x in the module."""
        rel = self.relations[k]
        alg = self.algebra
        if not inverse:
            right = {rel.odd: {rel.half: Fraction(rel.sign)}}
            return alg.mul(x, right)
        sign, key, _ = alg.mono_mul(rel.odd, rel.odd)   # e_O^2 = sign * z^key
        inv_key = tuple(-a - b for a, b in zip(rel.half, key))
        right = {rel.odd: {inv_key: Fraction(rel.sign * sign)}}
        return alg.mul(x, right)

    def reduce_mask(self, mask: int, order: Iterable[int] | None = None,
                    inverse: Iterable[bool] | None = None) -> tuple[Poly, int]:
        """Normal form of e_mask in the module: (coefficient, basis mask)."""
        if order is None and inverse is None:
            hit = self._reduced.get(mask)
            if hit is not None:
                return hit
        rep, combo = self._rep[mask]
        steps = list(combo) if order is None else [k for k in order if k in combo]
        flags = list(inverse) if inverse is not None else [False] * len(steps)
        x = {mask: {self.model.one_key(): Fraction(1)}}
        for k, inv in zip(steps, flags):
            x = self.apply_relation(x, k, inv)
        if list(x) != [rep]:
            raise ConsistencyFailure(f"reduction of {bits(mask)} did not reach {bits(rep)}")
        out = (x[rep], rep)
        if order is None and inverse is None:
            self._reduced[mask] = out
        return out

    def reduce(self, x: Mapping[int, Poly]) -> dict[int, Poly]:
        """Normal form of a Clifford element in the module basis (by index)."""
        out: dict[int, Poly] = {}
        for mask, p in x.items():
            coeff, rep = self.reduce_mask(mask)
            acc = out.setdefault(self.index[rep], {})
            poly_iadd(acc, poly_mul(p, coeff))
            if not acc:
                del out[self.index[rep]]
        return out

    def left_mult(self, x: Mapping[int, Poly], degree: int | None = None) -> "EndMorphism":
        entries: dict[tuple[int, int], Poly] = {}
        for col, bmask in enumerate(self.basis):
            image = self.reduce(self.algebra.mul(x, {bmask: {self.model.one_key(): Fraction(1)}}))
            for row, p in image.items():
                entries[(row, col)] = p
        return EndMorphism(self, entries, degree)

    def _left_mult_generators(self) -> dict:
        one = self.model.one_key()
        total: dict[int, Poly] = {1 << i: {one: Fraction(1)} for i in range(self.d)}
        return self.left_mult(total).entries

    def generator(self, i: int) -> "EndMorphism":
        return self.left_mult({1 << i: {self.model.one_key(): Fraction(1)}}, 1)

    def _w_constant(self) -> NovikovSeries:
        model, kl = self.model, self.model.kernel
        terms: dict[tuple[int, int], Fraction] = {}
        for i, j in opposite_pairs(kl):
            beta = tuple(1 if k in (i, j) else 0 for k in range(self.d))
            if functional_value(model.spin.sigma, kl, beta):
                continue
            sign = -1 if functional_value(self.spin_structure, kl, beta) else 1
            h = sum(b * lam for b, lam in zip(beta, model.polytope.offsets)) / 2
            key = (0, int(h * model.den))
            terms[key] = terms.get(key, 0) - 2 * sign
        return NovikovSeries(terms, model.den)

    # -- morphisms ----------------------------------------------------

    def identity(self) -> "EndMorphism":
        one = self.model.one_key()
        return EndMorphism(self, {(i, i): {one: Fraction(1)} for i in range(len(self.basis))}, 0)

    def zero(self, degree: int | None = None) -> "EndMorphism":
        return EndMorphism(self, {}, degree)

    def scalar(self, c: NovikovSeries, degree: int | None = None) -> "EndMorphism":
        return self.identity() * c if degree is None else (self.identity() * c).with_degree(degree)

    def partial_D(self, j: int) -> "EndMorphism":
        if not 1 <= j <= self.n:
            raise InputError(f"coordinate index {j} out of range 1..{self.n}")
        hit = self._partials.get(j)
        if hit is None:
            hit = self.D.partial(j)
            self._partials[j] = hit
        return hit

    def h0(self) -> "EndMorphism":
        """Left multiplication by -z_1...z_n T^{-h/2} e_0 (simplex only)."""
        model = self.model
        if not model.is_simplex:
            raise InputError("h0 is only defined for simplices")
        k = model.kernel.eliminated[0]
        h = model.kernel.area[0] * model.den / 2
        key = (0, -int(h)) + (1,) * self.n
        return self.left_mult({1 << k: {key: Fraction(-1)}}, self.n)


def basis_label(mask: int) -> str:
    idx = bits(mask)
    return "1" if not idx else "e" + "e".join(str(i) for i in idx)


class EndMorphism:
    """A matrix over the Laurent algebra in the module basis.

    ``entries[(row, col)]`` is the coefficient of basis[row] in the image of
    basis[col].
    """

    __slots__ = ("module", "entries", "degree")

    def __init__(self, module: DiracModule, entries: Mapping[tuple[int, int], Poly],
                 degree: int | None = None):
        self.module = module
        self.entries = {ij: dict(p) for ij, p in entries.items() if p}
        self.degree = degree if degree is not None else self._infer_degree()

    def _infer_degree(self) -> int | None:
        model, degs = self.module.model, self.module.degrees
        found = None
        for (i, j), p in self.entries.items():
            for key in p:
                kd = model.key_degree(key)
                if kd is None:
                    return None
                deg = kd + degs[i] - degs[j]
                if found is None:
                    found = deg
                elif deg != found:
                    return None
        return None if found is None else int(found)

    def with_degree(self, degree: int) -> "EndMorphism":
        return EndMorphism(self.module, self.entries, degree)

    def check_degree(self) -> None:
        if self.degree is None:
            return
        model, degs = self.module.model, self.module.degrees
        for (i, j), p in self.entries.items():
            for key in p:
                kd = model.key_degree(key)
                if kd is not None and kd + degs[i] - degs[j] != self.degree:
                    raise ConsistencyFailure("morphism is not homogeneous of its tagged degree")

    @property
    def parity(self) -> int:
        if self.degree is None:
            raise InputError("morphism is not homogeneous")
        return self.degree % 2

    # -- algebra --------------------------------------------------------

    def _same(self, other: "EndMorphism") -> None:
        if other.module is not self.module:
            raise InputError("morphisms act on different modules")

    def __add__(self, other: "EndMorphism") -> "EndMorphism":
        self._same(other)
        out = {ij: dict(p) for ij, p in self.entries.items()}
        for ij, p in other.entries.items():
            acc = out.setdefault(ij, {})
            poly_iadd(acc, p)
        deg = self.degree if self.degree == other.degree or not other.entries else (
            other.degree if not self.entries else None)
        return EndMorphism(self.module, out, deg)

    def __neg__(self) -> "EndMorphism":
        return EndMorphism(self.module, {ij: {k: -v for k, v in p.items()}
                                         for ij, p in self.entries.items()}, self.degree)

    def __sub__(self, other: "EndMorphism") -> "EndMorphism":
        return self + (-other)

    def compose(self, other: "EndMorphism", max_s: int | None = None) -> "EndMorphism":
        self._same(other)
        rows: dict[int, list[tuple[int, Poly]]] = {}
        for (k, j), p in other.entries.items():
            rows.setdefault(k, []).append((j, p))
        out: dict[tuple[int, int], Poly] = {}
        for (i, k), p in self.entries.items():
            for j, q in rows.get(k, ()):
                acc = out.setdefault((i, j), {})
                poly_iadd(acc, poly_mul(p, q, max_s))
        deg = None
        if self.degree is not None and other.degree is not None:
            deg = self.degree + other.degree
        return EndMorphism(self.module, out, deg)

    def __matmul__(self, other: "EndMorphism") -> "EndMorphism":
        return self.compose(other)

    def __mul__(self, c) -> "EndMorphism":
        if isinstance(c, (int, Fraction)):
            return EndMorphism(self.module, {ij: poly_scale(p, c) for ij, p in self.entries.items()},
                               self.degree)
        model = self.module.model
        if isinstance(c, NovikovSeries):
            c = LaurentElement.from_series(model, c)
        if isinstance(c, LaurentElement):
            out = {ij: poly_mul(p, c.terms) for ij, p in self.entries.items()}
            degs = {d for d in c.degrees()}
            deg = None
            if self.degree is not None and len(degs) == 1 and None not in degs:
                deg = self.degree + int(degs.pop())
            if not c.terms:
                deg = self.degree
            return EndMorphism(self.module, out, deg)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, EndMorphism):
            return NotImplemented
        return self.module is other.module and self.entries == other.entries

    __hash__ = None

    def __bool__(self) -> bool:
        return bool(self.entries)

    def is_zero(self) -> bool:
        return not self.entries

    def partial(self, j: int) -> "EndMorphism":
        pos = j + 1
        out = {}
        for ij, p in self.entries.items():
            q = {}
            for k, v in p.items():
                e = k[pos]
                if e:
                    q[k[:pos] + (e - 1,) + k[pos + 1:]] = v * e
            out[ij] = q
        deg = None if self.degree is None else self.degree - 2
        return EndMorphism(self.module, out, deg)

    def truncate_s(self, max_s: int) -> "EndMorphism":
        return EndMorphism(self.module, {ij: {k: v for k, v in p.items() if k[0] <= max_s}
                                         for ij, p in self.entries.items()}, self.degree)

    def terms(self):
        """Yield (row, col, key, coeff)."""
        for (i, j), p in self.entries.items():
            for k, v in p.items():
                yield i, j, k, v

    def min_s(self) -> int | float:
        return min((k[0] for _, _, k, _ in self.terms()), default=math.inf)

    # -- norms ----------------------------------------------------------

    def term_norm(self, i: int, j: int, key: Key) -> Fraction:
        model = self.module.model
        base = key[0] + Fraction(key[1], model.den)
        best = None
        for zvals, bvals in self.module.vertex_data:
            w = base + bvals[i] - bvals[j]
            for e, v in zip(key[2:], zvals):
                if e:
                    w += e * v
            if best is None or w < best:
                best = w
        return best

    def end_norm(self) -> Fraction | float:
        return min((self.term_norm(i, j, k) for i, j, k, _ in self.terms()), default=math.inf)

    def filter_norm(self, keep) -> "EndMorphism":
        out: dict[tuple[int, int], Poly] = {}
        for i, j, k, v in self.terms():
            if keep(self.term_norm(i, j, k)):
                out.setdefault((i, j), {})[k] = v
        return EndMorphism(self.module, out, self.degree)

    def weight_slice(self, weight: Fraction) -> "EndMorphism":
        return self.filter_norm(lambda w: w == weight)

    def modulo(self, level: Fraction) -> "EndMorphism":
        """Representative modulo F^level (drop terms of norm > level)."""
        return self.filter_norm(lambda w: w <= level)

    def norms(self) -> list[Fraction]:
        return sorted({self.term_norm(i, j, k) for i, j, k, _ in self.terms()})

    # -- traces and scalars ---------------------------------------------

    def supertrace(self) -> LaurentElement:
        out: Poly = {}
        for i, par in enumerate(self.module.parities):
            p = self.entries.get((i, i))
            if p:
                poly_iadd(out, p, -1 if par else 1)
        return LaurentElement(self.module.model, out)

    def scalar_value(self) -> NovikovSeries | None:
        """c when the morphism equals c * id with c free of z, else None."""
        size = len(self.module.basis)
        if not self.entries:
            return NovikovSeries.zero(self.module.model.den)
        if any(i != j for i, j in self.entries):
            return None
        first = self.entries.get((0, 0))
        if first is None or any(self.entries.get((i, i)) != first for i in range(size)):
            return None
        if any(any(k[2:]) for k in first):
            return None
        return NovikovSeries({(k[0], k[1]): v for k, v in first.items()}, self.module.model.den)

    def id_coefficient(self) -> NovikovSeries:
        """Projection onto R^s: the z-free part of the identity component."""
        size = len(self.module.basis)
        total: dict = {}
        for i in range(size):
            for k, v in self.entries.get((i, i), {}).items():
                if not any(k[2:]):
                    total[(k[0], k[1])] = total.get((k[0], k[1]), 0) + Fraction(v, size)
        return NovikovSeries(total, self.module.model.den)

    # -- rendering ------------------------------------------------------

    def to_json(self) -> dict:
        model = self.module.model
        entries = []
        for (i, j) in sorted(self.entries):
            p = self.entries[(i, j)]
            entries.append({"row": self.module.labels[i], "col": self.module.labels[j],
                            "value": " + ".join(term_text(model, k, v) for k, v in sorted(p.items()))})
        return {"basis": list(self.module.labels), "degree": self.degree, "entries": entries}

    def __repr__(self) -> str:
        return f"EndMorphism(degree={self.degree}, nonzero={len(self.entries)})"


def delta(phi: EndMorphism, D: EndMorphism | None = None) -> EndMorphism:
    if phi.degree is None:
        raise InputError("delta needs a homogeneous morphism")
    D = phi.module.D if D is None else D
    sign = -1 if phi.degree % 2 else 1
    out = D @ phi
    right = phi @ D
    return (out - right if sign == 1 else out + right).with_degree(phi.degree + 1)


def dirac_build(model: ModelHandle, spin_structure: Sequence[int] | None = None):
    module = DiracModule(model, spin_structure)
    return module, module.D, module.w
