"""Truncated Novikov series over the rationals.

A series is a finite sum of terms ``q * s^a * T^beta`` where ``q`` is rational,
``a`` a nonnegative integer and ``beta`` a rational with a fixed denominator.
Exponents of ``T`` are stored as integer numerators over ``den`` so that the
hot loops only ever touch integers.  The weight of a term is ``a + beta``.

A finite ``cutoff`` means the series lives modulo everything of weight
``>= cutoff``; operations re-truncate.  ``cutoff=None`` means exact.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import lcm
from typing import Iterable, Iterator, Mapping

from .errors import CutoffMismatch

Rational = int | Fraction


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot interpret {x!r} as a rational")


def fraction_text(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _merge_cutoff(c1, c2):
    if c1 is None:
        return c2
    if c2 is None or c1 == c2:
        return c1
    raise CutoffMismatch(f"cutoffs differ: {c1} vs {c2}")


class NovikovSeries:
    __slots__ = ("_terms", "den", "cutoff")

    def __init__(self, terms: Mapping[tuple[int, int], Rational] | None = None,
                 den: int = 1, cutoff: Rational | None = None):
        if den < 1:
            raise ValueError("value-group denominator must be positive")
        self.den = den
        self.cutoff = None if cutoff is None else as_fraction(cutoff)
        clean: dict[tuple[int, int], Fraction] = {}
        if terms:
            for (a, t), q in terms.items():
                if a < 0:
                    raise ValueError("negative power of s")
                q = as_fraction(q)
                if q and self._keeps(a, t):
                    clean[(a, t)] = q
        self._terms = clean

    # -- construction -------------------------------------------------

    @classmethod
    def zero(cls, den: int = 1, cutoff=None) -> "NovikovSeries":
        return cls(None, den, cutoff)

    @classmethod
    def constant(cls, q: Rational, den: int = 1, cutoff=None) -> "NovikovSeries":
        return cls({(0, 0): q}, den, cutoff)

    @classmethod
    def monomial(cls, q: Rational = 1, s: int = 0, t: Rational = 0,
                 den: int | None = None, cutoff=None) -> "NovikovSeries":
        """``q * s^s * T^t`` with ``t`` a rational exponent."""
        t = as_fraction(t)
        if den is None:
            den = t.denominator
        num = t * den
        if num.denominator != 1:
            raise ValueError(f"T-exponent {t} not in (1/{den})Z")
        return cls({(s, int(num)): q}, den, cutoff)

    @classmethod
    def exp_s(cls, sign: int = 1, order: int = 8, den: int = 1, cutoff=None) -> "NovikovSeries":
        """Truncated exponential sum_{k<=order} (sign*s)^k / k!."""
        return cls({(k, 0): Fraction(sign ** k, math.factorial(k)) for k in range(order + 1)},
                   den, cutoff)

    # -- basic protocol -----------------------------------------------

    def _keeps(self, a: int, t: int) -> bool:
        if self.cutoff is None:
            return True
        return a * self.den + t < self.cutoff * self.den

    def terms(self) -> dict[tuple[int, int], Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[int, Fraction, Fraction]]:
        """Yield (s_exp, T-exponent, coefficient) in canonical order."""
        for (a, t) in sorted(self._terms, key=self._sort_key):
            yield a, Fraction(t, self.den), self._terms[(a, t)]

    def _sort_key(self, key):
        a, t = key
        return (a * self.den + t, a, t)

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, s: int, t: Rational = 0) -> Fraction:
        num = as_fraction(t) * self.den
        if num.denominator != 1:
            return Fraction(0)
        return self._terms.get((s, int(num)), Fraction(0))

    def with_den(self, den: int) -> "NovikovSeries":
        if den == self.den:
            return self
        if den % self.den:
            raise ValueError(f"cannot refine denominator {self.den} to {den}")
        f = den // self.den
        out = NovikovSeries(None, den, self.cutoff)
        out._terms = {(a, t * f): q for (a, t), q in self._terms.items()}
        return out

    def _coerce(self, other) -> "NovikovSeries":
        if isinstance(other, NovikovSeries):
            return other
        if isinstance(other, (int, Fraction)):
            return NovikovSeries.constant(other, self.den)
        return NotImplemented

    def _aligned(self, other: "NovikovSeries"):
        den = lcm(self.den, other.den)
        return self.with_den(den), other.with_den(den), den, _merge_cutoff(self.cutoff, other.cutoff)

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        x, y, den, cutoff = self._aligned(other)
        terms = dict(x._terms)
        for k, q in y._terms.items():
            v = terms.get(k, 0) + q
            if v:
                terms[k] = v
            else:
                terms.pop(k, None)
        return NovikovSeries(terms, den, cutoff)

    __radd__ = __add__

    def __neg__(self) -> "NovikovSeries":
        out = NovikovSeries(None, self.den, self.cutoff)
        out._terms = {k: -q for k, q in self._terms.items()}
        return out

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if not other:
                return NovikovSeries(None, self.den, self.cutoff)
            out = NovikovSeries(None, self.den, self.cutoff)
            out._terms = {k: q * other for k, q in self._terms.items()}
            return out
        if not isinstance(other, NovikovSeries):
            return NotImplemented
        x, y, den, cutoff = self._aligned(other)
        terms: dict[tuple[int, int], Fraction] = {}
        limit = None if cutoff is None else cutoff * den
        for (a1, t1), q1 in x._terms.items():
            for (a2, t2), q2 in y._terms.items():
                a, t = a1 + a2, t1 + t2
                if limit is not None and a * den + t >= limit:
                    continue
                v = terms.get((a, t), 0) + q1 * q2
                if v:
                    terms[(a, t)] = v
                else:
                    terms.pop((a, t), None)
        out = NovikovSeries(None, den, cutoff)
        out._terms = terms
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int) -> "NovikovSeries":
        out = NovikovSeries.constant(1, self.den, self.cutoff)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        den = lcm(self.den, other.den)
        return self.with_den(den)._terms == other.with_den(den)._terms

    __hash__ = None

    # -- valuation and truncation -------------------------------------

    def valuation(self) -> Fraction | float:
        if not self._terms:
            return math.inf
        return min(Fraction(a * self.den + t, self.den) for a, t in self._terms)

    def truncate(self, cutoff: Rational | None) -> "NovikovSeries":
        """Drop every term of weight >= cutoff."""
        return NovikovSeries(self._terms, self.den, cutoff)

    def truncate_s(self, max_s: int) -> "NovikovSeries":
        out = NovikovSeries(None, self.den, self.cutoff)
        out._terms = {k: q for k, q in self._terms.items() if k[0] <= max_s}
        return out

    def weight_slice(self, weight: Rational) -> "NovikovSeries":
        target = as_fraction(weight) * self.den
        out = NovikovSeries(None, self.den, self.cutoff)
        out._terms = {k: q for k, q in self._terms.items() if k[0] * self.den + k[1] == target}
        return out

    def weights(self) -> list[Fraction]:
        return sorted({Fraction(a * self.den + t, self.den) for a, t in self._terms})

    # -- rendering ----------------------------------------------------

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = [f"{fraction_text(q)} * s^{a} * T^({fraction_text(t)})" for a, t, q in self.items()]
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"NovikovSeries({self.to_text()})"

    def to_json(self) -> dict:
        return {
            "den": self.den,
            "cutoff": None if self.cutoff is None else fraction_text(self.cutoff),
            "terms": [{"coeff": fraction_text(q), "s": a, "T": fraction_text(t)}
                      for a, t, q in self.items()],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "NovikovSeries":
        terms = data.get("terms", [])
        den = int(data.get("den", 1))
        for term in terms:
            den = lcm(den, as_fraction(term.get("T", 0)).denominator)
        cutoff = data.get("cutoff")
        out: dict[tuple[int, int], Fraction] = {}
        for term in terms:
            key = (int(term.get("s", 0)), int(as_fraction(term.get("T", 0)) * den))
            out[key] = out.get(key, 0) + as_fraction(term["coeff"])
        return cls(out, den, None if cutoff is None else as_fraction(cutoff))


def series_sum(items: Iterable[NovikovSeries], den: int = 1, cutoff=None) -> NovikovSeries:
    total = NovikovSeries.zero(den, cutoff)
    for x in items:
        total = total + x
    return total


def extract_invariants(c: NovikovSeries, n: int | None = None) -> dict[tuple[Fraction, int], Fraction]:
    """Read off N_{d,k+1} = k! * [s^k T^d] c.

    With ``n`` given, every term must have degree 2 in the simplex grading
    |s| = 1 - n, |T^d| = 2(n+1)d.
    """
    table: dict[tuple[Fraction, int], Fraction] = {}
    for a, t, q in c.items():
        if n is not None and (1 - n) * a + 2 * (n + 1) * t != 2:
            raise ValueError(f"term s^{a} T^{t} does not have degree 2")
        table[(t, a + 1)] = q * math.factorial(a)
    return table


def series_from_invariants(table: Mapping[tuple[Fraction, int], Rational], den: int = 1,
                           cutoff=None) -> NovikovSeries:
    terms = {}
    for (d, k), value in table.items():
        num = as_fraction(d) * den
        if num.denominator != 1 or k < 1:
            raise ValueError(f"invalid invariant index {(d, k)}")
        terms[(k - 1, int(num))] = as_fraction(value) / math.factorial(k - 1)
    return NovikovSeries(terms, den, cutoff)
