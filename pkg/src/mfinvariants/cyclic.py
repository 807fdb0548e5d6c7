"""Hochschild and cyclic chains of End(M).

A word ``a_l (x) ... (x) a_1`` is stored with ``factors[0] = a_l`` and
``factors[-1] = a_1``, so the list reads left to right as printed.  Shifted
degrees are ``|s a| = |a| - 1``.

The differential, the rotation and the normal form modulo ``im(1 - t)`` only
look at factor degrees, a product and a differential, so they also work for
any factor type that provides ``degree`` (see ``Operations``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Iterator, Sequence

from .dirac import EndMorphism, delta
from .errors import InputError
from .scalars import NovikovSeries


@dataclass(frozen=True)
class Operations:
    mul: Callable[[Any, Any], Any]
    diff: Callable[[Any], Any]
    is_zero: Callable[[Any], bool]


END_OPS = Operations(mul=lambda x, y: x @ y, diff=delta, is_zero=lambda x: x.is_zero())


@dataclass(frozen=True)
class TensorWord:
    factors: tuple
    scalar: Any = Fraction(1)

    def __len__(self) -> int:
        return len(self.factors)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(f.degree for f in self.factors)

    def shifted(self) -> tuple[int, ...]:
        return tuple(f.degree - 1 for f in self.factors)

    def degree(self) -> int:
        """|a_l| + sum of |s a_i| for i < l."""
        return sum(self.shifted()) + 1

    def scaled(self, c) -> "TensorWord":
        return TensorWord(self.factors, self.scalar * c)

    def valuation(self) -> Fraction | float:
        total = sum((f.end_norm() for f in self.factors), Fraction(0))
        if isinstance(self.scalar, NovikovSeries):
            total += self.scalar.valuation()
        return total

    def is_scalar_word(self) -> bool:
        return all(isinstance(f, EndMorphism) and f.scalar_value() is not None for f in self.factors)


@dataclass
class Chain:
    words: list[TensorWord] = field(default_factory=list)
    cutoff: Fraction | None = None

    def __iter__(self) -> Iterator[TensorWord]:
        return iter(self.words)

    def __len__(self) -> int:
        return len(self.words)

    def __add__(self, other: "Chain") -> "Chain":
        return Chain(self.words + other.words, _min_cutoff(self.cutoff, other.cutoff))

    def __neg__(self) -> "Chain":
        return self.scaled(-1)

    def __sub__(self, other: "Chain") -> "Chain":
        return self + (-other)

    def scaled(self, c) -> "Chain":
        return Chain([w.scaled(c) for w in self.words], self.cutoff)

    def pruned(self, cutoff: Fraction | None = None) -> "Chain":
        """Drop words whose valuation reaches the cutoff."""
        cutoff = self.cutoff if cutoff is None else cutoff
        if cutoff is None:
            return Chain(list(self.words), None)
        return Chain([w for w in self.words if w.valuation() < cutoff], cutoff)

    def non_scalar(self) -> "Chain":
        return Chain([w for w in self.words if not w.is_scalar_word()], self.cutoff)


def _min_cutoff(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def _eps(shifted: Sequence[int]) -> list[int]:
    """eps[idx] = sum of shifted degrees of factors[0..idx] (that is, eps_{l-idx})."""
    out, running = [], 0
    for x in shifted:
        running += x
        out.append(running)
    return out


def d_cc_word(word: TensorWord, ops: Operations = END_OPS) -> list[TensorWord]:
    f = word.factors
    l = len(f)
    sh = [x.degree - 1 for x in f]
    eps = _eps(sh)
    out: list[TensorWord] = []

    def emit(sign: int, factors) -> None:
        if any(ops.is_zero(x) for x in factors):
            return
        out.append(TensorWord(tuple(factors), word.scalar * sign))

    # b(mu_1): the leftmost factor carries no sign; a_i carries (-1)^{eps_{i+1}}
    for idx in range(l):
        sign = 1 if idx == 0 else (-1) ** (eps[idx - 1] % 2)
        emit(sign, f[:idx] + (ops.diff(f[idx]),) + f[idx + 1:])
    if l < 2:
        return out
    # b(mu_2)
    emit((-1) ** (f[0].degree % 2), (ops.mul(f[0], f[1]),) + f[2:])
    for i in range(1, l - 1):
        idx = l - 1 - i           # position of a_{i+1}; a_i sits at idx + 1
        sign = -((-1) ** (eps[idx] % 2))
        emit(sign, f[:idx] + (ops.mul(f[idx], f[idx + 1]),) + f[idx + 2:])
    eps2 = eps[l - 2]
    emit(-((-1) ** ((sh[-1] * (eps2 + 1)) % 2)), (ops.mul(f[-1], f[0]),) + f[1:-1])
    return out


def d_cc(chain: Chain | TensorWord, ops: Operations = END_OPS) -> Chain:
    words = [chain] if isinstance(chain, TensorWord) else chain.words
    out: list[TensorWord] = []
    for w in words:
        out.extend(d_cc_word(w, ops))
    result = Chain(out, None if isinstance(chain, TensorWord) else chain.cutoff)
    return result.pruned() if result.cutoff is not None and ops is END_OPS else result


def rotation_sign(shifted: Sequence[int]) -> int:
    first = shifted[0]
    total = sum(shifted)
    return -1 if (first * (total - first)) % 2 else 1


def cyclic_t(word: TensorWord) -> TensorWord:
    """a_l (x) a_{l-1} ... a_1  ->  +- a_{l-1} (x) ... (x) a_1 (x) a_l."""
    if len(word.factors) < 2:
        sign = rotation_sign(word.shifted()) if word.factors else 1
        return word.scaled(sign) if sign == -1 else word
    sign = rotation_sign(word.shifted())
    return TensorWord(word.factors[1:] + word.factors[:1], word.scalar * sign)


def exp_chain(b: EndMorphism, cutoff: Fraction, include_unit: bool = True) -> Chain:
    """1 + sum_l b^{(x) l} / l, keeping words of valuation below cutoff."""
    if b.degree != 1:
        raise InputError("exp needs a degree-one element")
    words = []
    if include_unit:
        words.append(TensorWord((b.module.identity(),), Fraction(1)))
    if b.is_zero():
        return Chain(words, cutoff)
    nu = b.end_norm()
    if nu <= 0:
        raise InputError(f"exp needs positive valuation, got {nu}")
    l = 1
    while l * nu < cutoff:
        words.append(TensorWord((b,) * l, Fraction(1, l)))
        l += 1
    return Chain(words, cutoff)


# -- the constants C_J -------------------------------------------------------

def canonical_rotation(J: Sequence[int]) -> tuple[int, ...]:
    J = tuple(J)
    return min(J[k:] + J[:k] for k in range(len(J)))


def _successors(J: tuple[int, ...]) -> Iterator[tuple[tuple[int, ...], Fraction]]:
    m = len(J) - 1
    for s in range(m + 1):
        yield J[:s] + (J[s] + 1,) + J[s + 1:], Fraction(2, m + 1)
    for s in range(m + 1):
        yield J[:s + 1] + (1,) + J[s + 1:], Fraction(1, m + 2)
    if m > 0:
        w = Fraction(1, m)
        yield (J[0] + J[m] + 1,) + J[1:m], w
        for s in range(m):
            yield J[:s] + (J[s] + J[s + 1] + 1,) + J[s + 2:], w


def cj_constants(level_max: int) -> dict[tuple[int, ...], Fraction]:
    """C_J for all cyclic classes with sum(J) - 1 <= level_max, keyed by minimal rotation."""
    if level_max < 0:
        raise ValueError("level_max must be nonnegative")
    table = {(1,): Fraction(1)}
    frontier = dict(table)
    for _ in range(level_max):
        nxt: dict[tuple[int, ...], Fraction] = {}
        for J, value in frontier.items():
            for K, w in _successors(J):
                key = canonical_rotation(K)
                nxt[key] = nxt.get(key, Fraction(0)) + w * value
        table.update(nxt)
        frontier = nxt
    return table


def _positive_vectors(length: int, weight: Fraction, budget: Fraction) -> Iterator[tuple[int, ...]]:
    """Positive integer vectors I with weight * sum(I) < budget."""
    if length == 0:
        yield ()
        return
    k = 1
    while weight * (k + length - 1) < budget:
        for rest in _positive_vectors(length - 1, weight, budget - weight * k):
            yield (k,) + rest
        k += 1


def y_b_chain(b: EndMorphism, c: NovikovSeries, cutoff: Fraction,
              table: dict | None = None) -> Chain:
    """-sum_J C_J sum_I (x)_k (c id (x) id)^{j_k} (x) b^{i_k}, below cutoff."""
    module = b.module
    if c.is_zero():
        return Chain([], cutoff)
    if b.degree != 1:
        raise InputError("y_b needs a degree-one b")
    if not b.id_coefficient().is_zero():
        raise InputError("y_b needs b without identity component")
    nu_b, nu_c = b.end_norm(), c.valuation()
    if nu_b <= 0 or nu_c <= 0:
        raise InputError("y_b needs positive valuations of b and c")
    cid = module.identity() * c
    one = module.identity()
    max_total = 0
    while (max_total + 1) * nu_c + nu_b < cutoff:
        max_total += 1
    if max_total == 0:
        return Chain([], cutoff)
    table = table if table is not None else cj_constants(max_total - 1)
    words = []
    for J in sorted(table, key=lambda J: (sum(J), len(J), J)):
        if sum(J) > max_total:
            continue
        budget = cutoff - sum(J) * nu_c
        for I in _positive_vectors(len(J), nu_b, budget):
            factors: list = []
            for j, i in zip(J, I):
                factors.extend((cid, one) * j)
                factors.extend((b,) * i)
            words.append(TensorWord(tuple(factors), -table[J]))
    return Chain(words, cutoff)


# -- comparison modulo im(1 - t) -----------------------------------------------

def end_fingerprint(phi: EndMorphism):
    """(key, scale) with phi = scale * (normalized morphism identified by key)."""
    c = phi.scalar_value()
    if c is not None:
        return ("id",), c
    first = None
    for (i, j) in sorted(phi.entries):
        p = phi.entries[(i, j)]
        first = p[min(p)]
        break
    items = tuple(sorted(((i, j, k, v / first) for (i, j), p in phi.entries.items()
                          for k, v in p.items())))
    return ("end", phi.degree % 2, items), first


def cyclic_normal_form(chain: Chain, fingerprint=end_fingerprint, rotate: bool = True) -> dict:
    """Coefficients of a chain in C_* / im(1 - t), keyed by canonical rotation.

    With ``rotate=False`` this is the plain Hochschild normal form.
    """
    out: dict = {}
    for w in chain.words:
        keys, coeff = [], w.scalar
        for f in w.factors:
            key, scale = fingerprint(f)
            keys.append(key)
            coeff = coeff * scale
        shifted = list(w.shifted())
        l = len(keys) if rotate else 1
        # walk all rotations, tracking the sign of t^k
        best, best_sign, sign = tuple(keys), 1, 1
        stabilizer_sign = 1
        cur_keys, cur_sh = list(keys), shifted
        for k in range(1, l):
            sign *= rotation_sign(cur_sh)
            cur_keys = cur_keys[1:] + cur_keys[:1]
            cur_sh = cur_sh[1:] + cur_sh[:1]
            t = tuple(cur_keys)
            if t == tuple(keys) and sign == -1:
                stabilizer_sign = -1
            if t < best:
                best, best_sign = t, sign
        if stabilizer_sign == -1:
            continue
        acc = out.get(best)
        out[best] = coeff * best_sign if acc is None else acc + coeff * best_sign
    return {k: v for k, v in out.items() if not _is_zero_scalar(v)}


def _is_zero_scalar(v) -> bool:
    if isinstance(v, NovikovSeries):
        return v.is_zero()
    return v == 0


def expanded(chain: Chain, limit: int = 200_000) -> Chain:
    """Split every factor into single matrix-unit monomials (multilinear expansion)."""
    out: list[TensorWord] = []
    for w in chain.words:
        parts = []
        for f in w.factors:
            module = f.module
            parts.append([(EndMorphism(module, {(i, j): {k: Fraction(1)}}, f.degree), v)
                          for i, j, k, v in f.terms()])
        if math.prod(len(p) for p in parts) > limit:
            raise InputError("expansion too large")
        for combo in itertools.product(*parts):
            coeff = w.scalar
            for _, v in combo:
                coeff = coeff * v
            out.append(TensorWord(tuple(x for x, _ in combo), coeff))
    return Chain(out, chain.cutoff)

