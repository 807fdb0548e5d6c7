"""Residue sums over the critical points of the simplex superpotential.

After the coordinate change the superpotential is
``W = z_1 + ... + z_n + Tbar / (z_1 ... z_n)``, so
``d_jW = (z_j P - Tbar) / (z_j P)`` with ``P = z_1 ... z_n``.  Every integrand
the trace produces is a sum of monomials over ``prod_j (d_jW)^{l_j}``, which
clears to ``z^p / prod_j (z_j P - Tbar)^{l_j} dz``.

The critical sum of that form has a closed form (``critical_sum_terms``).
``Res_inf`` and ``Res_0`` are single coefficients of geometric expansions;
``-Res_inf - Res_0`` agrees with the critical sum for n = 1.  For n = 3 it
misses poles along the coordinate hyperplanes, e.g. p = (0, 0, 1),
l = (1, 1, 1) has critical sum 1/T^2 while the boundary sum is 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Sequence

from .errors import UnsupportedSuperpotential
from .lg import LaurentElement, ModelHandle
from .scalars import NovikovSeries


def _multiplicity(A: Sequence[int], l: Sequence[int]) -> int:
    k = 1
    for a, lj in zip(A, l):
        if lj == 0:
            if a:
                return 0
            continue
        k *= comb(a + lj - 1, lj - 1)
    return k


def _solve_exponents(targets: Sequence[int]) -> tuple[list[int], int] | None:
    """Nonnegative A_j, S with A_j + S = targets_j and S = sum A_j."""
    n = len(targets)
    total = sum(targets)
    if total % (n + 1):
        return None
    S = total // (n + 1)
    if S < 0:
        return None
    A = [t - S for t in targets]
    if any(a < 0 for a in A):
        return None
    return A, S


def infinity_coefficient(p: Sequence[int], l: Sequence[int]) -> tuple[int, int] | None:
    """Res_inf as (K, S) meaning K * Tbar^S, or None when it vanishes."""
    L = sum(l)
    shifted = [L - 2 + lj - pj for pj, lj in zip(p, l)]
    sol = _solve_exponents([-1 - q for q in shifted])
    if sol is None:
        return None
    A, S = sol
    k = _multiplicity(A, l)
    return (-k, S) if k else None


def zero_coefficient(p: Sequence[int], l: Sequence[int]) -> tuple[int, int] | None:
    """Res_0 as (K, e) meaning K * Tbar^e, or None when it vanishes."""
    if any(pj >= 0 for pj in p):
        return None
    L = sum(l)
    sol = _solve_exponents([-1 - pj for pj in p])
    if sol is None:
        return None
    A, S = sol
    k = _multiplicity(A, l)
    if not k:
        return None
    return (-k if L % 2 else k), -L - S


def _tbar_power(tbar: tuple[int, int], e: int) -> tuple[int, int]:
    sign, t = tbar
    return (sign if e % 2 else 1), t * e


def _binomial(a: int, k: int) -> int:
    """C(a, k) for any integer a: the coefficient of (u - 1)^k in u^a."""
    num = 1
    for i in range(k):
        num *= a - i
    return num // factorial(k)


def critical_sum_terms(p: Sequence[int], l: Sequence[int], tbar: tuple[int, int]) -> list[tuple[int, int]]:
    """Sum of residues at the critical points, as a list of (coefficient, T numerator).

    In u_j = z_j P / Tbar the critical points are the n + 1 preimages of
    u = (1, ..., 1), and dz = P/(n+1) du/u.  Summing over the branches of
    P = (Tbar^n u_1...u_n)^(1/(n+1)) leaves a product of one-variable
    residues of u^a / (u - 1)^l_j at u = 1.
    """
    n = len(p)
    if any(lj < 1 for lj in l):
        raise ValueError("pole orders must be positive")
    q, rem = divmod(1 - sum(p), n + 1)
    if rem:
        return []
    k = 1
    for pj, lj in zip(p, l):
        k *= _binomial(pj + q - 1, lj - 1)
        if not k:
            return []
    sign, t = _tbar_power(tbar, sum(p) - sum(l) + n * q)
    return [(k * sign, t)]


def _check_model(model: ModelHandle) -> tuple[int, int]:
    if not model.is_simplex or model.tbar is None:
        raise UnsupportedSuperpotential("residue sums are only available for simplices")
    return model.tbar


def res_infinity(p: Sequence[int], l: Sequence[int], model: ModelHandle) -> NovikovSeries:
    tbar = _check_model(model)
    hit = infinity_coefficient(p, l)
    if hit is None:
        return NovikovSeries.zero(model.den)
    k, e = hit
    sign, t = _tbar_power(tbar, e)
    return NovikovSeries({(0, t): k * sign}, model.den)


def res_zero(p: Sequence[int], l: Sequence[int], model: ModelHandle) -> NovikovSeries:
    tbar = _check_model(model)
    hit = zero_coefficient(p, l)
    if hit is None:
        return NovikovSeries.zero(model.den)
    k, e = hit
    sign, t = _tbar_power(tbar, e)
    return NovikovSeries({(0, t): k * sign}, model.den)


def boundary_residue_sum(p: Sequence[int], l: Sequence[int], model: ModelHandle) -> NovikovSeries:
    """-Res_inf - Res_0."""
    return -(res_infinity(p, l, model) + res_zero(p, l, model))


def canonical_residue_sum(p: Sequence[int], l: Sequence[int], model: ModelHandle) -> NovikovSeries:
    """Sum of residues of z^p dz / prod_j (z_j P - Tbar)^{l_j} over critical points."""
    tbar = _check_model(model)
    terms: dict[tuple[int, int], Fraction] = {}
    for c, t in critical_sum_terms(p, l, tbar):
        terms[(0, t)] = terms.get((0, t), 0) + c
    return NovikovSeries(terms, model.den)


@dataclass
class ResidueIntegrand:
    """numerator * Omega / prod_j (d_jW)^{orders_j}, Omega = dz / (z_1...z_n)."""

    numerator: LaurentElement
    orders: tuple[int, ...]

    def canonical_terms(self):
        """Yield (coefficient, s_exp, t_num, p) for each numerator monomial."""
        L = sum(self.orders)
        for key, c in self.numerator.terms.items():
            p = tuple(m + lj + L - 1 for m, lj in zip(key[2:], self.orders))
            yield c, key[0], key[1], p


def residue_sum(integrand: ResidueIntegrand) -> NovikovSeries:
    model = integrand.numerator.model
    tbar = _check_model(model)
    terms: dict[tuple[int, int], Fraction] = {}
    for c, a, t, p in integrand.canonical_terms():
        for k, dt in critical_sum_terms(p, integrand.orders, tbar):
            key = (a, t + dt)
            v = terms.get(key, 0) + c * k
            if v:
                terms[key] = v
            else:
                terms.pop(key)
    return NovikovSeries(terms, model.den)
