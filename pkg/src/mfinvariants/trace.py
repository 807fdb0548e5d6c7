"""The infinity-trace on tensor words of Dirac-module endomorphisms.

For a word ``Phi_l (x) ... (x) Phi_1`` the trace is a signed, weighted sum of
residues of supertraces of products

    Phi_l d_{a_l}D d_{J_l}D ... Phi_1 d_{a_1}D d_{J_1}D

over the critical points of W, with ``(a_l, .., a_1)`` a multi-index and the
blocks ``J_p`` an ordered split of a permutation of ``{1..n} - {i}``.

Two evaluation routes exist:

* ``literal``: enumerates every term exactly as written and takes one residue
  per term.  Only practical for short words; used as a cross-check.
* ``dp`` (default): a dynamic program over blocks whose state is the set of
  permutation letters already placed and the multiplicity vector ``r`` of the
  multi-index.  Paths reaching the same state share their matrix product, and
  one residue is taken per final ``(i, r)``.

Both routes truncate by powers of ``s``; since ``D`` carries no ``s`` this is
exact for every retained term.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from operator import add
from typing import Iterable, Sequence

from .dirac import DiracModule, EndMorphism
from .errors import ConsistencyFailure, UnsupportedSuperpotential
from .residue import critical_sum_terms
from .scalars import NovikovSeries

WORKERS_ENV = "MFINV_WORKERS"

IntPoly = dict
Matrix = dict   # row -> {col: IntPoly}


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def theta_word_count(n: int, l: int) -> int:
    """Number of (k, i, r, multi-index, permutation) terms in the formula."""
    if n < 1 or l < 1:
        return 0
    return (math.comb(n + l - 2, l - 1) * math.factorial(n - 1) * n * (n ** l - (n - 1) ** l))


# -- integer sparse matrices ----------------------------------------------

def _to_int_matrix(phi: EndMorphism) -> tuple[Matrix, int]:
    den = 1
    for _, _, _, v in phi.terms():
        den = math.lcm(den, Fraction(v).denominator)
    rows: Matrix = {}
    for (i, j), p in phi.entries.items():
        rows.setdefault(i, {})[j] = {k: int(v * den) for k, v in p.items()}
    return rows, den


def _matmul(A: Matrix, B: Matrix, max_s: int) -> Matrix:
    out: Matrix = {}
    for i, arow in A.items():
        orow: dict = {}
        for k, p in arow.items():
            brow = B.get(k)
            if not brow:
                continue
            for j, q in brow.items():
                acc = orow.get(j)
                if acc is None:
                    acc = orow[j] = {}
                for k1, c1 in p.items():
                    room = max_s - k1[0]
                    if room < 0:
                        continue
                    for k2, c2 in q.items():
                        if k2[0] > room:
                            continue
                        key = tuple(map(add, k1, k2))
                        v = acc.get(key, 0) + c1 * c2
                        if v:
                            acc[key] = v
                        else:
                            del acc[key]
        orow = {j: p for j, p in orow.items() if p}
        if orow:
            out[i] = orow
    return out


def _madd(acc: Matrix, B: Matrix, sign: int) -> None:
    for i, brow in B.items():
        arow = acc.setdefault(i, {})
        for j, q in brow.items():
            p = arow.setdefault(j, {})
            for k, c in q.items():
                v = p.get(k, 0) + sign * c
                if v:
                    p[k] = v
                else:
                    del p[k]
            if not p:
                del arow[j]
        if not arow:
            del acc[i]


def _supertrace(M: Matrix, parities: Sequence[int]) -> IntPoly:
    out: IntPoly = {}
    for i, row in M.items():
        p = row.get(i)
        if not p:
            continue
        sign = -1 if parities[i] else 1
        for k, c in p.items():
            v = out.get(k, 0) + sign * c
            if v:
                out[k] = v
            else:
                del out[k]
    return out


def _perm_sign_increment(placed: int, seq: Sequence[int]) -> int:
    """Parity of inversions created by appending seq after the letters in placed."""
    inv = 0
    before = [j for j in range(1, 64) if placed >> j & 1]
    for x in seq:
        inv += sum(1 for y in before if y > x)
        before.append(x)
    return inv % 2


def _ordered_subsets(pool: Sequence[int]) -> list[tuple[int, ...]]:
    out = []
    for size in range(len(pool) + 1):
        for combo in itertools.combinations(pool, size):
            out.extend(itertools.permutations(combo))
    return out


# -- the dp route --------------------------------------------------------

@dataclass
class _Job:
    n: int
    i: int
    factors: list            # integer matrices in product order (Phi_l first)
    eps: list[int]           # eps parity for each block, product order
    budgets: list[int]       # s budget for the running product after each block
    partials: dict           # (a, seq) -> integer matrix of d_aD d_seqD
    parities: tuple


def _run_job(job: _Job):
    """All final (r -> supertrace) sums for one excluded index i."""
    n, i = job.n, job.i
    pool = [j for j in range(1, n + 1) if j != i]
    full = sum(1 << j for j in pool)
    states: dict = {(0, (0,) * n): None}      # None stands for the identity
    counts: dict = {(0, (0,) * n): 1}
    for q, F in enumerate(job.factors):
        budget = job.budgets[q]
        new_states: dict = {}
        new_counts: dict = {}
        for (used, r), M in states.items():
            base = F if M is None else _matmul(M, F, budget)
            free = [j for j in pool if not used >> j & 1]
            count = counts[(used, r)]
            for seq in _ordered_subsets(free):
                sign = (len(seq) * job.eps[q] + _perm_sign_increment(used, seq)) % 2
                nused = used
                for x in seq:
                    nused |= 1 << x
                for a in range(1, n + 1):
                    nr = r[:a - 1] + (r[a - 1] + 1,) + r[a:]
                    key = (nused, nr)
                    new_counts[key] = new_counts.get(key, 0) + count
                    if not base:
                        new_states.setdefault(key, {})
                        continue
                    prod = _matmul(base, job.partials[(a, seq)], budget)
                    acc = new_states.setdefault(key, {})
                    _madd(acc, prod, -1 if sign else 1)
        states, counts = new_states, new_counts
    results = {}
    n_terms = 0
    for (used, r), M in states.items():
        if used != full or r[i - 1] < 1:
            continue
        n_terms += counts[(used, r)]
        if M:
            st = _supertrace(M, job.parities)
            if st:
                results[r] = st
    return i, results, n_terms


# -- public api ----------------------------------------------------------

@dataclass
class TraceStats:
    words: int = 0
    words_pruned: int = 0
    formula_terms: int = 0
    residue_calls: int = 0
    wall_time: float = 0.0

    def merge(self, other: "TraceStats") -> None:
        self.words += other.words
        self.words_pruned += other.words_pruned
        self.formula_terms += other.formula_terms
        self.residue_calls += other.residue_calls
        self.wall_time += other.wall_time

    def to_json(self) -> dict:
        return {"words": self.words, "words_pruned": self.words_pruned,
                "terms_evaluated": self.formula_terms, "residues_evaluated": self.formula_terms,
                "residue_calls": self.residue_calls, "wall_time": round(self.wall_time, 3)}


@dataclass
class TraceRequest:
    factors: Sequence[EndMorphism]
    module: DiracModule
    cutoff: Fraction | None = None
    max_s: int | None = None


class TraceEngine:
    """Evaluates the trace on words and chains for a fixed Dirac module."""

    def __init__(self, module: DiracModule, workers: int | None = None, prune: bool = True,
                 route: str = "dp", check: bool = True):
        model = module.model
        if not model.is_simplex or model.tbar is None:
            raise UnsupportedSuperpotential("the trace is only implemented for simplices")
        self.module = module
        self.model = model
        self.n = model.n
        self.workers = workers or default_workers()
        self.prune = prune
        self.route = route
        self.check = check
        self.stats = TraceStats()
        self._partials: dict | None = None
        self._partial_ints = {j: _to_int_matrix(module.partial_D(j))[0] for j in range(1, self.n + 1)}

    # block matrices d_aD d_seqD, shared by every word
    def _partial_products(self) -> dict:
        if self._partials is None:
            big = 10 ** 9
            table = {}
            letters = list(range(1, self.n + 1))
            for seq in _ordered_subsets(letters):
                if len(seq) > self.n - 1:
                    continue
                for a in letters:
                    M = self._partial_ints[a]
                    for x in seq:
                        M = _matmul(M, self._partial_ints[x], big)
                    table[(a, seq)] = M
            self._partials = table
        return self._partials

    def s_limit(self, out_degree: int, cutoff: Fraction) -> int:
        """Largest s-power an output of the given degree can have below cutoff."""
        model = self.model
        if model.t_degree is None:
            raise UnsupportedSuperpotential("T has no degree; pass max_s explicitly")
        a = 0
        best = -1
        while a <= 10 ** 4:
            beta = (out_degree - (1 - self.n) * a) / model.t_degree
            weight = a + beta
            if weight < cutoff:
                best = a
            elif self.n > 1 or model.t_degree > 0:
                break
            a += 1
        return best

    def theta_word(self, factors: Sequence[EndMorphism], cutoff: Fraction | None = None,
                   max_s: int | None = None) -> NovikovSeries:
        """Theta_l of the word Phi_l (x) ... (x) Phi_1 (factors listed left to right)."""
        start = time.perf_counter()
        stats = TraceStats(words=1)
        model = self.model
        den = model.den
        zero = NovikovSeries.zero(den, cutoff)
        l = len(factors)
        if l == 0 or any(f.is_zero() for f in factors):
            self.stats.merge(stats)
            return zero
        if any(f.degree is None for f in factors):
            raise ConsistencyFailure("trace needs homogeneous factors")
        degree = sum(f.degree for f in factors)
        out_degree = degree - (l - 1) - self.n
        if self.prune and (degree - (self.n + l - 1)) % 2:
            stats.words_pruned = 1
            stats.wall_time = time.perf_counter() - start
            self.stats.merge(stats)
            return zero
        if max_s is None and cutoff is None:
            # polynomial factors: the exact value has bounded s-degree
            max_s = sum(max(k[0] for _, _, k, _ in f.terms()) for f in factors)
        elif max_s is None:
            max_s = self.s_limit(out_degree, cutoff)
        if max_s < 0:
            self.stats.merge(stats)
            return zero

        ints, scale = [], 1
        for f in factors:
            M, den_f = _to_int_matrix(f)
            ints.append(M)
            scale *= den_f
        mins = [min(k[0] for row in M.values() for p in row.values() for k in p) for M in ints]
        if sum(mins) > max_s:
            self.stats.merge(stats)
            return zero
        budgets = [max_s - sum(mins[q + 1:]) for q in range(l)]
        eps, running = [], 0
        for f in factors:
            running += f.degree - 1
            eps.append(running % 2)

        if self.route == "literal":
            raw, terms = self._literal(ints, eps, budgets)
        else:
            raw, terms = self._dp(ints, eps, budgets)
        stats.formula_terms = terms

        tbar = model.tbar
        L = self.n + l - 1
        total: dict = {}
        norm = Fraction(1, math.factorial(L) * scale)
        for (i, r), poly in raw.items():
            orders = tuple(r[j] + (0 if j == i - 1 else 1) for j in range(self.n))
            weight = math.prod(math.factorial(x) for x in r)
            sign = -1 if i % 2 else 1
            for key, c in poly.items():
                p = tuple(m + lj + L - 1 for m, lj in zip(key[2:], orders))
                stats.residue_calls += 1
                for k, dt in critical_sum_terms(p, orders, tbar):
                    tkey = (key[0], key[1] + dt)
                    v = total.get(tkey, 0) + sign * weight * c * k
                    if v:
                        total[tkey] = v
                    else:
                        total.pop(tkey)
        result = NovikovSeries({k: v * norm for k, v in total.items()}, den, cutoff)
        if self.check:
            self._check_output(result, factors, out_degree)
        stats.wall_time = time.perf_counter() - start
        self.stats.merge(stats)
        return result

    def _check_output(self, result: NovikovSeries, factors, out_degree: int) -> None:
        model = self.model
        for a, t, _ in result.items():
            kd = model.key_degree((a, int(t * model.den)) + (0,) * self.n)
            if kd is not None and kd != out_degree:
                raise ConsistencyFailure(f"trace output s^{a} T^{t} has degree {kd}, expected {out_degree}")
        if result:
            floor = sum(f.end_norm() for f in factors)
            if result.valuation() < floor:
                raise ConsistencyFailure(f"trace output valuation {result.valuation()} below word norm {floor}")

    def _dp(self, ints, eps, budgets):
        partials = self._partial_products()
        jobs = [_Job(self.n, i, ints, eps, budgets, partials, self.module.parities)
                for i in range(1, self.n + 1)]
        if self.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=min(self.workers, len(jobs))) as pool:
                outputs = list(pool.map(_run_job, jobs))
        else:
            outputs = [_run_job(job) for job in jobs]
        raw, terms = {}, 0
        for i, results, n_terms in sorted(outputs, key=lambda item: item[0]):
            terms += n_terms
            for r, poly in results.items():
                raw[(i, r)] = poly
        return raw, terms

    def _literal(self, ints, eps, budgets):
        """Term-by-term enumeration of the formula (one residue input per term)."""
        n, l = self.n, len(ints)
        parities = self.module.parities
        pd = self._partial_ints
        raw: dict = {}
        terms = 0
        for ks in _compositions(n - 1, l):
            for i in range(1, n + 1):
                pool = [j for j in range(1, n + 1) if j != i]
                for multi in itertools.product(range(1, n + 1), repeat=l):
                    if i not in multi:
                        continue
                    r = tuple(multi.count(j) for j in range(1, n + 1))
                    for perm in itertools.permutations(pool):
                        terms += 1
                        inv = sum(1 for x, y in itertools.combinations(perm, 2) if x > y)
                        sign = (inv + sum(k * e for k, e in zip(ks, eps))) % 2
                        M = None
                        pos = 0
                        for q in range(l):
                            block = [ints[q], pd[multi[q]]]
                            block += [pd[x] for x in perm[pos:pos + ks[q]]]
                            pos += ks[q]
                            for B in block:
                                M = B if M is None else _matmul(M, B, budgets[q])
                        st = _supertrace(M, parities)
                        acc = raw.setdefault((i, r), {})
                        for k, c in st.items():
                            v = acc.get(k, 0) + (-c if sign else c)
                            if v:
                                acc[k] = v
                            else:
                                del acc[k]
        return {k: v for k, v in raw.items() if v}, terms

    # -- chains -----------------------------------------------------------

    def theta_l(self, req: TraceRequest) -> NovikovSeries:
        return self.theta_word(req.factors, req.cutoff, req.max_s)

    def theta(self, chain, cutoff: Fraction | None = None, max_s: int | None = None) -> NovikovSeries:
        """Linear extension over a chain; pure identity words are skipped."""
        den = self.model.den
        cutoff = chain.cutoff if cutoff is None else cutoff
        total = NovikovSeries.zero(den, cutoff)
        for word in chain.words:
            if word.is_scalar_word():
                continue
            scalar = word.scalar
            if not isinstance(scalar, NovikovSeries):
                scalar = NovikovSeries.constant(scalar, den)
            if scalar.is_zero():
                continue
            if max_s is not None:
                lowest = min(a for a, _, _ in scalar.items())
                value = self.theta_word(word.factors, max_s=max_s - lowest)
            else:
                value = self.theta_word(word.factors, cutoff=None if cutoff is None
                                        else cutoff - scalar.valuation())
            total = total + (value * scalar).truncate(cutoff)
        return total


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def theta_l(req: TraceRequest, **kwargs) -> NovikovSeries:
    return TraceEngine(req.module, **kwargs).theta_l(req)
