"""Inductive construction of a point-like bounding cochain.

Starting from ``b = r * h0`` and ``c = 0`` the solver walks the value group
upward one step at a time.  At each level E it

1. reads the obstruction o = weight-E part of ``mc(b) - c id``,
2. solves ``delta(b_E) - c_E id = -o`` on the weight-E slice,
3. computes the trace discrepancy theta at weight E and subtracts ``theta * h0``.

Slice unknowns are Clifford monomials ``s^a T^beta z^m e_S`` acting by left
multiplication.  Their order fixes the particular solution: fewer generators
first, then the most balanced exponent vector, then lexicographic.  Matrix
units are only used when the Clifford candidates cannot solve a slice.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .cyclic import exp_chain, y_b_chain
from .dirac import DiracModule, EndMorphism, bits, delta
from .errors import ClosednessFailure, ConsistencyFailure, InputError, Unsolvable, UnsupportedSuperpotential
from .scalars import NovikovSeries, extract_invariants
from .trace import TraceEngine, TraceStats


def mc(b: EndMorphism) -> EndMorphism:
    """delta(b) - b^2."""
    if b.degree not in (None, 1) and not b.is_zero():
        raise InputError("mc needs a degree-one morphism")
    b = b.with_degree(1)
    return (delta(b) - b @ b).with_degree(2)


def filtration_ladder(den: int, start: Fraction, stop: Fraction) -> list[Fraction]:
    """start, start + 1/den, ... up to stop inclusive."""
    step = Fraction(1, den)
    out, e = [], Fraction(start)
    while e <= stop:
        out.append(e)
        e += step
    return out


@dataclass
class LevelReport:
    level: Fraction
    c_step: NovikovSeries
    b_step: EndMorphism
    theta: NovikovSeries
    unknowns: int
    trace: dict = field(default_factory=dict)
    seconds: float = 0.0


@dataclass
class BoundingCochainState:
    b: EndMorphism
    c: NovikovSeries
    level: Fraction
    r: NovikovSeries
    history: list[LevelReport] = field(default_factory=list)


# -- slice monomials ---------------------------------------------------------

class SliceWindow:
    """Enumerates s^a T^beta z^m of prescribed weight and degree.

    The weight of s^a T^beta z^m X at a vertex v is a + beta + <m, z(v)> +
    kappa(v), where kappa depends on the attached X (a Clifford monomial or a
    matrix unit).  The dense-coordinate vertex has z(v) = 0, which bounds the
    exponent sum from above; its edge neighbours bound each m_j from below.
    """

    def __init__(self, module: DiracModule):
        model = module.model
        if model.t_degree is None or model.t_degree <= 0:
            raise UnsupportedSuperpotential("slice enumeration needs a positive T-degree")
        self.model = model
        self.n = model.n
        self.den = model.den
        zvals = [model.variable_values(v) for v in model.vertex_values]
        self.zvals = zvals
        origin = [k for k, z in enumerate(zvals) if not any(z)]
        if len(origin) != 1:
            raise UnsupportedSuperpotential("no vertex with vanishing coordinates")
        self.origin = origin[0]
        self.edges = []
        for j in range(self.n):
            hits = [(k, z[j]) for k, z in enumerate(zvals)
                    if z[j] > 0 and all(z[i] == 0 for i in range(self.n) if i != j)]
            if not hits:
                raise UnsupportedSuperpotential(f"no edge along coordinate {j + 1}")
            self.edges.append(min(hits, key=lambda item: item[1]))
        self.zdeg = [model.key_degree((0, 0) + tuple(1 if i == j else 0 for i in range(self.n)))
                     for j in range(self.n)]
        if any(g != self.zdeg[0] or g <= 0 for g in self.zdeg):
            raise UnsupportedSuperpotential("coordinates of unequal degree")

    def monomials(self, weight: Fraction, degree: Fraction, kappa: Sequence[Fraction]) -> Iterator[tuple]:
        """Keys (a, t_num, m...) with the given weight, degree and vertex offsets kappa."""
        n, den, tdeg, g = self.n, self.den, self.model.t_degree, self.zdeg[0]
        for a in range(0, math.floor(weight) + 1):
            # degree: (1-n) a + g M + tdeg beta = degree; weight: a + beta + min_v(...) = weight
            rest = degree - (1 - n) * a
            # origin vertex: target <= kappa[origin]  =>  beta >= weight - a - kappa[origin]
            beta_min = weight - a - kappa[self.origin]
            M = math.floor((rest - tdeg * beta_min) / g)
            guard = 0
            while True:
                beta = (rest - g * M) / tdeg
                target = weight - a - beta
                lows = []
                for j, (k, length) in enumerate(self.edges):
                    lows.append(math.ceil((target - kappa[k]) / length))
                if sum(lows) > M:
                    break
                guard += 1
                if guard > 10_000:
                    raise UnsupportedSuperpotential("slice window does not close")
                t_num = beta * den
                if t_num.denominator == 1:
                    for m in _vectors_with_sum(lows, M):
                        value = min(sum((e * z for e, z in zip(m, zv)), Fraction(0)) + kappa[v]
                                    for v, zv in enumerate(self.zvals))
                        if value == target:
                            yield (a, int(t_num)) + m
                M -= 1


def _vectors_with_sum(lows: Sequence[int], total: int) -> Iterator[tuple[int, ...]]:
    if len(lows) == 1:
        if total >= lows[0]:
            yield (total,)
        return
    spare = total - sum(lows)
    for x in range(lows[0], lows[0] + spare + 1):
        for rest in _vectors_with_sum(lows[1:], total - x):
            yield (x,) + rest


# -- sparse exact linear algebra -------------------------------------------

class EchelonSolver:
    """Incremental elimination; earlier columns win as pivots.

    Each pivot stores its reduced vector and the combination of original
    columns producing it, so a right-hand side in the span is expressed in
    pivot columns only (free columns get coefficient zero).
    """

    def __init__(self):
        self.pivots: list[tuple[object, dict, dict]] = []   # (pivot row, reduced vec, combo)

    def _reduce(self, vec: dict, combo: dict) -> tuple[dict, dict]:
        vec, combo = dict(vec), dict(combo)
        for row, pvec, pcombo in self.pivots:
            f = vec.get(row)
            if not f:
                continue
            for k, v in pvec.items():
                x = vec.get(k, 0) - f * v
                if x:
                    vec[k] = x
                else:
                    vec.pop(k, None)
            for k, v in pcombo.items():
                x = combo.get(k, 0) - f * v
                if x:
                    combo[k] = x
                else:
                    combo.pop(k, None)
        return vec, combo

    def add_column(self, index: int, vec: dict) -> bool:
        vec, combo = self._reduce(vec, {index: Fraction(1)})
        if not vec:
            return False
        row = min(vec, key=repr)
        f = vec[row]
        vec = {k: v / f for k, v in vec.items()}
        combo = {k: v / f for k, v in combo.items()}
        self.pivots.append((row, vec, combo))
        return True

    def solve(self, rhs: dict) -> dict | None:
        residual, combo = self._reduce(rhs, {})
        if residual:
            return None
        return {k: -v for k, v in combo.items() if v}


def _slice_vector(phi: EndMorphism, weight: Fraction) -> dict:
    out = {}
    for i, j, k, v in phi.terms():
        if phi.term_norm(i, j, k) == weight:
            out[(i, j, k)] = v
    return out


class Solver:
    """Bounding-cochain construction for one Dirac module."""

    def __init__(self, module: DiracModule, engine: TraceEngine | None = None, log=None):
        self.module = module
        self.model = module.model
        self.n = module.n
        self.den = self.model.den
        self.engine = engine or TraceEngine(module)
        self.window = SliceWindow(module)
        self.log = log
        self.h0 = module.h0()
        self._vertex_facets = [tuple(v) for v in self.model.vertex_values]

    # -- scalar bookkeeping ------------------------------------------------

    def scalar_exponent(self, weight: Fraction, degree: int) -> tuple[int, int] | None:
        """(a, t_num) of the unique s^a T^beta with this weight and degree, if any."""
        tdeg = self.model.t_degree
        for a in range(0, math.floor(weight) + 1):
            beta = weight - a
            if (1 - self.n) * a + tdeg * beta == degree:
                t = beta * self.den
                if t.denominator == 1:
                    return a, int(t)
        return None

    # -- candidates ----------------------------------------------------------

    def clifford_candidates(self, weight: Fraction) -> list[EndMorphism]:
        d = self.model.d
        found = []
        for size in range(1, d + 1, 2):
            for S in itertools.combinations(range(d), size):
                kappa = [sum((vf[i] for i in S), Fraction(0)) / 2 for vf in self._vertex_facets]
                for key in self.window.monomials(weight, Fraction(1 - size), kappa):
                    m = key[2:]
                    found.append(((size, sum(x * x for x in m), S, m, key[0], key[1]), S, key))
        found.sort(key=lambda item: item[0])
        out = []
        for _, S, key in found:
            mask = sum(1 << i for i in S)
            phi = self.module.left_mult({mask: {key: Fraction(1)}}, 1)
            if not phi.is_zero():
                out.append(phi)
        return out

    def matrix_unit_candidates(self, weight: Fraction) -> list[EndMorphism]:
        module = self.module
        size = len(module.basis)
        out = []
        for row, col in itertools.product(range(size), repeat=2):
            kappa = [bv[row] - bv[col] for _, bv in module.vertex_data]
            deg = Fraction(1 - module.degrees[row] + module.degrees[col])
            for key in self.window.monomials(weight, deg, kappa):
                out.append(EndMorphism(module, {(row, col): {key: Fraction(1)}}, 1))
        return out

    # -- one slice -------------------------------------------------------------

    def obstruction_slice(self, state: BoundingCochainState, weight: Fraction) -> EndMorphism:
        """Weight-`weight` part of mc(b) - c id; lower weights must already vanish."""
        module = self.module
        defect = mc(state.b) - module.identity() * state.c
        for norm in defect.norms():
            if norm < weight:
                raise ConsistencyFailure(f"Maurer-Cartan defect at weight {norm} below level {weight}")
        o = defect.weight_slice(weight).with_degree(2)
        if _slice_vector(delta(o), weight):
            raise ClosednessFailure(f"obstruction at weight {weight} is not closed")
        return o

    def solve_delta(self, o: EndMorphism, weight: Fraction) -> tuple[NovikovSeries, EndMorphism, int]:
        """(c_E, b_E) with delta(b_E) - c_E id = -o on the weight slice."""
        module = self.module
        zero_b = module.zero(1)
        zero_c = NovikovSeries.zero(self.den)
        rhs = {k: -v for k, v in _slice_vector(o, weight).items()}
        if not rhs:
            return zero_c, zero_b, 0
        cexp = self.scalar_exponent(weight, 2)
        columns: list = []
        solver = EchelonSolver()
        if cexp is not None:
            scalar = NovikovSeries({cexp: 1}, self.den)
            columns.append(("c", scalar))
            solver.add_column(0, _slice_vector(module.identity() * scalar * -1, weight))
        result = self._try(solver, columns, self.clifford_candidates(weight), rhs, weight)
        if result is None:
            result = self._try(solver, columns, self.matrix_unit_candidates(weight), rhs, weight)
        if result is None:
            raise Unsolvable(f"obstruction at weight {weight} is not cohomologous to a multiple of id")
        combo = result
        c_step = zero_c
        b_step = zero_b
        for idx, coeff in sorted(combo.items()):
            kind, obj = columns[idx]
            if kind == "c":
                c_step = c_step + obj * coeff
            else:
                b_step = b_step + obj * coeff
        return c_step, b_step.with_degree(1), len(columns)

    def _try(self, solver: EchelonSolver, columns: list, candidates, rhs, weight):
        for phi in candidates:
            columns.append(("b", phi))
            solver.add_column(len(columns) - 1, _slice_vector(delta(phi), weight))
        return solver.solve(rhs)

    # -- trace correction ------------------------------------------------------

    def theta_correction(self, state: BoundingCochainState, b_step: EndMorphism,
                         weight: Fraction) -> tuple[NovikovSeries, TraceStats]:
        """Weight-`weight` part of Theta(exp b) + Theta_1(b_E) - Theta(y_b) - r."""
        zero = NovikovSeries.zero(self.den)
        stats = TraceStats()
        if self.scalar_exponent(weight, 1 - self.n) is None:
            return zero, stats
        engine = self.engine
        before = TraceStats()
        before.merge(engine.stats)
        cutoff = weight + Fraction(1, self.den)
        b = state.b
        total = engine.theta(exp_chain(b, cutoff, include_unit=False), cutoff=cutoff)
        if not b_step.is_zero():
            total = total + engine.theta_word([b_step], cutoff=cutoff)
        if not state.c.is_zero() and not b.is_zero():
            total = total - engine.theta(y_b_chain(b, state.c, cutoff), cutoff=cutoff)
        total = total - state.r.truncate(cutoff)
        for w in total.weights():
            if w < weight:
                raise ConsistencyFailure(f"trace defect at weight {w} below level {weight}")
        theta = total.weight_slice(weight).truncate(None)
        stats.merge(engine.stats)
        for name in ("words", "words_pruned", "formula_terms", "residue_calls"):
            setattr(stats, name, getattr(stats, name) - getattr(before, name))
        stats.wall_time -= before.wall_time
        return theta, stats

    # -- driver -------------------------------------------------------------------

    def start(self, r: NovikovSeries) -> BoundingCochainState:
        for a, t, _ in r.items():
            deg = (1 - self.n) * a + self.model.t_degree * t
            if deg != 1 - self.n:
                raise InputError(f"r has a term s^{a} T^{t} of degree {deg}, expected {1 - self.n}")
        v = r.valuation()
        if v < 0:
            raise InputError("r must have nonnegative valuation")
        level = Fraction(v) if v != math.inf else Fraction(1, self.den)
        b = (self.h0 * r).with_degree(1) if not r.is_zero() else self.module.zero(1)
        return BoundingCochainState(b=b, c=NovikovSeries.zero(self.den), level=level, r=r)

    def step(self, state: BoundingCochainState, weight: Fraction) -> BoundingCochainState:
        t0 = time.perf_counter()
        o = self.obstruction_slice(state, weight)
        c_step, b_step, unknowns = self.solve_delta(o, weight)
        theta, stats = self.theta_correction(state, b_step, weight)
        b = state.b + b_step
        if not theta.is_zero():
            b = b - self.h0 * theta
        report = LevelReport(weight, c_step, b_step, theta, unknowns, stats.to_json(),
                             time.perf_counter() - t0)
        if self.log:
            self.log(report)
        return BoundingCochainState(b=b.with_degree(1), c=state.c + c_step, level=weight, r=state.r,
                                    history=state.history + [report])

    def run(self, r: NovikovSeries, cutoff: Fraction) -> BoundingCochainState:
        """Process every level strictly below the cutoff."""
        state = self.start(r)
        step = Fraction(1, self.den)
        for weight in filtration_ladder(self.den, state.level + step, Fraction(cutoff) - step):
            state = self.step(state, weight)
        return state


def invariant_table(c: NovikovSeries, n: int, t_degree: Fraction, den: int,
                    cutoff: Fraction) -> list[dict]:
    """N_{d,k} for every admissible (d, k) with d + k - 1 < cutoff, zeros included."""
    found = extract_invariants(c, n if t_degree == 2 * (n + 1) else None)
    rows = []
    k = 1
    while k - 1 < cutoff:
        d = Fraction(2 - (1 - n) * (k - 1)) / t_degree
        if d > 0 and (d * den).denominator == 1 and d + k - 1 < cutoff:
            rows.append({"d": d, "k": k, "N": found.get((d, k), Fraction(0))})
        k += 1
    rows.sort(key=lambda row: (row["d"], row["k"]))
    return rows


def run(module: DiracModule, r: NovikovSeries | None = None, cutoff: Fraction = Fraction(7),
        engine: TraceEngine | None = None, log=None):
    """Solve to the cutoff; returns (state, invariant rows)."""
    model = module.model
    if r is None:
        r = NovikovSeries.monomial(1, 1, 0, den=model.den)
    cutoff = Fraction(cutoff)
    if cutoff <= 0:
        return None, []
    solver = Solver(module, engine, log)
    state = solver.run(r, cutoff)
    c = state.c.truncate(cutoff)
    return state, invariant_table(c, model.n, model.t_degree, model.den, cutoff)
