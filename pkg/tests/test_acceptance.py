"""Acceptance criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
All comparisons are exact.
"""
import itertools
import json
import random
import sys
import time
from fractions import Fraction as F
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mfinvariants.cli import load_module, parse_element, parse_series
from mfinvariants.cyclic import TensorWord, cj_constants, cyclic_t, d_cc, exp_chain, y_b_chain
from mfinvariants.dirac import DiracModule, delta
from mfinvariants.errors import NotDelzant
from mfinvariants.lg import LaurentElement as L, build_model
from mfinvariants.residue import canonical_residue_sum
from mfinvariants.scalars import NovikovSeries as N, extract_invariants
from mfinvariants.solver import mc, run
from mfinvariants.toric import (PolytopeSpec, kernel_lattice, simplex, spin_analysis,
                                validate_delzant)
from mfinvariants.trace import TraceEngine, theta_word_count

from oracles import critical_residue_sum_n1, r_linear_chain, sympy_series, unit_fingerprint
from mfinvariants.cyclic import cyclic_normal_form

REPORT = Path(__file__).resolve().parent.parent / "benchmark_report.json"

N1_B = "(exp(-s) - exp(s)) * z1 / (2*T^(1/2)) * e0 - (exp(-s) + exp(s) - 2) * e1 / 2"
N1_C = "(exp(s) - exp(-s)) * T^(1/2)"
N3_B5 = "-s*z1*z2*z3/T^(1/2)*e0 + s^2*z2*z3/2*e1 + s^4*z1*z2*z3^2/8*e2"
N3_B7 = N3_B5 + " + s^5*T^(1/2)*z1*z2*z3/120*e0"


class Check:
    def __init__(self):
        self.failures = []

    def __call__(self, ok, what):
        if not ok:
            self.failures.append(what)


def modules():
    return load_module("simplex1"), load_module("simplex3")


def word_degree(module, factors):
    return sum(f.degree for f in factors) - (len(factors) - 1) - module.n


def series_degree(module, x):
    return {module.model.key_degree((a, int(t * module.model.den)) + (0,) * module.n)
            for a, t, _ in x.items()}


# -- criteria -----------------------------------------------------------------------

def criterion_1(check):
    m1 = build_model(simplex(1))
    for l in range(1, 6):
        for m in range(0, 2 * l - 1):
            check(canonical_residue_sum((m,), (l,), m1).is_zero(), f"res1 m={m} l={l}")
        check(canonical_residue_sum((2 * l - 1,), (l,), m1) == N.constant(1, 2), f"res2 l={l}")


def criterion_2(check):
    for M in modules():
        got = TraceEngine(M, workers=1).theta_word([M.h0()])
        check(got == N.constant(1, M.model.den), f"Theta_1(h0) n={M.n}: {got}")


def criterion_3(check):
    m1, m3 = modules()
    for M in (m1, m3):
        engine = TraceEngine(M, workers=1)
        for l in (1, 3, 5):
            check(engine.theta_word([M.identity()] * l).is_zero(), f"Theta_{l}(id) n={M.n}")
    engine = TraceEngine(m3, workers=1)
    b = parse_element(N3_B5, m3, 6)
    words = [[m3.h0()]] + [[b] * l for l in range(1, 5)]
    words += [[m3.generator(i), m3.generator(j), m3.h0()] for i in range(4) for j in range(4)]
    nonzero = 0
    for w in words:
        got = engine.theta_word(w, cutoff=F(25, 4))
        if got:
            nonzero += 1
            check(series_degree(m3, got) == {word_degree(m3, w)}, f"degree of Theta_{len(w)}")
    check(nonzero >= 5, f"only {nonzero} nonzero evaluations")


def criterion_4(check):
    table = cj_constants(2)
    expected = {(1,): 1, (2,): 2, (1, 1): F(1, 2), (3,): 5, (1, 2): 2}
    for J, v in expected.items():
        check(table.get(J) == v, f"C_{J} = {table.get(J)}, expected {v}")


def criterion_5(check):
    M = load_module("simplex1")
    order = 8
    cutoff = F(order + 1)
    b = parse_element(N1_B, M, order)
    c = parse_series(N1_C, 2, order)
    check(mc(b).truncate_s(order).scalar_value() == c, "mc(b) = c id")
    engine = TraceEngine(M, workers=1)
    y = engine.theta(y_b_chain(b, c, cutoff), cutoff)
    check(y.is_zero(), f"Theta(y_b) = {y}")
    ex = engine.theta(exp_chain(b, cutoff, include_unit=False), cutoff)
    check((ex - y).truncate_s(order) == N.monomial(1, 1, 0, den=2), f"Theta(exp~ b) = {ex - y}")
    inv = extract_invariants(c, 1)
    expected = {(F(1, 2), k): F(2) for k in range(2, order + 1, 2)}
    check(inv == expected, f"invariants {inv}")


def criterion_6(check):
    M = load_module("simplex3")
    engine = TraceEngine(M, workers=1)
    cutoff = F(25, 4)       # everything of weight <= 6
    b = parse_element(N3_B5, M, 6)
    s5T = lambda q: N.monomial(q, 5, 1, den=4)
    expected = {1: N.monomial(1, 1, 0, den=4), 2: s5T(F(1, 8)), 3: s5T(F(1, 24)),
                4: s5T(F(-3, 10)), 5: s5T(F(1, 6))}
    for l, value in expected.items():
        got = (engine.theta_word([b] * l, cutoff=cutoff) * F(1, l)).truncate(cutoff)
        check(got == value, f"Theta_{l}(b^{l}/{l}) = {got}")
    c = N({(1, 2): -2}, 4)
    cid, one = M.identity() * c, M.identity()
    contributions = {1: s5T(F(1, 8)), 3: s5T(F(-11, 30)), 4: s5T(F(4, 15))}
    for i, value in contributions.items():
        got = -engine.theta_word([cid, one] + [b] * i, cutoff=cutoff).truncate(cutoff)
        check(got == value, f"y word c.id (x) id (x) b^{i}: {got}")
    total = engine.theta(y_b_chain(b, c, cutoff), cutoff)
    check(total == s5T(F(1, 40)), f"Theta(y_b5) = {total}")


def criterion_7(check):
    M = load_module("simplex3")
    engine = TraceEngine(M, workers=1)
    t0 = time.perf_counter()
    state, rows = run(M, cutoff=F(7), engine=engine)
    solve_seconds = time.perf_counter() - t0
    check(state.c == N({(1, 2): -2, (5, 6): F(1, 60)}, 4), f"c = {state.c}")
    check(state.b == parse_element(N3_B7, M, 5), "b_(7)")
    table = {(r["d"], r["k"]): r["N"] for r in rows}
    for (d, k), v in table.items():
        want = {(F(1, 2), 2): -2, (F(3, 2), 6): 2}.get((d, k), 0)
        check(v == want, f"N_{d},{k} = {v}")
    check(set(table) == {(F(k, 4), k) for k in range(1, 7)}, f"table keys {sorted(table)}")

    counts = {}
    for l in (1, 4, 7):
        bench = TraceEngine(M, workers=1, prune=False)
        t1 = time.perf_counter()
        bench.theta_word([M.identity()] * l)
        counts[l] = {"residues_evaluated": bench.stats.formula_terms,
                     "theta_word_count": theta_word_count(3, l),
                     "seconds": round(time.perf_counter() - t1, 3)}
        check(bench.stats.formula_terms == theta_word_count(3, l) == {1: 6, 4: 3900, 7: 345912}[l],
              f"residue count l={l}: {bench.stats.formula_terms}")
    REPORT.write_text(json.dumps({
        "n": 3, "cutoff": "7", "solve_seconds": round(solve_seconds, 2),
        "solve_trace_stats": engine.stats.to_json(), "residue_counts": counts}, indent=2, sort_keys=True) + "\n")


def pool(M):
    out = [M.h0(), M.D, M.identity(), M.generator(0) @ M.generator(1), M.partial_D(1) @ M.D]
    out += [M.generator(i) for i in range(M.d)]
    out += [M.identity() * L.variable(M.model, j) for j in range(1, M.n + 1)]
    out += [M.h0() * N.monomial(1, 1, 0, den=M.model.den)]
    return out


def criterion_8(check):
    rng = random.Random(20240601)
    for M in modules():
        items = pool(M)
        engine = TraceEngine(M, workers=1)
        W = M.W - L.from_series(M.model, M.w)
        check(M.D @ M.D == M.identity() * W, f"D^2 n={M.n}")
        for _ in range(50):
            factors = [rng.choice(items) for _ in range(rng.randint(1, 3))]
            a, b = rng.choice(items), rng.choice(items)
            da = delta(a)
            check(delta(da).is_zero(), "delta^2")
            check(da.end_norm() >= a.end_norm(), "nu(delta a) >= nu(a)")
            ab = a @ b
            check(ab.is_zero() or ab.end_norm() >= a.end_norm() + b.end_norm(), "nu(ab)")
            sign = -1 if (a.degree * b.degree) % 2 else 1
            check(ab.supertrace() == (b @ a).supertrace() * sign, "graded trace symmetry")
            w = TensorWord(tuple(factors))
            r = cyclic_t(w)
            check(engine.theta_word(list(r.factors)) * r.scalar == engine.theta_word(factors),
                  f"Theta(1 - t) n={M.n}")
            total = N.zero(M.model.den)
            for v in d_cc(w):
                total = total + engine.theta_word(list(v.factors)) * v.scalar
            check(total.is_zero(), f"Theta d_cc n={M.n}")
        for mask in range(1 << M.d):
            ref = M.reduce_mask(mask)
            for order in itertools.permutations(range(len(M.relations))):
                check(M.reduce_mask(mask, order=order) == ref, "confluence")
    m1 = build_model(simplex(1))
    pairs = list(itertools.product(range(-10, 11), range(1, 6)))
    for m, l in pairs:
        coeff, expo = critical_residue_sum_n1(m, l)
        want = N.monomial(coeff, 0, expo, den=2) if coeff else N.zero(2)
        check(canonical_residue_sum((m,), (l,), m1) == want, f"residue oracle m={m} l={l}")
    check(len(pairs) >= 100, "sample size")


def criterion_9(check):
    table = {1: (True, (1,)), 2: (False, None), 3: (True, (0,)), 5: (True, (1,))}
    for n, (spin, sigma) in table.items():
        sd = spin_analysis(kernel_lattice(validate_delzant(simplex(n))))
        check(sd.comb_rel_spin is spin, f"spin n={n}")
        if spin:
            check(sd.sigma == sigma, f"sigma n={n}: {sd.sigma}")
    square = PolytopeSpec(2, ((-1, 0), (1, 0), (0, -1), (0, 2)), (F(0), F(1), F(0), F(1)))
    try:
        validate_delzant(square)
        check(False, "non-primitive square accepted")
    except NotDelzant:
        pass


CRITERIA = [
    (1, "residue lemmas n=1", criterion_1, 1),
    (2, "trace normalization", criterion_2, 1),
    (3, "unitality and dimension", criterion_3, 10),
    (4, "C_J constants", criterion_4, 1),
    (5, "n=1 closed form", criterion_5, 10),
    (6, "n=3 intermediate traces", criterion_6, 300),
    (7, "n=3 solver end to end", criterion_7, 1800),
    (8, "property suite", criterion_8, 300),
    (9, "toric suite", criterion_9, 1),
]


def evaluate(number, title, fn, budget):
    check = Check()
    t0 = time.perf_counter()
    try:
        fn(check)
    except Exception as exc:       # report, then fail
        check(False, f"{type(exc).__name__}: {exc}")
    seconds = time.perf_counter() - t0
    if seconds > budget:
        check(False, f"runtime {seconds:.1f}s over budget {budget}s")
    status = "PASS" if not check.failures else "FAIL"
    line = f"{status} criterion {number}: {title} ({seconds:.2f}s, budget {budget}s)"
    if check.failures:
        line += " -- " + "; ".join(check.failures[:5])
    return status == "PASS", line


@pytest.mark.parametrize("number,title,fn,budget", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, fn, budget, capsys):
    ok, line = evaluate(number, title, fn, budget)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [evaluate(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
