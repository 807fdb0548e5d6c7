"""Command-line front end: polytope-check, model-build, dirac-build, trace-eval, solve, invariants."""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping

import sympy

from .cyclic import Chain, TensorWord, exp_chain, y_b_chain
from .dirac import DiracModule, EndMorphism
from .errors import (ClosednessFailure, ConsistencyFailure, CutoffMismatch, InputError,
                     NotDelzant, NotSpin, Unsolvable, UnsupportedSuperpotential)
from .lg import ModelHandle, build_model, partials, superpotential, term_text
from .scalars import NovikovSeries, as_fraction, extract_invariants, fraction_text
from .solver import invariant_table, run as run_solver
from .toric import (PolytopeSpec, free_class, is_free, kernel_lattice, load_polytope,
                    parse_polytope, spin_analysis, spin_structures, validate_delzant)
from .trace import TraceEngine, default_workers

log = logging.getLogger("mfinvariants")

EXIT_OK, EXIT_INPUT, EXIT_MATH, EXIT_UNSUPPORTED = 0, 2, 3, 4
BUILTIN_POLYTOPES = ("simplex1", "simplex2", "simplex3")


@dataclass
class RunConfig:
    command: str
    path: str | None = None
    cutoff: Fraction | None = None
    r: str = "s"
    output: str | None = None
    workers: int = 1
    no_prune: bool = False
    term_count_only: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cutoff is not None and self.cutoff < 0:
            raise InputError("cutoff must be nonnegative")
        if self.workers < 1:
            raise InputError("worker count must be at least 1")


# -- loading -------------------------------------------------------------

def data_path(name: str) -> Path:
    return Path(str(resources.files("mfinvariants") / "data" / name))


def resolve_polytope(ref: str, base: Path | None = None) -> PolytopeSpec:
    """A polytope file path, or the name of a bundled one."""
    path = Path(ref)
    if base is not None and not path.is_absolute() and not path.exists():
        path = base / path
    if not path.exists() and ref in BUILTIN_POLYTOPES:
        path = data_path(ref + ".json")
    if path.suffix == ".toml":
        return _load_toml(path)
    return load_polytope(path)


def _load_toml(path: Path) -> PolytopeSpec:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        data = tomllib.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    return parse_polytope(data, name=path.stem)


def load_module(ref: str, base: Path | None = None) -> DiracModule:
    model = build_model(resolve_polytope(ref, base))
    return DiracModule(model)


# -- expressions -----------------------------------------------------------

def _symbols(n: int):
    s, T = sympy.symbols("s T", positive=True)
    zs = sympy.symbols(f"z1:{n + 1}")
    es = sympy.symbols(f"e0:{n + 1}", commutative=False)
    return s, T, zs, es


def _sympify(text: str, names: Mapping) -> sympy.Expr:
    if not isinstance(text, str):
        text = str(text)
    try:
        expr = sympy.sympify(text.replace("^", "**"), locals=dict(names))
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise InputError(f"cannot parse expression {text!r}: {exc}") from None
    unknown = {str(x) for x in expr.free_symbols} - {str(v) for v in names.values()
                                                       if isinstance(v, sympy.Symbol)}
    if unknown:
        raise InputError(f"unknown generator(s) {sorted(unknown)} in {text!r}")
    return expr


def _commutative_terms(expr, s, T, zs, den: int, s_order: int | None) -> dict:
    """Expand a commutative coefficient into {(a, t_num, m...): q}."""
    if not expr.is_polynomial(s) and s_order is not None:
        expr = sympy.series(expr, s, 0, s_order + 1).removeO()
    elif not expr.is_polynomial(s):
        raise InputError(f"{expr} is not polynomial in s; give an s_order")
    out: dict = {}
    for mono, q in sympy.expand(expr).as_coefficients_dict().items():
        if not q.is_Rational:
            raise InputError(f"coefficient {q} is not rational")
        powers = mono.as_powers_dict()
        if set(powers) - {s, T, *zs, sympy.Integer(1)}:
            raise InputError(f"term {mono} is not a monomial in s, T, z")
        a, t = powers.get(s, sympy.Integer(0)), powers.get(T, sympy.Integer(0))
        if not (a.is_Integer and a >= 0):
            raise InputError(f"power of s must be a nonnegative integer in {mono}")
        t_num = sympy.Rational(t) * den
        if not t_num.is_Integer:
            raise InputError(f"T-exponent {t} outside the value group (1/{den})Z")
        ms = []
        for z in zs:
            m = powers.get(z, sympy.Integer(0))
            if not m.is_Integer:
                raise InputError(f"power of {z} must be an integer in {mono}")
            ms.append(int(m))
        if s_order is not None and a > s_order:
            continue
        key = (int(a), int(t_num), *ms)
        out[key] = out.get(key, 0) + Fraction(int(q.p), int(q.q))
    return {k: v for k, v in out.items() if v}


def parse_element(text: str, module: DiracModule, s_order: int | None = None,
                  named: Mapping[str, EndMorphism] | None = None) -> EndMorphism:
    """Left multiplication by a Clifford expression in e0..en with coefficients in s, T, z1..zn.

    ``id`` and ``h0`` are predefined; ``named`` elements must appear as whole words.
    """
    named = dict(named or {})
    if text.strip() in named:
        return named[text.strip()]
    if text.strip() == "h0":
        return module.h0()
    model = module.model
    s, T, zs, es = _symbols(model.n)
    names = {"s": s, "T": T, "id": sympy.Integer(1), "exp": sympy.exp, "sinh": sympy.sinh,
             "cosh": sympy.cosh}
    names.update({str(z): z for z in zs})
    names.update({str(e): e for e in es})
    expr = sympy.expand(_sympify(text, names))
    grouped: dict[tuple[int, ...], sympy.Expr] = {}
    for term in sympy.Add.make_args(expr):
        comm, nc = term.args_cnc()
        word: list[int] = []
        for f in nc:
            base, exp = f.as_base_exp()
            if base not in es or not (exp.is_Integer and exp > 0):
                raise InputError(f"unsupported Clifford factor {f}")
            word += [es.index(base)] * int(exp)
        grouped[tuple(word)] = grouped.get(tuple(word), 0) + sympy.Mul(*comm)
    total = module.zero()
    for word in sorted(grouped):
        poly = _commutative_terms(grouped[word], s, T, zs, model.den, s_order)
        if not poly:
            continue
        phi = module.left_mult({0: poly})
        for i in reversed(word):
            phi = module.generator(i) @ phi
        total = total + phi
    if total.is_zero():
        return module.zero(0)
    total = EndMorphism(total.module, total.entries)
    if total.degree is None:
        raise InputError(f"element {text!r} is not homogeneous")
    return total


def parse_series(text: str, den: int, s_order: int | None = None) -> NovikovSeries:
    s, T = sympy.symbols("s T", positive=True)
    expr = sympy.expand(_sympify(text, {"s": s, "T": T, "exp": sympy.exp, "sinh": sympy.sinh,
                                        "cosh": sympy.cosh}))
    poly = _commutative_terms(expr, s, T, (), den, s_order)
    return NovikovSeries({(k[0], k[1]): v for k, v in poly.items()}, den)


# -- chains ------------------------------------------------------------------

@dataclass
class ChainJob:
    module: DiracModule
    chain: Chain
    cutoff: Fraction | None
    max_s: int | None


def load_chain(path: str | Path) -> ChainJob:
    """Read a chain file.

    Layout: {"model": ..., "cutoff": "p/q"?, "s_order": int?, "elements": {name: expr},
    "chain": [{"coeff": "p/q", "word": [name-or-expr, ...]}] | {"exp": name} | {"y": name, "c": expr}}
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    if not isinstance(data, dict) or "model" not in data or "chain" not in data:
        raise InputError(f"{path}: chain file needs fields 'model' and 'chain'")
    module = load_module(str(data["model"]), path.parent)
    cutoff = as_fraction(data["cutoff"]) if data.get("cutoff") is not None else None
    s_order = data.get("s_order")
    s_order = int(s_order) if s_order is not None else None
    named: dict[str, EndMorphism] = {}
    for name, expr in sorted(data.get("elements", {}).items()):
        named[name] = parse_element(expr, module, s_order, named)
    spec = data["chain"]
    if isinstance(spec, dict) and "exp" in spec:
        if cutoff is None:
            raise InputError("an exp chain needs a cutoff")
        b = parse_element(spec["exp"], module, s_order, named)
        chain = exp_chain(b, cutoff, include_unit=bool(spec.get("unit", False)))
    elif isinstance(spec, dict) and "y" in spec:
        if cutoff is None:
            raise InputError("a y chain needs a cutoff")
        b = parse_element(spec["y"], module, s_order, named)
        c = parse_series(str(spec["c"]), module.model.den, s_order)
        chain = y_b_chain(b, c, cutoff)
    elif isinstance(spec, list):
        words = []
        for k, item in enumerate(spec):
            if not isinstance(item, dict) or "word" not in item:
                raise InputError(f"chain[{k}] needs a 'word' list")
            factors = tuple(parse_element(str(x), module, s_order, named) for x in item["word"])
            words.append(TensorWord(factors, as_fraction(str(item.get("coeff", "1")))))
        chain = Chain(words, cutoff)
    else:
        raise InputError("field 'chain' must be a list of words or an exp/y object")
    return ChainJob(module, chain, cutoff, s_order)


# -- rendering -----------------------------------------------------------------

def series_text(x: NovikovSeries) -> str:
    """Compact rendering such as ``-2*s*T^(1/2) + 1/60*s^5*T^(3/2)``."""
    if x.is_zero():
        return "0"
    out = []
    for a, t, q in x.items():
        factors = []
        if a:
            factors.append("s" if a == 1 else f"s^{a}")
        if t:
            factors.append("T" if t == 1 else f"T^({fraction_text(t)})")
        mag = abs(q)
        if factors:
            body = "*".join(factors) if mag == 1 else f"{fraction_text(mag)}*" + "*".join(factors)
        else:
            body = fraction_text(mag)
        out.append(("-" if q < 0 else "+", body))
    text = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, body in out[1:]:
        text += f" {sign} {body}"
    return text


def series_json(x: NovikovSeries) -> dict:
    return {"text": series_text(x), **x.to_json()}


def invariant_json(rows: list[dict]) -> list[dict]:
    return [{"d": fraction_text(r["d"]), "k": r["k"], "N": fraction_text(r["N"])} for r in rows]


def emit(payload, output: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _fail(exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")
    return code


# -- commands --------------------------------------------------------------------

def cmd_polytope_check(cfg: RunConfig) -> dict:
    spec = resolve_polytope(cfg.path)
    report: dict = {"name": spec.name, "dim": spec.dim, "facets": spec.n_facets}
    try:
        poly = validate_delzant(spec)
    except NotDelzant as exc:
        report.update(delzant=False, reason=str(exc))
        return report
    kl = kernel_lattice(poly)
    sd = spin_analysis(kl)
    report.update(
        delzant=True,
        vertices=[[fraction_text(x) for x in v] for v in poly.vertices],
        J_basis=[list(g) for g in kl.basis],
        grading=list(kl.grading),
        area=[fraction_text(h) for h in kl.area],
        value_group_den=kl.den,
        orientable=sd.orientable,
        comb_rel_spin=sd.comb_rel_spin,
        spin=sd.comb_rel_spin,
        sigma=list(sd.sigma),
        q=list(sd.q_values),
    )
    if sd.comb_rel_spin:
        structures = spin_structures(sd, kl)
        sigma_prime = free_class(sd)
        report.update(spin_structure=list(structures.chosen), orbit_size=len(structures.orbit),
                      sigma_prime=list(sigma_prime), sigma_prime_free=is_free(sigma_prime, kl))
        if report["sigma_prime_free"]:
            report["w"] = series_text(DiracModule(build_model(poly)).w)
    return report


def _model_json(model: ModelHandle) -> dict:
    names = [f"z{j + 1}" for j in range(model.n)]
    subs = {}
    for i, f in enumerate(model.facets):
        if i in model.coords:
            subs[f"f{i}"] = names[model.coords.index(i)]
        else:
            subs[f"f{i}"] = term_text(model, f.key(), Fraction(f.sign))
    return {
        "name": model.name,
        "n": model.n,
        "d": model.d,
        "value_group_den": model.den,
        "t_degree": None if model.t_degree is None else fraction_text(model.t_degree),
        "coordinates": names,
        "facet_monomials": subs,
        "simplex": model.is_simplex,
        "W": superpotential(model).to_text(),
        "dW": [p.to_text() for p in partials(model)],
    }


def cmd_model_build(cfg: RunConfig) -> dict:
    return _model_json(build_model(resolve_polytope(cfg.path)))


def cmd_dirac_build(cfg: RunConfig) -> dict:
    module = load_module(cfg.path)
    return {
        "model": _model_json(module.model),
        "rank": len(module.basis),
        "basis": list(module.labels),
        "w": series_text(module.w),
        "D": module.D.to_json(),
        "D_squared_is_W_minus_w": True,
    }


def cmd_trace_eval(cfg: RunConfig) -> dict:
    job = load_chain(cfg.path)
    engine = TraceEngine(job.module, workers=cfg.workers, prune=not cfg.no_prune)
    t0 = time.perf_counter()
    if cfg.term_count_only:
        from .trace import theta_word_count
        words = [w for w in job.chain.words if not w.is_scalar_word()]
        counts = [theta_word_count(job.module.n, len(w.factors)) for w in words]
        log.info("wall_time %.3f s", time.perf_counter() - t0)
        return {"words": len(words), "terms_evaluated": sum(counts), "residues_evaluated": sum(counts)}
    value = engine.theta(job.chain, cutoff=job.cutoff, max_s=job.max_s)
    stats = engine.stats.to_json()
    log.info("wall_time %.3f s", stats.get("wall_time", time.perf_counter() - t0))
    return {
        "series": series_json(value),
        "diagnostics": {"terms_evaluated": stats["terms_evaluated"],
                        "residues_evaluated": stats["residues_evaluated"],
                        "words": stats["words"], "words_pruned": stats["words_pruned"]},
    }


def _solve(cfg: RunConfig):
    module = load_module(cfg.path)
    model = module.model
    if not model.is_simplex:
        raise UnsupportedSuperpotential("the trace formula is implemented for simplices only")
    cutoff = cfg.cutoff if cfg.cutoff is not None else Fraction(7)
    r = parse_series(cfg.r, model.den)
    engine = TraceEngine(module, workers=cfg.workers, prune=not cfg.no_prune)

    def report(level):
        log.info("level %s: c += %s, theta %s, %.2f s", fraction_text(level.level),
                 series_text(level.c_step), series_text(level.theta), level.seconds)

    state, rows = run_solver(module, r=r, cutoff=cutoff, engine=engine, log=report)
    return module, cutoff, state, rows


def cmd_solve(cfg: RunConfig) -> dict:
    module, cutoff, state, rows = _solve(cfg)
    model = module.model
    out = {"model": model.name, "n": model.n, "value_group_den": model.den,
           "t_degree": fraction_text(model.t_degree), "cutoff": fraction_text(cutoff),
           "r": cfg.r, "invariants": invariant_json(rows)}
    if state is None:
        out.update(c=series_json(NovikovSeries.zero(model.den)), b=None, levels=[])
        return out
    out["c"] = series_json(state.c.truncate(cutoff))
    out["b"] = state.b.to_json()
    out["levels"] = [{"level": fraction_text(h.level), "c_step": series_text(h.c_step),
                      "theta": series_text(h.theta), "unknowns": h.unknowns,
                      "b_step_terms": sum(1 for _ in h.b_step.terms())} for h in state.history]
    return out


def cmd_invariants(cfg: RunConfig) -> dict:
    """Invariant table from a solve result, a series JSON file, or a fresh solve."""
    if cfg.path and Path(cfg.path).suffix == ".json" and _is_result(cfg.path):
        data = json.loads(Path(cfg.path).read_text())
        c = NovikovSeries.from_json(data["c"] if "c" in data else data)
        n = int(cfg.extra.get("n") or data.get("n") or 0)
        if not n:
            raise InputError("the dimension n is required (--n)")
        den = max(c.den, int(data.get("value_group_den", 1)))
        cutoff = as_fraction(data.get("cutoff") or "0")
        if cfg.cutoff is not None:
            # a stored result is only valid below its own cutoff
            cutoff = min(cfg.cutoff, cutoff) if cutoff > 0 else cfg.cutoff
        if cutoff > 0:
            rows = invariant_table(c.with_den(den), n, Fraction(2 * (n + 1)), den, cutoff)
        else:
            rows = [{"d": d, "k": k, "N": v} for (d, k), v in sorted(extract_invariants(c, n).items())]
        return {"n": n, "invariants": invariant_json(rows)}
    module, cutoff, _, rows = _solve(cfg)
    return {"n": module.model.n, "cutoff": fraction_text(cutoff), "invariants": invariant_json(rows)}


def _is_result(path: str) -> bool:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError):
        return False
    return isinstance(data, dict) and ("c" in data or "terms" in data)


COMMANDS = {
    "polytope-check": cmd_polytope_check,
    "model-build": cmd_model_build,
    "dirac-build": cmd_dirac_build,
    "trace-eval": cmd_trace_eval,
    "solve": cmd_solve,
    "invariants": cmd_invariants,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfinvariants", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, file_help):
        p.add_argument("path", nargs="?", help=file_help)
        p.add_argument("-o", "--output", help="write JSON here instead of stdout")

    for name in ("polytope-check", "model-build", "dirac-build"):
        common(sub.add_parser(name), "polytope JSON/TOML file or a bundled name (simplex1..3)")

    p = sub.add_parser("trace-eval")
    common(p, "chain JSON file")
    p.add_argument("--workers", type=int, help="worker processes (default: $MFINV_WORKERS or 1)")
    p.add_argument("--no-prune", action="store_true", help="evaluate parity-vanishing words too")
    p.add_argument("--term-count-only", action="store_true", help="report formula term counts only")

    for name in ("solve", "invariants"):
        p = sub.add_parser(name)
        common(p, "solve result or series JSON (invariants only)")
        p.add_argument("--model", help="polytope file or bundled name")
        p.add_argument("--cutoff", help="rational cutoff p/q; levels strictly below it are solved")
        p.add_argument("--r", default="s", help="normalization series r (default: s)")
        p.add_argument("--workers", type=int)
        p.add_argument("--no-prune", action="store_true")
        if name == "invariants":
            p.add_argument("--n", type=int, help="dimension, when reading a bare series")
    return parser


def config_from_args(args) -> RunConfig:
    path = getattr(args, "model", None) or args.path
    if args.command in ("solve",) and not path:
        raise InputError("solve needs --model")
    if args.command == "invariants" and not path:
        raise InputError("invariants needs a result file or --model")
    if args.command not in ("solve", "invariants") and not path:
        raise InputError(f"{args.command} needs an input file")
    if args.command == "invariants" and getattr(args, "model", None):
        path = args.model
    cutoff = getattr(args, "cutoff", None)
    try:
        cutoff = None if cutoff is None else as_fraction(cutoff)
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cutoff {args.cutoff!r} is not a rational p/q") from None
    workers = getattr(args, "workers", None)
    return RunConfig(
        command=args.command, path=path, cutoff=cutoff, r=getattr(args, "r", "s"),
        output=args.output, workers=workers if workers is not None else default_workers(),
        no_prune=getattr(args, "no_prune", False),
        term_count_only=getattr(args, "term_count_only", False),
        extra={"n": getattr(args, "n", None)},
    )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        if cfg.command in ("solve", "invariants") and cfg.cutoff is not None and cfg.cutoff <= 0 \
                and not (cfg.command == "invariants" and _is_result(cfg.path)):
            payload = {"cutoff": fraction_text(cfg.cutoff), "invariants": []}
        else:
            payload = COMMANDS[cfg.command](cfg)
    except (InputError, NotDelzant, CutoffMismatch) as exc:
        return _fail(exc, EXIT_INPUT)
    except (UnsupportedSuperpotential, NotSpin) as exc:
        return _fail(exc, EXIT_UNSUPPORTED)
    except (Unsolvable, ConsistencyFailure, ClosednessFailure) as exc:
        return _fail(exc, EXIT_MATH)
    emit(payload, cfg.output)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
