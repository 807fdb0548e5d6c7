"""Delzant polytope combinatorics.

A polytope is ``{x : <x, v_i> <= lambda_i}`` with primitive integer normals
``v_i``.  From it we build the kernel lattice ``J = ker(Z^d -> Z^n)``, the
grading and area maps on ``J``, the mod-2 quadratic form ``q`` and the spin
data that the Landau-Ginzburg model and Dirac module depend on.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from pathlib import Path

import sympy

from .errors import InputError, NotDelzant, NotSpin
from .scalars import as_fraction

Vector = tuple[int, ...]


@dataclass(frozen=True)
class PolytopeSpec:
    dim: int
    normals: tuple[Vector, ...]
    offsets: tuple[Fraction, ...]
    name: str = ""

    @property
    def n_facets(self) -> int:
        return len(self.normals)


@dataclass(frozen=True)
class Polytope:
    """A validated Delzant polytope with its vertices."""

    spec: PolytopeSpec
    vertices: tuple[tuple[Fraction, ...], ...]
    vertex_facets: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def n_facets(self) -> int:
        return self.spec.n_facets

    @property
    def normals(self):
        return self.spec.normals

    @property
    def offsets(self):
        return self.spec.offsets

    def facet_values(self, x) -> tuple[Fraction, ...]:
        """lambda_i - <x, v_i> for every facet."""
        return tuple(lam - sum(xi * vi for xi, vi in zip(x, v))
                     for v, lam in zip(self.normals, self.offsets))


@dataclass(frozen=True)
class KernelLattice:
    polytope: Polytope
    coords: tuple[int, ...]          # facets used as dense coordinates
    basis: tuple[Vector, ...]        # one generator per non-coordinate facet
    eliminated: tuple[int, ...]      # facet whose coefficient is 1 in each generator
    grading: tuple[int, ...]         # g_J on the basis
    area: tuple[Fraction, ...]       # h_J on the basis
    den: int                         # value-group denominator
    t_degree: Fraction | None        # degree of T^1 when g is proportional to h

    @property
    def rank(self) -> int:
        return len(self.basis)

    def coordinates(self, beta: Vector) -> tuple[int, ...]:
        """Coefficients of beta in the basis (beta must lie in J)."""
        return tuple(beta[k] for k in self.eliminated)

    def contains(self, beta: Vector) -> bool:
        p = self.polytope
        return all(sum(b * v[c] for b, v in zip(beta, p.normals)) == 0 for c in range(p.dim))


@dataclass(frozen=True)
class SpinData:
    eps: tuple[tuple[int, ...], ...]
    q_values: tuple[int, ...]
    pairing: tuple[tuple[int, ...], ...]
    orientable: bool
    comb_rel_spin: bool
    sigma: tuple[int, ...]

    def q(self, beta: Vector) -> int:
        d = len(beta)
        return sum(self.eps[i][j] * beta[i] * beta[j] for i in range(d) for j in range(i, d)) % 2

    def bilinear(self, beta: Vector, other: Vector) -> int:
        d = len(beta)
        return sum(self.eps[i][j] * beta[i] * other[j]
                   for i in range(d) for j in range(d) if i != j) % 2


@dataclass(frozen=True)
class SpinStructures:
    chosen: tuple[int, ...]
    orbit: tuple[tuple[int, ...], ...] = field(repr=False)

    @staticmethod
    def act(h: tuple[int, ...], s: tuple[int, ...]) -> tuple[int, ...]:
        return tuple((a + b) % 2 for a, b in zip(h, s))


# -- parsing -------------------------------------------------------------

def parse_polytope(data: dict, name: str = "") -> PolytopeSpec:
    if not isinstance(data, dict):
        raise InputError("polytope spec must be a JSON object")
    try:
        dim = int(data["dim"])
        facets = data["facets"]
    except KeyError as exc:
        raise InputError(f"polytope spec missing field {exc.args[0]!r}") from None
    if dim < 1:
        raise InputError("field 'dim' must be positive")
    normals, offsets = [], []
    for k, facet in enumerate(facets):
        try:
            normal = tuple(int(x) for x in facet["normal"])
            offset = as_fraction(facet["offset"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"facets[{k}]: {exc}") from None
        if len(normal) != dim:
            raise InputError(f"facets[{k}].normal has length {len(normal)}, expected {dim}")
        normals.append(normal)
        offsets.append(offset)
    return PolytopeSpec(dim, tuple(normals), tuple(offsets), name or str(data.get("name", "")))


def load_polytope(path: str | Path) -> PolytopeSpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return parse_polytope(data, name=path.stem)


def simplex(n: int, size: Fraction | int = 1) -> PolytopeSpec:
    """The standard simplex: normals -w_0..-w_{n-1}, then w_0+...+w_{n-1}."""
    normals = [tuple(-1 if j == i else 0 for j in range(n)) for i in range(n)]
    normals.append(tuple(1 for _ in range(n)))
    offsets = [Fraction(0)] * n + [Fraction(size)]
    return PolytopeSpec(n, tuple(normals), tuple(offsets), f"simplex{n}")


def cube(n: int) -> PolytopeSpec:
    """(Delta^1)^n with facets ordered (-w_0, w_0, -w_1, w_1, ...)."""
    normals, offsets = [], []
    for i in range(n):
        for sign in (-1, 1):
            normals.append(tuple(sign if j == i else 0 for j in range(n)))
            offsets.append(Fraction(0 if sign < 0 else 1))
    return PolytopeSpec(n, tuple(normals), tuple(offsets), f"cube{n}")


# -- validation ----------------------------------------------------------

def _solve(rows: list[Vector], rhs: list[Fraction]):
    m = sympy.Matrix(rows)
    if m.det() == 0:
        return None
    sol = m.LUsolve(sympy.Matrix([sympy.Rational(r.numerator, r.denominator) for r in rhs]))
    return tuple(Fraction(int(x.p), int(x.q)) for x in sol)


def validate_delzant(spec: PolytopeSpec) -> Polytope:
    n, d = spec.dim, spec.n_facets
    if d < n + 1:
        raise NotDelzant(f"{d} facets cannot bound a polytope of dimension {n}")
    for k, v in enumerate(spec.normals):
        if not any(v):
            raise NotDelzant(f"facet {k} has zero normal")
        if gcd(*v) != 1:
            raise NotDelzant(f"facet {k} normal {v} is not primitive")

    found: dict[tuple[Fraction, ...], None] = {}
    for subset in itertools.combinations(range(d), n):
        x = _solve([spec.normals[i] for i in subset], [spec.offsets[i] for i in subset])
        if x is None:
            continue
        values = [lam - sum(a * b for a, b in zip(x, v)) for v, lam in zip(spec.normals, spec.offsets)]
        if all(val >= 0 for val in values):
            found[x] = None
    if not found:
        raise NotDelzant("polytope is empty")

    vertices = sorted(found)
    vertex_facets = []
    for x in vertices:
        tight = tuple(i for i, (v, lam) in enumerate(zip(spec.normals, spec.offsets))
                      if sum(a * b for a, b in zip(x, v)) == lam)
        if len(tight) != n:
            raise NotDelzant(f"vertex {tuple(map(str, x))} lies on {len(tight)} facets, not {n}")
        basis = sympy.Matrix([spec.normals[i] for i in tight])
        if abs(basis.det()) != 1:
            raise NotDelzant(f"normals at vertex {tuple(map(str, x))} are not a Z-basis")
        # every edge leaving the vertex must end at another facet
        inverse = basis.inv()
        for k in range(n):
            direction = [-inverse[r, k] for r in range(n)]
            if not any(sum(direction[r] * spec.normals[i][r] for r in range(n)) > 0
                       for i in range(d) if i not in tight):
                raise NotDelzant("polytope is unbounded")
        vertex_facets.append(tight)
    used = {i for tight in vertex_facets for i in tight}
    missing = sorted(set(range(d)) - used)
    if missing:
        raise NotDelzant(f"inequalities {missing} do not define facets")
    return Polytope(spec, tuple(vertices), tuple(vertex_facets))


# -- kernel lattice ------------------------------------------------------

def kernel_lattice(poly: Polytope) -> KernelLattice:
    n, d = poly.dim, poly.n_facets
    coords = max(poly.vertex_facets)
    inverse = sympy.Matrix([poly.normals[c] for c in coords]).T.inv()
    basis, eliminated = [], []
    for k in range(d):
        if k in coords:
            continue
        a = inverse * sympy.Matrix(poly.normals[k])
        gamma = [0] * d
        gamma[k] = 1
        for c, coeff in zip(coords, a):
            gamma[c] -= int(coeff)
        basis.append(tuple(gamma))
        eliminated.append(k)

    grading = tuple(2 * sum(g) for g in basis)
    area = tuple(sum(b * lam for b, lam in zip(g, poly.offsets)) for g in basis)

    den = 2
    for g, h in zip(grading, area):
        den = lcm(den, (h / 2).denominator)
        if g:
            den = lcm(den, (2 * h / g).denominator)
    ratios = {Fraction(g) / h for g, h in zip(grading, area) if h}
    t_degree = ratios.pop() if len(ratios) == 1 and all(area) else None
    return KernelLattice(poly, tuple(coords), tuple(basis), tuple(eliminated),
                         grading, area, den, t_degree)


# -- spin ------------------------------------------------------------------

def spin_analysis(kl: KernelLattice) -> SpinData:
    poly = kl.polytope
    d = poly.n_facets
    eps = [[1] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            if i != j and all(a + b == 0 for a, b in zip(poly.normals[i], poly.normals[j])):
                eps[i][j] = 0
    eps_t = tuple(tuple(row) for row in eps)

    def q(beta):
        return sum(eps[i][j] * beta[i] * beta[j] for i in range(d) for j in range(i, d)) % 2

    def pair(x, y):
        return sum(eps[i][j] * x[i] * y[j] for i in range(d) for j in range(d) if i != j) % 2

    q_values = tuple(q(g) for g in kl.basis)
    pairing = tuple(tuple(pair(x, y) for y in kl.basis) for x in kl.basis)
    orientable = all(g % 4 == 0 for g in kl.grading)
    linear = all(v == 0 for row in pairing for v in row)
    spin = orientable and linear
    if not spin:
        sigma = tuple(0 for _ in kl.basis)
    elif poly.dim == 1:
        sigma = tuple(1 for _ in kl.basis)
    else:
        sigma = q_values
    return SpinData(eps_t, q_values, pairing, orientable, spin, sigma)


def spin_structures(sd: SpinData, kl: KernelLattice) -> SpinStructures:
    if not sd.comb_rel_spin:
        raise NotSpin("polytope is not combinatorially relatively spin")
    r = kl.rank
    orbit = tuple(itertools.product((0, 1), repeat=r))
    return SpinStructures(tuple(0 for _ in range(r)), orbit)


def functional_value(values: tuple[int, ...], kl: KernelLattice, beta: Vector) -> int:
    """Evaluate a Z/2-valued functional given on the basis at beta in J."""
    return sum(c * v for c, v in zip(kl.coordinates(beta), values)) % 2


def opposite_pairs(kl: KernelLattice) -> list[tuple[int, int]]:
    """Facet pairs i < j with f_i + f_j in J."""
    d = kl.polytope.n_facets
    out = []
    for i in range(d):
        for j in range(i + 1, d):
            if all(a + b == 0 for a, b in zip(kl.polytope.normals[i], kl.polytope.normals[j])):
                out.append((i, j))
    return out


def _pair_vector(d: int, i: int, j: int) -> Vector:
    return tuple(1 if k in (i, j) else 0 for k in range(d))


def is_free(sigma_prime: tuple[int, ...], kl: KernelLattice) -> bool:
    """Check sigma'(beta) = sum over opposite pairs of sigma'(f_i+f_j) beta_i beta_j."""
    d = kl.polytope.n_facets
    pairs = [(i, j, functional_value(sigma_prime, kl, _pair_vector(d, i, j)))
             for i, j in opposite_pairs(kl)]

    def rhs(beta):
        return sum(v * beta[i] * beta[j] for i, j, v in pairs) % 2

    samples = list(kl.basis)
    samples += [tuple(a + b for a, b in zip(x, y)) for x, y in itertools.combinations(kl.basis, 2)]
    return all(functional_value(sigma_prime, kl, beta) == rhs(beta) for beta in samples)


def free_class(sd: SpinData) -> tuple[int, ...]:
    """sigma' = sigma - q on the basis."""
    return tuple((s - q) % 2 for s, q in zip(sd.sigma, sd.q_values))


def commutation_flags(kl: KernelLattice, sigma_prime: tuple[int, ...]) -> tuple[tuple[int, ...], ...]:
    """eps'_ij: 1 when e_i, e_j anticommute, 0 when they commute."""
    d = kl.polytope.n_facets
    flags = [[1] * d for _ in range(d)]
    for i, j in opposite_pairs(kl):
        v = functional_value(sigma_prime, kl, _pair_vector(d, i, j))
        flags[i][j] = flags[j][i] = v
    return tuple(tuple(row) for row in flags)
