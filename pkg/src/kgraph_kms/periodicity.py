"""Periodicity of k-graphs: shift coincidences, Per(Lambda), its dual groups, and the
collision test behind the aperiodicity criterion.

Equality of infinite paths is only checked on finite truncations, so every
positive answer here is "verified at depth c".  Refutations are exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import sympy
from sympy.matrices.normalforms import smith_normal_decomp

from .kgraph import KGraph, Path, degree_join, degrees_upto
from .spectral import SpectralData

__all__ = [
    "CharacterGroup",
    "Collision",
    "PeriodicityCheck",
    "PeriodicityGroup",
    "PeriodicityOracle",
    "aperiodicity_criterion",
    "character_group",
    "check_periodic",
    "default_depth",
    "hermite_basis",
    "periodic_pair",
    "per_group",
]


def default_depth(g: KGraph) -> int:
    return len(g.vertices) + 1


@dataclass(frozen=True)
class PeriodicityCheck:
    verified: bool
    depth: int  # depth verified, or the depth at which the refutation appeared
    witness: tuple[Path, Path] | None = None  # two segments that differ

    def __bool__(self) -> bool:
        return self.verified


def _plus(a, b):
    return tuple(x + y for x, y in zip(a, b))


def check_periodic(g: KGraph, v: str, m: Sequence[int], n: Sequence[int], depth: int) -> PeriodicityCheck:
    """Does sigma^m = sigma^n on Z(v), up to segments of degree depth*1?

    Depths 1..depth are tried in turn since a refutation at a shallow depth
    persists at every deeper one, and most pairs fail early.
    """
    m, n = tuple(m), tuple(n)
    if m == n:
        return PeriodicityCheck(True, depth)
    top = degree_join(m, n)
    for c in range(1, depth + 1):
        span = (c,) * g.k
        deg = _plus(top, span)
        for lam in g.enumerate_paths(v, deg, cap=max(g.cap, sum(deg))):
            a = g.subpath(lam, m, _plus(m, span))
            b = g.subpath(lam, n, _plus(n, span))
            if a != b:
                return PeriodicityCheck(False, c, (a, b))
    return PeriodicityCheck(True, depth)


def periodic_pair(g: KGraph, lam: Path, nu: Path, depth: int) -> PeriodicityCheck:
    """Is lam x = nu x for every infinite x, checked on x of degree depth*1?

    lam mu and nu mu are compared on their common initial segment of degree
    (d(lam) ^ d(nu)) + depth*1.
    """
    if lam.src != nu.src or lam.rng != nu.rng:
        raise ValueError(f"({lam}, {nu}) do not share range and source")
    if lam == nu:
        return PeriodicityCheck(True, depth)
    zero = (0,) * g.k
    meet = tuple(min(a, b) for a, b in zip(lam.degree, nu.degree))
    for c in range(0, depth + 1):
        cut = _plus(meet, (c,) * g.k)
        for mu in g.enumerate_paths(lam.src, (c,) * g.k, cap=max(g.cap, c * g.k)):
            a = g.subpath(g.compose(lam, mu), zero, cut)
            b = g.subpath(g.compose(nu, mu), zero, cut)
            if a != b:
                return PeriodicityCheck(False, c, (a, b))
    return PeriodicityCheck(True, depth)


# -- lattices ------------------------------------------------------------------------


def hermite_basis(rows: Iterable[Sequence[int]], k: int) -> tuple[tuple[int, ...], ...]:
    """Row Hermite normal form of the lattice spanned by ``rows``.

    Pivots are positive, entries above a pivot lie in [0, pivot), and zero
    rows are dropped, so equal lattices give equal bases.
    """
    A = [list(map(int, r)) for r in rows if any(r)]
    out = []
    col = 0
    while A and col < k:
        nz = [r for r in A if r[col] != 0]
        if not nz:
            col += 1
            continue
        # Euclid on the column until a single nonzero entry remains
        while len(nz) > 1:
            nz.sort(key=lambda r: abs(r[col]))
            piv = nz[0]
            for r in nz[1:]:
                q = r[col] // piv[col]
                for j in range(k):
                    r[j] -= q * piv[j]
            nz = [r for r in nz if r[col] != 0]
        piv = nz[0]
        if piv[col] < 0:
            piv = [-x for x in piv]
        A = [r for r in A if r[col] == 0 and any(r)]
        out.append(piv)
        col += 1
    for i, row in enumerate(out):
        c = next(j for j, x in enumerate(row) if x)
        for above in out[:i]:
            q = above[c] // row[c]
            for j in range(k):
                above[j] -= q * row[j]
    return tuple(tuple(r) for r in out)


@dataclass(frozen=True)
class CharacterGroup:
    """N = {z in T^k : z^p = 1 for all p in the lattice}, with z = exp(2 pi i t).

    In Smith coordinates t = V s, the constraints read d_j s_j in Z for the
    ``rank`` invariant factors d_j, while the remaining s_j are free.
    """

    lattice: tuple[tuple[int, ...], ...]
    invariant_factors: tuple[int, ...]
    V: tuple[tuple[int, ...], ...]
    k: int

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)

    @property
    def free_dimension(self) -> int:
        return self.k - self.rank

    def contains(self, t: Sequence[float], tol: float = 1e-9) -> bool:
        for p in self.lattice:
            x = float(np.dot(p, t))
            if abs(x - round(x)) > tol:
                return False
        return True

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        s = rng.random(self.k)
        for j, d in enumerate(self.invariant_factors):
            s[j] = rng.integers(d) / d
        return (np.array(self.V, dtype=float) @ s) % 1.0

    def annihilator(self) -> tuple[tuple[int, ...], ...]:
        """B = {n in Z^k : z^n = 1 for all z in N}, from the Smith coordinates.

        n . V s is an integer for all admissible s exactly when
        (V^T n)_j is a multiple of d_j for j < rank and 0 beyond.
        """
        Vinv_T = sympy.Matrix(self.V).T.inv()
        gens = [[int(x) * d for x in Vinv_T.col(j)] for j, d in enumerate(self.invariant_factors)]
        return hermite_basis(gens, self.k)


def character_group(basis: Sequence[Sequence[int]], k: int) -> CharacterGroup:
    if not basis:
        eye = tuple(tuple(int(i == j) for j in range(k)) for i in range(k))
        return CharacterGroup((), (), eye, k)
    P = sympy.Matrix([list(r) for r in basis])
    D, U, V = smith_normal_decomp(P, domain=sympy.ZZ)
    factors = []
    for j in range(min(D.shape)):
        if D[j, j] != 0:
            factors.append(abs(int(D[j, j])))
    Vt = tuple(tuple(int(V[i, j]) for j in range(k)) for i in range(k))
    return CharacterGroup(tuple(tuple(r) for r in basis), tuple(factors), Vt, k)


@dataclass(frozen=True)
class PeriodicityGroup:
    basis: tuple[tuple[int, ...], ...]
    depth: int
    vertex: str
    max_degree: tuple[int, ...]
    witnesses: dict = field(default_factory=dict, compare=False)  # difference -> (m, n)

    @property
    def is_trivial(self) -> bool:
        return not self.basis

    def contains(self, p: Sequence[int]) -> bool:
        rows = list(self.basis) + [tuple(p)]
        return hermite_basis(rows, len(p)) == self.basis

    def characters(self) -> CharacterGroup:
        return character_group(self.basis, len(self.max_degree))

    def report(self) -> str:
        lines = [
            f"basis: {list(self.basis) if self.basis else 'trivial'}",
            f"vertex: {self.vertex}",
            f"max_degree: {self.max_degree}",
            f"verified_depth: {self.depth}",
        ]
        for diff, (m, n) in sorted(self.witnesses.items()):
            lines.append(f"witness {diff}: m={m} n={n}")
        return "\n".join(lines)


def per_group(
    g: KGraph,
    max_degree: Sequence[int],
    depth: int | None = None,
    vertex: str | None = None,
) -> PeriodicityGroup:
    """Lattice generated by the m - n with sigma^m = sigma^n on Z(v), m, n <= max_degree."""
    depth = default_depth(g) if depth is None else depth
    if depth < 1:
        raise ValueError("depth must be positive")
    v = g.vertices[0] if vertex is None else vertex
    degs = degrees_upto(max_degree)
    witnesses: dict[tuple[int, ...], tuple] = {}
    for i, m in enumerate(degs):
        for n in degs[i + 1:]:
            diff = tuple(a - b for a, b in zip(m, n))
            if diff in witnesses:
                continue
            if check_periodic(g, v, m, n, depth):
                witnesses[diff] = (m, n)
                witnesses.setdefault(tuple(-x for x in diff), (n, m))
    basis = hermite_basis(list(witnesses), g.k)
    return PeriodicityGroup(basis, depth, v, tuple(max_degree), witnesses)


# -- P_Lambda membership with caching ---------------------------------------------------


class PeriodicityOracle:
    """Depth-certified membership test for P_Lambda.

    If (lam, nu) is in P_Lambda then nu = (lam x)(0, d(nu)) for every x, so a
    single extension of lam names the only possible partner of each degree.
    Only that candidate is checked in full.
    """

    def __init__(self, g: KGraph, depth: int | None = None, group: PeriodicityGroup | None = None):
        self.g = g
        self.depth = default_depth(g) if depth is None else depth
        self.group = group
        self._partner: dict[tuple[Path, tuple[int, ...]], Path] = {}
        self._verdict: dict[tuple[Path, Path], bool] = {}

    def partner(self, lam: Path, n: Sequence[int]) -> Path:
        n = tuple(n)
        key = (lam, n)
        if key not in self._partner:
            g = self.g
            need = tuple(max(0, a - b) for a, b in zip(n, lam.degree))
            mu = g.enumerate_paths(lam.src, need, cap=max(g.cap, sum(need)))[0]
            self._partner[key] = g.subpath(g.compose(lam, mu), (0,) * g.k, n)
        return self._partner[key]

    def __call__(self, lam: Path, nu: Path) -> bool:
        if lam.src != nu.src or lam.rng != nu.rng:
            return False
        if lam == nu:
            return True
        key = (lam, nu)
        if key in self._verdict:
            return self._verdict[key]
        ok = True
        if self.group is not None:
            ok = self.group.contains(tuple(a - b for a, b in zip(lam.degree, nu.degree)))
        ok = ok and self.partner(lam, nu.degree) == nu
        ok = ok and bool(periodic_pair(self.g, lam, nu, self.depth))
        self._verdict[key] = ok
        self._verdict[(nu, lam)] = ok
        return ok


# -- collisions of modified weights -------------------------------------------------------


@dataclass(frozen=True)
class Collision:
    lam: Path
    nu: Path
    value_lam: float
    value_nu: float

    @property
    def gap(self) -> float:
        return abs(self.value_lam - self.value_nu)


@dataclass(frozen=True)
class CriterionResult:
    witness: Collision | None
    collisions: tuple[Collision, ...]
    searched: int
    max_degree: tuple[int, ...]

    @property
    def cleared(self) -> bool:
        """True when no collision between different degrees was found in the searched range."""
        return self.witness is None


def modified_weight(p: Path, sd: SpectralData, beta: float | None = None) -> float:
    """y(p) + (1/beta) ln rho^{d(p)}."""
    beta = sd.theta if beta is None else beta
    return sd.functor(p) + float(np.dot(sd.log_rho, p.degree)) / beta


def aperiodicity_criterion(
    sd: SpectralData,
    max_degree: Sequence[int],
    tol: float = 1e-9,
    beta: float | None = None,
    limit: int = 1000,
) -> CriterionResult:
    """Search for paths of different degree with equal y + (1/beta) ln rho^d.

    ``sd`` should be the spectral data at theta = beta.  The first collision
    in enumeration order is the witness.  A collision does not prove
    periodicity; an empty result shows the criterion's hypothesis holds on
    the searched range.
    """
    beta = sd.theta if beta is None else beta
    paths = sd.graph.paths_upto(max_degree)
    vals = np.array([modified_weight(p, sd, beta) for p in paths])
    order = np.argsort(vals, kind="stable")
    hits = []
    for a_pos in range(len(order)):
        i = order[a_pos]
        for b_pos in range(a_pos + 1, len(order)):
            j = order[b_pos]
            scale = max(1.0, abs(vals[i]), abs(vals[j]))
            if vals[j] - vals[i] > tol * scale:
                break
            if paths[i].degree != paths[j].degree:
                lo, hi = min(i, j), max(i, j)
                hits.append((hi, lo))
    hits.sort()
    collisions = tuple(Collision(paths[lo], paths[hi], float(vals[lo]), float(vals[hi])) for hi, lo in hits[:limit])
    return CriterionResult(collisions[0] if collisions else None, collisions, len(paths), tuple(max_degree))

