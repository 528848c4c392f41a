"""Stationary k-Bratteli diagram of a k-graph, its weights and the induced ultrametric.

Level m of the diagram (m = 1, 2, ...) uses the edges of color
((m - 1) mod k) + 1, so a Bratteli path of length n is the unique
factorization of a k-graph path whose colors cycle 1, 2, ..., k, 1, 2, ...
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .functors import sample_nonnegative, solve_constraints
from .kgraph import KGraph, Path
from .spectral import SpectralData, WeightConditions, check_weight_conditions, spectral_data

__all__ = [
    "BratteliPath",
    "BratteliWeight",
    "Distance",
    "WeightConditionError",
    "bratteli_degree",
    "bratteli_paths",
    "diameter",
    "level_color",
    "sample_admissible",
    "sampled_diameter",
    "self_similarity_residual",
    "ultrametric",
    "weight",
]


class WeightConditionError(ValueError):
    """The weight conditions needed for a metric are not satisfied."""


def level_color(m: int, k: int) -> int:
    """0-based color of the level-m edge (m >= 1)."""
    return (m - 1) % k


def bratteli_degree(n: int, k: int) -> tuple[int, ...]:
    return tuple(n // k + (1 if i < n % k else 0) for i in range(k))


@dataclass(frozen=True)
class BratteliPath:
    root: str
    edges: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.edges)

    @classmethod
    def from_path(cls, g: KGraph, lam: Path) -> "BratteliPath":
        n = lam.length
        if lam.degree != bratteli_degree(n, g.k):
            raise ValueError(f"degree {lam.degree} is not that of a length-{n} Bratteli path")
        colors = [level_color(m, g.k) for m in range(1, n + 1)]
        return cls(lam.rng, g.refactor(lam, colors) if n else ())

    def to_path(self, g: KGraph) -> Path:
        if not self.edges:
            return g.vertex(self.root)
        return g.path(*self.edges)

    def source(self, g: KGraph) -> str:
        return g.edges[self.edges[-1]].src if self.edges else self.root

    def prefix(self, n: int) -> "BratteliPath":
        return BratteliPath(self.root, self.edges[:n])

    def check(self, g: KGraph) -> "BratteliPath":
        at = self.root
        for m, e in enumerate(self.edges, 1):
            edge = g.edges[e]
            if edge.color != level_color(m, g.k) or edge.rng != at:
                raise ValueError(f"edge {e} does not fit level {m} of a path at {self.root}")
            at = edge.src
        return self

    def __str__(self):
        return self.root + ":" + "".join(self.edges)


def extensions(g: KGraph, p: BratteliPath, m: int) -> Iterator[BratteliPath]:
    """All Bratteli paths of length len(p) + m that start with p."""
    start = len(p)

    def rec(edges, at, level):
        if level == start + m:
            yield BratteliPath(p.root, tuple(edges))
            return
        for e in g._by_color_rng.get((level_color(level + 1, g.k), at), ()):
            edges.append(e)
            yield from rec(edges, g.edges[e].src, level + 1)
            edges.pop()

    yield from rec(list(p.edges), p.source(g), start)


def bratteli_paths(g: KGraph, n: int, root: str | None = None) -> list[BratteliPath]:
    """F^n B_Lambda: every path of length n (from one root, or all roots)."""
    roots = g.vertices if root is None else (root,)
    return [q for v in roots for q in extensions(g, BratteliPath(v, ()), n)]


class Distance(NamedTuple):
    value: float
    upper_bound: bool  # True when x == z as truncations, so only w(x) bounds the true distance


class BratteliWeight:
    """w(lam) = e^{-y(lam)} (rho^{-d(lam)} xi_{s(lam)})^{1/theta}.

    The weight is always computable; :meth:`require` enforces the condition
    (w-I on one vertex, w-II otherwise) before metric use.
    """

    def __init__(self, sd: SpectralData):
        if sd.theta <= 0:
            raise ValueError("the weight needs theta > 0")
        self.sd = sd
        self.g = sd.graph
        self.theta = sd.theta
        self.conditions: WeightConditions = check_weight_conditions(sd)

    @property
    def admissible(self) -> bool:
        return self.conditions.holds

    def require(self) -> "BratteliWeight":
        if not self.admissible:
            c = self.conditions
            raise WeightConditionError(
                f"{c.required} fails for rho = {tuple(float(r) for r in self.sd.rho)} "
                f"(w-I: {c.w1}, w-II: {c.w2})"
            )
        return self

    def log_weight(self, p: BratteliPath) -> float:
        y = float(sum(float(self.sd.functor.values[e]) for e in p.edges))
        d = bratteli_degree(len(p), self.g.k)
        return -y + (math.log(self.sd.xi_at(p.source(self.g))) - float(np.dot(self.sd.log_rho, d))) / self.theta

    def __call__(self, p: BratteliPath) -> float:
        return math.exp(self.log_weight(p))


def weight(p: BratteliPath, sd: SpectralData) -> float:
    return BratteliWeight(sd)(p)


def self_similarity_residual(p: BratteliPath, m: int, w: BratteliWeight) -> float:
    """|w(p)^theta - sum over length-(len p + m) extensions of w^theta|."""
    if m == 0:
        return 0.0
    t = w.theta
    total = math.fsum(w(q) ** t for q in extensions(w.g, p, m))
    return abs(w(p) ** t - total)


def ultrametric(x: BratteliPath, z: BratteliPath, w: BratteliWeight) -> Distance:
    """d(x, z) = 1 for different roots, else w of the longest common prefix."""
    if len(x) != len(z):
        raise ValueError("truncations must have equal length")
    w.require()
    if x.root != z.root:
        return Distance(1.0, False)
    n = 0
    while n < len(x) and x.edges[n] == z.edges[n]:
        n += 1
    return Distance(w(x.prefix(n)), n == len(x))


def diameter(p: BratteliPath, w: BratteliWeight) -> float:
    """diam Z(p) = w(p)."""
    w.require()
    return w(p)


def sampled_diameter(p: BratteliPath, w: BratteliWeight, extra: int = 2, limit: int = 256) -> float:
    """Largest ultrametric distance between two extensions of p by ``extra`` levels."""
    exts = list(extensions(w.g, p, extra))[:limit]
    best = 0.0
    for i, a in enumerate(exts):
        for b in exts[i + 1:]:
            best = max(best, ultrametric(a, b, w).value)
    return best


def sample_admissible(g: KGraph, count: int, seed: int = 0, thetas: Sequence[float] = (0.6, 1.0, 1.7)):
    """Deterministic list of (functor, theta) whose weight satisfies w-I or w-II.

    Functor coefficients are drawn small (at most 1/2) so that the deformed
    spectral radii usually stay above the thresholds; failures are skipped.
    """
    space = solve_constraints(g)
    out = []
    attempt = 0
    while len(out) < count:
        if attempt > 100 * count:
            raise RuntimeError("could not find enough admissible (y, theta) pairs")
        y = sample_nonnegative(space, seed * 100_003 + attempt, scale=Fraction(1, 2))
        theta = thetas[attempt % len(thetas)]
        attempt += 1
        if any(v != 0 for v in y.values.values()) and check_weight_conditions(spectral_data(g, y, theta)).holds:
            out.append((y, theta))
    return out
