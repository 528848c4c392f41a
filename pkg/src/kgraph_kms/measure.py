"""The conformal measure mu_{y,theta} on cylinder sets, and Markov comparisons."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .functors import WeightFunctor
from .kgraph import KGraph, Path, degree_join
from .spectral import SpectralData

__all__ = [
    "CylinderMeasure",
    "MarkovMeasure",
    "additivity_residual",
    "markov_eval",
    "markov_from_x",
    "mu",
    "periodic_mass",
    "quasi_invariance_residual",
    "quasi_invariance_spread",
    "uniqueness_residual",
    "write_mu_table",
]


def mu(lam: Path, sd: SpectralData) -> float:
    """mu(Z(lam)) = exp(-theta y(lam)) rho^{-d(lam)} xi_{s(lam)}."""
    y = sd.functor(lam)
    return math.exp(-sd.theta * y - float(np.dot(sd.log_rho, lam.degree))) * sd.xi_at(lam.src)


class CylinderMeasure:
    """Lazy evaluator of mu_{y,theta} on cylinders Z(lam)."""

    def __init__(self, sd: SpectralData):
        if sd.graph is None or sd.functor is None:
            raise ValueError("spectral data must carry its graph and functor")
        self.sd = sd

    def __call__(self, lam: Path) -> float:
        return mu(lam, self.sd)

    def total_mass(self) -> float:
        return sum(mu(self.sd.graph.vertex(v), self.sd) for v in self.sd.graph.vertices)


def additivity_residual(lam: Path, n: int, sd: SpectralData) -> float:
    """Largest |mu(lam) - sum_eta mu(lam eta)| over refinements d(eta) = j e_i and j 1, j <= n."""
    g = sd.graph
    base = mu(lam, sd)
    worst = 0.0
    for j in range(1, n + 1):
        degrees = [tuple(j if c == i else 0 for c in range(g.k)) for i in range(g.k)]
        degrees.append((j,) * g.k)
        for d in degrees:
            total = sum(mu(ext, sd) for ext in g.extensions(lam, d, cap=max(g.cap, sum(d))))
            worst = max(worst, abs(base - total))
    return worst


def quasi_invariance_residual(lam: Path, nu: Path, sd: SpectralData, beta: float) -> float:
    """|e^{beta y(nu)} rho^{(beta/theta) d(nu)} mu(nu) - (same for lam)|."""
    if lam.src != nu.src:
        raise ValueError(f"s({lam}) = {lam.src} differs from s({nu}) = {nu.src}")

    def scaled(p):
        expo = beta * sd.functor(p) + (beta / sd.theta) * float(np.dot(sd.log_rho, p.degree))
        return math.exp(expo) * mu(p, sd)

    if lam == nu:
        return 0.0
    return abs(scaled(nu) - scaled(lam))


def quasi_invariance_spread(paths: Sequence[Path], sd: SpectralData, beta: float) -> float:
    """Largest quasi_invariance_residual over all same-source pairs drawn from ``paths``.

    For each source the pairwise maximum is the spread (max - min) of the
    scaled values, so the sweep is linear rather than quadratic in the paths.
    """
    g = sd.graph
    y = np.array([float(sd.functor(p)) for p in paths])
    logd = np.array([float(np.dot(sd.log_rho, p.degree)) for p in paths])
    src = np.array([g.vertex_index[p.src] for p in paths])
    masses = np.array([mu(p, sd) for p in paths])
    scaled = np.exp(beta * y + (beta / sd.theta) * logd) * masses
    worst = 0.0
    for v in np.unique(src):
        vals = scaled[src == v]
        worst = max(worst, float(vals.max() - vals.min()))
    return worst


def uniqueness_residual(sd: SpectralData) -> float:
    """Solve the conformality equations m = rho_i^{-1} B_i m, sum(m) = 1 directly and compare with xi.

    The stacked linear system is solved by least squares, independently of
    the power iteration that produced ``xi``.
    """
    n = sd.B.shape[1]
    rows = [sd.B[i] / sd.rho[i] - np.eye(n) for i in range(sd.k)]
    rows.append(np.ones((1, n)))
    rhs = np.zeros(sd.k * n + 1)
    rhs[-1] = 1.0
    m, *_ = np.linalg.lstsq(np.vstack(rows), rhs, rcond=None)
    return float(np.abs(m - sd.xi).max())


def periodic_mass(sd: SpectralData, m: Sequence[int], n: Sequence[int], depth: int) -> float:
    """Mass of the cylinders of degree (m v n) + depth*1 whose m- and n-shifts agree for depth steps."""
    g = sd.graph
    top = tuple(x + depth for x in degree_join(m, n))
    span = (depth,) * g.k
    total = 0.0
    for lam in g.paths_of_degree(top, cap=max(g.cap, sum(top))):
        a = g.subpath(lam, m, tuple(x + s for x, s in zip(m, span)))
        b = g.subpath(lam, n, tuple(x + s for x, s in zip(n, span)))
        if a == b:
            total += mu(lam, sd)
    return total


def write_mu_table(paths: Sequence[Path], sd: SpectralData, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path", "range", "source", "degree", "mu"])
        for p in paths:
            w.writerow([str(p), p.rng, p.src, " ".join(map(str, p.degree)), repr(mu(p, sd))])


# -- Markov measures on the one-vertex two-color fixture ------------------------------


@dataclass(frozen=True)
class MarkovMeasure:
    """Product measure on binary words with P(0) = x, P(1) = 1 - x."""

    x: float

    def __post_init__(self):
        if not 0 < self.x < 1:
            raise ValueError("x must lie in (0, 1)")

    @property
    def transition(self) -> np.ndarray:
        return np.array([[self.x, 1 - self.x], [1 - self.x, self.x]])

    def __call__(self, word: str) -> float:
        return markov_eval(word, self.x)


def markov_eval(word: str, x: float) -> float:
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    zeros = word.count("0")
    ones = word.count("1")
    if zeros + ones != len(word):
        raise ValueError(f"word {word!r} is not binary")
    return x**zeros * (1 - x) ** ones


def markov_from_x(x: float, y_e1: float, theta: float | None = None) -> tuple[WeightFunctor, float]:
    """Functor on the one-vertex fixture whose measure is the Markov measure mu_x.

    Requires theta >= ln((1-x)/x) / y(e1) so that y(e2) stays nonnegative.
    Without an explicit theta, 1 is used when admissible and otherwise
    1.2 times the bound.
    """
    if not 0 < x <= 0.5:
        raise ValueError("x must lie in (0, 1/2]")
    if y_e1 <= 0:
        raise ValueError("y(e1) must be positive")
    gap = math.log((1 - x) / x)
    bound = gap / y_e1
    if theta is None:
        theta = 1.0 if bound <= 1.0 else 1.2 * bound
    if theta <= 0:
        raise ValueError("theta must be positive")
    y_e2 = y_e1 - gap / theta
    if y_e2 < 0:
        raise ValueError(f"theta = {theta} is below the admissible bound {bound}: y(e2) = {y_e2} < 0")
    values = {"e1": y_e1, "e2": y_e2, "f1": y_e1, "f2": y_e2}
    return WeightFunctor(values), float(theta)


def binary_word(g: KGraph, edges: Sequence[str]) -> str:
    """Collapse e1/f1 to '0' and e2/f2 to '1'."""
    table = {"e1": "0", "f1": "0", "e2": "1", "f2": "1"}
    try:
        return "".join(table[e] for e in edges)
    except KeyError as exc:
        raise ValueError(f"edge {exc.args[0]!r} has no binary label") from None

