"""Deformed coordinate matrices B_i(y, theta) and their Perron-Frobenius data."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .functors import WeightFunctor
from .kgraph import DEFAULT_CAP, KGraph, irreducibility_witness

__all__ = [
    "ConvergenceError",
    "NotIrreducibleError",
    "SpectralData",
    "ThetaProfile",
    "WeightConditions",
    "build_B",
    "check_irreducible_family",
    "check_weight_conditions",
    "pf_data",
    "rho_identity_check",
    "spectral_data",
    "theta_profile",
]

PF_TOL = 1e-13
PF_MAX_ITER = 1_000_000


class NotIrreducibleError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpectralData:
    """Common eigendata of an irreducible commuting family B_1..B_k.

    ``xi`` is the strictly positive eigenvector with unit l1 norm and
    ``rho[i]`` the spectral radius of ``B[i]``.  ``graph`` and ``functor``
    are attached when the family came from :func:`spectral_data`.
    """

    theta: float
    B: np.ndarray
    rho: np.ndarray
    xi: np.ndarray
    F: tuple[tuple[int, ...], ...]
    residual: float
    oracle_gap: float
    iterations: int
    graph: KGraph | None = field(default=None, compare=False)
    functor: WeightFunctor | None = field(default=None, compare=False)

    @property
    def k(self) -> int:
        return len(self.rho)

    @property
    def log_rho(self) -> np.ndarray:
        return np.log(self.rho)

    def rho_power(self, m: Sequence[float]) -> float:
        """rho(B)^m = prod_i rho_i^{m_i} for an integer (or real) vector m."""
        return float(math.exp(float(np.dot(self.log_rho, m))))

    def xi_at(self, v: str) -> float:
        return float(self.xi[self.graph.vertex_index[v]])


def build_B(g: KGraph, y: WeightFunctor, theta: float) -> np.ndarray:
    """B_i(y,theta)[v, w] = sum over color-i edges w -> v of exp(-theta y(e))."""
    if theta < 0:
        raise ValueError(f"theta must be nonnegative, got {theta}")
    n = len(g.vertices)
    B = np.zeros((g.k, n, n))
    for e in g.edges.values():
        B[e.color, g.vertex_index[e.rng], g.vertex_index[e.src]] += math.exp(-theta * float(y.values[e.id]))
    return B


def check_irreducible_family(B, cap: int = DEFAULT_CAP) -> tuple[tuple[int, ...], ...]:
    """Return a witness F with B^F entrywise positive, or raise NotIrreducibleError."""
    F = irreducibility_witness(B, cap=cap)
    if F is None:
        raise NotIrreducibleError(f"no F with |n|_1 <= {cap} makes B^F positive")
    return F


def family_power(B: np.ndarray, n: Sequence[int]) -> np.ndarray:
    out = np.eye(B.shape[1])
    for Bi, p in zip(B, n):
        out = out @ np.linalg.matrix_power(Bi, p)
    return out


def pf_data(
    B,
    theta: float = 1.0,
    F: Sequence[Sequence[int]] | None = None,
    tol: float = PF_TOL,
    max_iter: int = PF_MAX_ITER,
) -> SpectralData:
    """Common Perron-Frobenius eigenvector by power iteration on B^F.

    Each step uses the family rescaled by its current radius estimates, so
    convergence does not degrade when the radii are far from 1.

    Each spectral radius is then read off as ||B_i xi||_1 (xi has unit l1
    norm), and compared with a dense eigensolver for ``oracle_gap``.
    """
    B = np.asarray(B, dtype=float)
    if F is None:
        F = check_irreducible_family(B)
    F = tuple(tuple(f) for f in F)
    if not np.all(sum(family_power(B, f) for f in F) > 0):
        raise NotIrreducibleError("B^F is not entrywise positive")
    n = B.shape[1]
    x = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        # rescale by the current radius estimates so every B_i / r_i has
        # spectral radius near 1 and the small eigenvalues of B^F die fast
        r = np.array([(Bi @ x).sum() for Bi in B])
        nxt = sum(family_power(B / r[:, None, None], f) @ x for f in F)
        nxt /= nxt.sum()
        delta = np.abs(nxt - x).sum()
        x = nxt
        if delta <= tol:
            break
    else:
        raise ConvergenceError(f"power iteration did not reach {tol} in {max_iter} steps")
    rho = np.array([(Bi @ x).sum() for Bi in B])
    residual = max(float(np.abs(Bi @ x - r * x).max()) for Bi, r in zip(B, rho))
    dense = np.array([np.abs(np.linalg.eigvals(Bi)).max() for Bi in B])
    return SpectralData(
        theta=float(theta),
        B=B,
        rho=rho,
        xi=x,
        F=F,
        residual=residual,
        oracle_gap=float(np.abs(dense - rho).max()),
        iterations=it,
    )


def spectral_data(g: KGraph, y: WeightFunctor, theta: float, **kwargs) -> SpectralData:
    """Build B_i(y, theta) for ``g`` and compute its eigendata."""
    B = build_B(g, y, theta)
    F = kwargs.pop("F", None) or g.connectivity_witness
    sd = pf_data(B, theta=theta, F=F, **kwargs)
    return SpectralData(**{**sd.__dict__, "graph": g, "functor": y})


# -- fixture identity --------------------------------------------------------------

_EYEGLASS_EDGES = {"a0", "a1", "b0", "b1", "c0", "c1", "d0", "d1"}


def rho_identity_check(g: KGraph, y: WeightFunctor, theta: float) -> tuple[float, float]:
    """|rho_1 rho_2 - 2 C_1 D_1| and |rho_1 rho_2 - 2 A_0 B_0| on the three-vertex fixture."""
    if set(g.edges) != _EYEGLASS_EDGES or len(g.vertices) != 3 or g.k != 2:
        raise ValueError("rho_identity_check needs the three-vertex eyeglasses graph")
    sd = spectral_data(g, y, theta)
    w = {e: math.exp(-theta * float(y.values[e])) for e in g.edges}
    prod = float(sd.rho[0] * sd.rho[1])
    return abs(prod - 2 * w["c1"] * w["d1"]), abs(prod - 2 * w["a0"] * w["b0"])


# -- theta dependence --------------------------------------------------------------


@dataclass
class ThetaProfile:
    theta: np.ndarray
    rho: np.ndarray  # (G, k)
    xi: np.ndarray  # (G, n)
    drho: np.ndarray
    d2rho: np.ndarray
    dxi: np.ndarray
    d2xi: np.ndarray
    psi: np.ndarray  # rho_i ** (1/theta)
    dpsi: np.ndarray  # central difference
    dpsi_closed: np.ndarray | None = None  # one-vertex closed form
    h: float = 0.0

    def rows(self):
        G, k = self.rho.shape
        n = self.xi.shape[1]
        header = (
            ["theta"]
            + [f"rho_{i + 1}" for i in range(k)]
            + [f"xi_{j + 1}" for j in range(n)]
            + [f"drho_{i + 1}" for i in range(k)]
            + [f"d2rho_{i + 1}" for i in range(k)]
            + [f"dxi_{j + 1}" for j in range(n)]
            + [f"psi_{i + 1}" for i in range(k)]
            + [f"dpsi_{i + 1}" for i in range(k)]
        )
        yield header
        for r in range(G):
            yield [self.theta[r], *self.rho[r], *self.xi[r], *self.drho[r], *self.d2rho[r], *self.dxi[r], *self.psi[r], *self.dpsi[r]]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in self.rows():
                writer.writerow([x if isinstance(x, str) else repr(float(x)) for x in row])


def theta_profile(g: KGraph, y: WeightFunctor, grid: Sequence[float], h: float = 1e-3) -> ThetaProfile:
    """rho_i(theta), xi(theta) and central finite-difference derivatives on a grid.

    For one-vertex graphs rho_i(theta) = sum_h e^{-theta y(h)} exactly, and
    the closed-form derivative of psi_i = rho_i^{1/theta},

        psi_i * (-ln(rho_i) / theta^2 + rho_i' / (theta rho_i)),
        rho_i' = sum_h -y(h) e^{-theta y(h)},

    is returned alongside the finite-difference estimate.
    """
    grid = np.asarray(grid, dtype=float)
    if h <= 0:
        raise ValueError("step h must be positive")
    if np.any(grid - h <= 0):
        raise ValueError("grid (minus the step) must stay inside (0, inf)")

    def at(t):
        sd = spectral_data(g, y, float(t))
        return sd.rho, sd.xi

    rho, xi, drho, d2rho, dxi, d2xi, dpsi = [], [], [], [], [], [], []
    for t in grid:
        r0, x0 = at(t)
        rp, xp = at(t + h)
        rm, xm = at(t - h)
        rho.append(r0)
        xi.append(x0)
        drho.append((rp - rm) / (2 * h))
        d2rho.append((rp - 2 * r0 + rm) / h**2)
        dxi.append((xp - xm) / (2 * h))
        d2xi.append((xp - 2 * x0 + xm) / h**2)
        dpsi.append((rp ** (1 / (t + h)) - rm ** (1 / (t - h))) / (2 * h))
    rho = np.array(rho)
    psi = rho ** (1 / grid[:, None])
    closed = None
    if len(g.vertices) == 1:
        closed = np.zeros_like(rho)
        for r, t in enumerate(grid):
            for i in range(g.k):
                r_i = sum(math.exp(-t * float(y.values[e.id])) for e in g.edges.values() if e.color == i)
                dr_i = sum(-float(y.values[e.id]) * math.exp(-t * float(y.values[e.id])) for e in g.edges.values() if e.color == i)
                closed[r, i] = r_i ** (1 / t) * (-math.log(r_i) / t**2 + dr_i / (t * r_i))
    return ThetaProfile(
        theta=grid,
        rho=rho,
        xi=np.array(xi),
        drho=np.array(drho),
        d2rho=np.array(d2rho),
        dxi=np.array(dxi),
        d2xi=np.array(d2xi),
        psi=psi,
        dpsi=np.array(dpsi),
        dpsi_closed=closed,
        h=h,
    )


# -- weight conditions ---------------------------------------------------------------


@dataclass(frozen=True)
class WeightConditions:
    w1: bool  # every rho_i > 1
    w2: bool  # some rho_i exceeds every entry of B_i
    w2_index: int | None
    two_per_row: tuple[bool, ...]  # each row of B_i has >= 2 nonzero entries
    exceeds_entries: tuple[bool, ...]  # rho_i > max entry of B_i
    one_vertex: bool

    @property
    def required(self) -> str:
        return "w-I" if self.one_vertex else "w-II"

    @property
    def holds(self) -> bool:
        """The condition needed for a weight: w-I on one vertex, w-II otherwise."""
        return self.w1 if self.one_vertex else self.w2


def check_weight_conditions(sd: SpectralData) -> WeightConditions:
    conclusion = tuple(bool(r > Bi.max()) for Bi, r in zip(sd.B, sd.rho))
    hypothesis = tuple(bool(np.all((Bi > 0).sum(axis=1) >= 2)) for Bi in sd.B)
    w2_index = next((i for i, ok in enumerate(conclusion) if ok), None)
    return WeightConditions(
        w1=bool(np.all(sd.rho > 1)),
        w2=w2_index is not None,
        w2_index=w2_index,
        two_per_row=hypothesis,
        exceeds_entries=conclusion,
        one_vertex=sd.B.shape[1] == 1,
    )
