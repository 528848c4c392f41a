"""Generalized gauge dynamics on C*(Lambda) and KMS states, on spanning monomials.

A monomial (lam, nu) stands for s_lam s_nu^*.  Products are expanded with
minimal common extensions, so everything here is finite combinatorics plus
the spectral data of B(y, theta).
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .kgraph import KGraph, Path, degrees_upto
from .measure import mu
from .periodicity import PeriodicityOracle, default_depth, per_group
from .spectral import SpectralData

__all__ = [
    "FormalSum",
    "KMSSweep",
    "Monomial",
    "OmegaState",
    "PsiState",
    "act",
    "act_imaginary",
    "cocycle",
    "kms_residual",
    "kms_sweep",
    "multiply",
    "sample_characters",
]

TWO_PI = 2 * math.pi


class Monomial(NamedTuple):
    lam: Path
    nu: Path

    @classmethod
    def of(cls, lam: Path, nu: Path) -> "Monomial":
        if lam.src != nu.src:
            raise ValueError(f"s({lam}) = {lam.src} but s({nu}) = {nu.src}")
        return cls(lam, nu)

    def adjoint(self) -> "Monomial":
        return Monomial(self.nu, self.lam)

    def __str__(self):
        return f"s[{self.lam}] s[{self.nu}]*"


class FormalSum:
    """Finite linear combination of monomials; zero coefficients are dropped."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Monomial, complex] | Iterable[tuple[Monomial, complex]] = ()):
        self.terms: dict[Monomial, complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for m, c in items:
            self._add(m, c)

    def _add(self, m, c):
        c = self.terms.get(m, 0) + c
        if c == 0:
            self.terms.pop(m, None)
        else:
            self.terms[m] = c

    @classmethod
    def single(cls, m: Monomial, c: complex = 1) -> "FormalSum":
        return cls([(m, c)])

    def __add__(self, other: "FormalSum") -> "FormalSum":
        out = FormalSum(self.terms)
        for m, c in other.terms.items():
            out._add(m, c)
        return out

    def scale(self, c: complex) -> "FormalSum":
        return FormalSum({m: c * v for m, v in self.terms.items()})

    def __iter__(self) -> Iterator[tuple[Monomial, complex]]:
        return iter(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        return isinstance(other, FormalSum) and self.terms == other.terms

    def __repr__(self):
        return "FormalSum(" + " + ".join(f"{c}*{m}" for m, c in self.terms.items()) + ")"


# -- dynamics -------------------------------------------------------------------------


def cocycle(lam: Path, nu: Path, sd: SpectralData) -> float:
    """c(lam, nu) = y(lam) - y(nu) + sum_i (d(lam) - d(nu))_i ln(rho_i) / theta."""
    if lam.src != nu.src:
        raise ValueError(f"s({lam}) = {lam.src} but s({nu}) = {nu.src}")
    if lam == nu:
        return 0.0
    diff = np.subtract(lam.degree, nu.degree)
    return sd.functor(lam) - sd.functor(nu) + float(np.dot(diff, sd.log_rho)) / sd.theta


def act(t: float, m: Monomial, sd: SpectralData) -> tuple[complex, Monomial]:
    """alpha_t(s_lam s_nu^*) = e^{i t c(lam, nu)} s_lam s_nu^*."""
    angle = math.fmod(t * cocycle(m.lam, m.nu, sd), TWO_PI)
    return cmath.exp(1j * angle), m


def act_imaginary(beta: float, m: Monomial, sd: SpectralData) -> float:
    """Analytic continuation to t = i beta: the real factor e^{-beta c(lam, nu)}."""
    return math.exp(-beta * cocycle(m.lam, m.nu, sd))


def multiply(g: KGraph, a: Monomial, b: Monomial) -> FormalSum:
    """(s_lam s_nu^*)(s_rho s_eta^*) = sum over (xi, zeta) in Lambda^min(nu, rho) of s_{lam xi} s_{eta zeta}^*."""
    lam, nu = a
    rho, eta = b
    if nu.rng != rho.rng:
        return FormalSum()
    return FormalSum((Monomial(g.compose(lam, xi), g.compose(eta, zeta)), 1) for xi, zeta in g.lambda_min(nu, rho))


def multiply_sums(g: KGraph, x: FormalSum, w: FormalSum) -> FormalSum:
    out = FormalSum()
    for m1, c1 in x:
        for m2, c2 in w:
            out = out + multiply(g, m1, m2).scale(c1 * c2)
    return out


# -- states -----------------------------------------------------------------------------


class _State:
    sd: SpectralData

    def value(self, m: Monomial) -> complex:  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, x: Monomial | FormalSum) -> complex:
        if isinstance(x, FormalSum):
            return sum((c * self.value(m) for m, c in x), 0j)
        return self.value(x)


class PsiState(_State):
    """psi(s_lam s_nu^*) = [lam == nu] mu(Z(lam)): integration of the diagonal part against mu."""

    depth = None

    def __init__(self, sd: SpectralData):
        self.sd = sd

    def value(self, m: Monomial) -> complex:
        return complex(mu(m.lam, self.sd)) if m.lam == m.nu else 0j

    def table(self, paths: Sequence[Path]) -> np.ndarray:
        out = np.zeros((len(paths) + 1, len(paths) + 1), dtype=complex)
        idx = np.arange(len(paths))
        out[idx, idx] = [mu(p, self.sd) for p in paths]
        return out


class OmegaState(_State):
    """Extremal state omega_z(s_lam s_nu^*) = z^{d(lam) - d(nu)} mu(Z(lam)) on P_Lambda, else 0.

    ``angles`` t give z_j = exp(2 pi i t_j).  Membership in P_Lambda is
    certified only to ``depth``, which is kept on the state.
    """

    def __init__(self, sd: SpectralData, angles: Sequence[float], oracle: PeriodicityOracle | None = None):
        self.sd = sd
        self.angles = tuple(float(a) % 1.0 for a in angles)
        if len(self.angles) != sd.k:
            raise ValueError(f"need {sd.k} angles")
        self.oracle = oracle or PeriodicityOracle(sd.graph)

    @property
    def depth(self) -> int:
        return self.oracle.depth

    def phase(self, diff: Sequence[int]) -> complex:
        angle = math.fmod(float(np.dot(self.angles, diff)), 1.0) * TWO_PI
        return cmath.exp(1j * angle)

    def value(self, m: Monomial) -> complex:
        if not self.oracle(m.lam, m.nu):
            return 0j
        diff = np.subtract(m.lam.degree, m.nu.degree)
        return self.phase(diff) * mu(m.lam, self.sd)

    def table(self, paths: Sequence[Path], support: Sequence[tuple[int, int]]) -> np.ndarray:
        out = np.zeros((len(paths) + 1, len(paths) + 1), dtype=complex)
        for i, j in support:
            diff = np.subtract(paths[i].degree, paths[j].degree)
            out[i, j] = self.phase(diff) * mu(paths[i], self.sd)
        return out


def sample_characters(k: int, count: int, seed: int = 0) -> list[tuple[float, ...]]:
    rng = np.random.default_rng(seed)
    return [tuple(float(t) for t in row) for row in rng.random((count, k))]


def kms_residual(state: _State, a: Monomial, b: Monomial, beta: float, sd: SpectralData) -> float:
    """|phi(ab) - phi(b alpha_{i beta}(a))| for the dynamics of ``sd``."""
    g = sd.graph
    lhs = state(multiply(g, a, b))
    rhs = act_imaginary(beta, a, sd) * state(multiply(g, b, a))
    return abs(lhs - rhs)


# -- vectorized sweep over all monomial pairs ----------------------------------------------


@dataclass
class KMSSweepResult:
    label: str
    max_residual: float
    witness: tuple[Monomial, Monomial] | None
    pairs: int
    seconds: float
    depth: int | None = None


class KMSSweep:
    """Precomputed product structure for all monomials with path degrees <= max_degree.

    Both phi(ab) and phi(ba) only involve paths of degree <= 2 max_degree,
    so a state is tabulated once as a dense matrix over those paths and
    every product becomes an indexed sum over minimal common extensions.
    """

    def __init__(self, g: KGraph, max_degree: Sequence[int]):
        self.g = g
        self.max_degree = tuple(max_degree)
        self.outer_degree = tuple(2 * x for x in self.max_degree)
        cap = max(g.cap, sum(self.outer_degree))
        self.P = [p for n in degrees_upto(self.max_degree) for p in g.paths_of_degree(n, cap=cap)]
        self.Q = [p for n in degrees_upto(self.outer_degree) for p in g.paths_of_degree(n, cap=cap)]
        qi = {p: i for i, p in enumerate(self.Q)}
        pi = {p: i for i, p in enumerate(self.P)}
        self.q_index = qi
        self.p_index = pi
        nP, pad = len(self.P), len(self.Q)
        self.pad = pad

        comp = np.full((nP, nP), pad, dtype=np.int64)
        for i, lam in enumerate(self.P):
            for j, xi in enumerate(self.P):
                if lam.src == xi.rng:
                    comp[i, j] = qi[g.compose(lam, xi)]
        self.comp = comp

        # Lambda^min(nu, rho) for every pair with a common range, as index pairs into P
        self.lmin: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for i, nu in enumerate(self.P):
            for j, rho in enumerate(self.P):
                if nu.rng == rho.rng:
                    ext = g.lambda_min(nu, rho)
                    if ext:
                        self.lmin[(i, j)] = [(pi[xi], pi[zeta]) for xi, zeta in ext]

        src = np.array([g.vertex_index[p.src] for p in self.P])
        self.valid = src[:, None] == src[None, :]  # (lam, nu) is a monomial
        self.mask = self.valid[:, :, None, None] & self.valid[None, None, :, :]

    @property
    def monomials(self) -> int:
        return int(self.valid.sum())

    def products(self, table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """R1[lam,nu,rho,eta] = phi(s_lam s_nu^* s_rho s_eta^*) and R2 = phi(s_rho s_eta^* s_lam s_nu^*)."""
        n = len(self.P)
        R1 = np.zeros((n, n, n, n), dtype=complex)
        R2 = np.zeros((n, n, n, n), dtype=complex)
        comp = self.comp
        for (i, j), ext in self.lmin.items():
            acc = np.zeros((n, n), dtype=complex)
            for xi, zeta in ext:
                acc += table[np.ix_(comp[:, xi], comp[:, zeta])]
            # first factor (., P[i]) times second factor (P[j], .)
            R1[:, i, j, :] += acc
            # the same expansion read as phi(s_rho s_eta^* s_lam s_nu^*) with eta = P[i], lam = P[j]:
            # acc[rho, nu] indexes (rho xi, nu zeta)
            R2[j, :, :, i] += acc.T
        return R1, R2

    def factors(self, sd: SpectralData, beta: float) -> np.ndarray:
        n = len(self.P)
        y = np.array([sd.functor(p) for p in self.P])
        logd = np.array([float(np.dot(p.degree, sd.log_rho)) for p in self.P])
        c = (y[:, None] - y[None, :]) + (logd[:, None] - logd[None, :]) / sd.theta
        out = np.exp(-beta * c)
        out[~self.valid] = 0.0
        return out.reshape(n, n)

    def residuals(self, table: np.ndarray, sd: SpectralData, beta: float) -> np.ndarray:
        R1, R2 = self.products(table)
        F = self.factors(sd, beta)
        res = np.abs(R1 - F[:, :, None, None] * R2)
        res[~self.mask] = 0.0
        return res

    def p_lambda_support(self, oracle: PeriodicityOracle, group=None) -> list[tuple[int, int]]:
        """Index pairs (i, j) in Q x Q with (Q[i], Q[j]) in P_Lambda."""
        by_degree: dict[tuple[int, ...], list[int]] = {}
        for i, p in enumerate(self.Q):
            by_degree.setdefault(p.degree, []).append(i)
        support = []
        for i, lam in enumerate(self.Q):
            for n in by_degree:
                if group is not None and not group.contains(tuple(a - b for a, b in zip(lam.degree, n))):
                    continue
                if n == lam.degree:
                    support.append((i, i))
                    continue
                nu = oracle.partner(lam, n)
                if nu.src == lam.src and oracle(lam, nu):
                    support.append((i, self.q_index[nu]))
        return support

    def run(self, label: str, table: np.ndarray, sd: SpectralData, beta: float, depth=None) -> KMSSweepResult:
        t0 = time.perf_counter()
        res = self.residuals(table, sd, beta)
        flat = int(np.argmax(res))
        worst = float(res.flat[flat])
        i, j, k, l = np.unravel_index(flat, res.shape)
        witness = (Monomial(self.P[i], self.P[j]), Monomial(self.P[k], self.P[l])) if worst > 0 else None
        return KMSSweepResult(label, worst, witness, int(self.mask.sum()), time.perf_counter() - t0, depth)


def kms_sweep(
    sd: SpectralData,
    beta: float | None = None,
    max_degree: Sequence[int] = (2, 2),
    characters: Sequence[Sequence[float]] = (),
    depth: int | None = None,
) -> list[KMSSweepResult]:
    """KMS residuals of psi and of omega_z for each character, over every pair of monomials."""
    g = sd.graph
    beta = sd.theta if beta is None else beta
    harness = KMSSweep(g, max_degree)
    results = [harness.run("psi", PsiState(sd).table(harness.Q), sd, beta)]
    if characters:
        depth = default_depth(g) if depth is None else depth
        group = per_group(g, max_degree, depth)
        oracle = PeriodicityOracle(g, depth, group)
        support = harness.p_lambda_support(oracle, group)
        for t in characters:
            state = OmegaState(sd, t, oracle)
            label = "omega[" + ",".join(repr(float(a)) for a in state.angles) + "]"
            results.append(harness.run(label, state.table(harness.Q, support), sd, beta, depth))
    return results
