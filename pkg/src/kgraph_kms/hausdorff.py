"""Cover sums S_M(s) over cylinder covers and the Hausdorff dimension of (X_B, d_w)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bratteli import BratteliPath, BratteliWeight, bratteli_degree, level_color
from .measure import mu

__all__ = [
    "ClassificationError",
    "CoverSum",
    "PathCountError",
    "cover_sum",
    "cover_sum_enumerated",
    "dimension_estimate",
    "hausdorff_measure",
    "write_cover_grid",
]

MAX_PATHS = 5_000_000


class ClassificationError(RuntimeError):
    """Slopes of log S_M(s) did not give a consistent below/above split."""


class PathCountError(ValueError):
    pass


@dataclass(frozen=True)
class CoverSum:
    M: int
    s: float
    value: float


def _level_matrix(w: BratteliWeight, color: int, s: float) -> np.ndarray:
    # sum over edges of the given color of e^{-s y(e)}, rows = range, cols = source
    g = w.g
    n = len(g.vertices)
    out = np.zeros((n, n))
    for e in g.edges.values():
        if e.color == color:
            out[g.vertex_index[e.rng], g.vertex_index[e.src]] += math.exp(-s * float(w.sd.functor.values[e.id]))
    return out


def cover_sum(M: int, s: float, w: BratteliWeight) -> float:
    """S_M(s) = sum over length-M Bratteli paths mu of w(mu)^s.

    The sum factors through the level matrices: grouping paths by their
    source vertex gives 1^T B_{c_1}(y, s) ... B_{c_M}(y, s) xi^{s/theta},
    scaled by rho^{-s d/theta}.
    """
    if M < 0:
        raise ValueError("M must be nonnegative")
    if s <= 0:
        raise ValueError("s must be positive")
    g = w.g
    row = np.ones(len(g.vertices))
    for m in range(1, M + 1):
        row = row @ _level_matrix(w, level_color(m, g.k), s)
    d = bratteli_degree(M, g.k)
    tail = w.sd.xi ** (s / w.theta)
    return float(row @ tail) * math.exp(-s * float(np.dot(w.sd.log_rho, d)) / w.theta)


def cover_sum_enumerated(M: int, s: float, w: BratteliWeight, max_paths: int = MAX_PATHS) -> float:
    """The same sum, by walking all paths level by level (arrays of log-weights per path)."""
    g = w.g
    total_paths = sum(g.path_count(v, bratteli_degree(M, g.k)) for v in g.vertices)
    if total_paths > max_paths:
        raise PathCountError(f"{total_paths} paths of length {M} exceed the guard {max_paths}")
    ends = np.array([g.vertex_index[v] for v in g.vertices])
    logy = np.zeros(len(ends))
    for m in range(1, M + 1):
        color = level_color(m, g.k)
        new_ends, new_logy = [], []
        for e in g.edges.values():
            if e.color != color:
                continue
            sel = ends == g.vertex_index[e.rng]
            new_ends.append(np.full(sel.sum(), g.vertex_index[e.src]))
            new_logy.append(logy[sel] + float(w.sd.functor.values[e.id]))
        ends = np.concatenate(new_ends)
        logy = np.concatenate(new_logy)
    d = bratteli_degree(M, g.k)
    logw = -logy + (np.log(w.sd.xi[ends]) - float(np.dot(w.sd.log_rho, d))) / w.theta
    return math.fsum(np.exp(s * logw))


def _slope(w: BratteliWeight, s: float, M_max: int) -> float:
    Ms = np.arange(max(1, M_max // 2), M_max + 1)
    logs = np.array([math.log(cover_sum(int(M), s, w)) for M in Ms])
    return float(np.polyfit(Ms, logs, 1)[0])


def dimension_estimate(
    w: BratteliWeight,
    M_max: int = 10,
    tol: float = 1e-6,
    noise: float = 1e-11,
    s_max: float = 1024.0,
) -> float:
    """Bisect on s using the sign of the log-slope of M -> S_M(s) over M_max/2..M_max.

    Positive slope means s is below the dimension, negative above.  A flat
    slope returns s directly.  The interval ends must classify as below and
    above respectively, otherwise ClassificationError is raised.
    """
    w.require()
    if M_max < 2:
        raise ValueError("M_max must be at least 2")

    def classify(s):
        slope = _slope(w, s, M_max)
        if slope > noise:
            return -1
        if slope < -noise:
            return 1
        return 0

    lo = min(tol, 1e-3)
    c_lo = classify(lo)
    if c_lo == 0:
        return lo
    if c_lo > 0:
        raise ClassificationError(f"s = {lo} already classifies above the dimension")
    hi = 1.0
    while classify(hi) < 0:
        hi *= 2
        if hi > s_max:
            raise ClassificationError(f"no s <= {s_max} classifies above the dimension")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        c = classify(mid)
        if c == 0:
            return mid
        if c < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def hausdorff_measure(p: BratteliPath, w: BratteliWeight) -> tuple[float, float]:
    """H^theta(Z(p)) = w(p)^theta and its distance from mu(Z(p))."""
    w.require()
    h = w(p) ** w.theta
    return h, abs(h - mu(p.to_path(w.g), w.sd))


def write_cover_grid(w: BratteliWeight, Ms: Sequence[int], ss: Sequence[float], path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["M", "s", "S_M"])
        for M in Ms:
            for s in ss:
                out.writerow([M, repr(float(s)), repr(cover_sum(M, s, w))])
