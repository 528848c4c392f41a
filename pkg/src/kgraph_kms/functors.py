"""R+-functors (weight functors) on a k-graph.

A functor is determined by its values on edges, subject to one linear
constraint per commuting square: ``y(e) + y(f) = y(f') + y(e')``.  The
solution space is computed exactly over the rationals.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import sympy

from .kgraph import KGraph, Path

__all__ = [
    "FunctorSpace",
    "SamplingError",
    "WeightFunctor",
    "constraint_matrix",
    "evaluate",
    "load_functor",
    "sample_nonnegative",
    "solve_constraints",
    "write_functor",
    "zero_functor",
]


class SamplingError(RuntimeError):
    """No nonnegative functor was found within the attempt budget."""


@dataclass(frozen=True)
class WeightFunctor:
    """Edge values of an R+-functor.

    Values may be :class:`fractions.Fraction` (exact) or floats.
    """

    values: Mapping[str, Fraction | float]

    def __call__(self, lam: Path) -> float:
        return evaluate(self, lam)

    def is_exact(self) -> bool:
        return all(isinstance(v, (int, Fraction)) for v in self.values.values())

    def violations(self, g: KGraph, tol: float = 1e-12) -> list[tuple[str, str, str, str]]:
        """Squares whose constraint fails (exactly for rational values, else to ``tol``)."""
        bad = []
        exact = self.is_exact()
        for (e, f), (f2, e2) in g._squares.items():
            lhs = self.values[e] + self.values[f]
            rhs = self.values[f2] + self.values[e2]
            if (lhs != rhs) if exact else abs(float(lhs) - float(rhs)) > tol:
                bad.append((e, f, f2, e2))
        return bad

    def check(self, g: KGraph, tol: float = 1e-12) -> "WeightFunctor":
        missing = set(g.edges) - set(self.values)
        if missing:
            raise ValueError(f"functor has no value for edges {sorted(missing)}")
        if any(v < 0 for v in self.values.values()):
            raise ValueError("functor values must be nonnegative")
        bad = self.violations(g, tol)
        if bad:
            raise ValueError(f"square constraints violated: {bad[:3]}")
        return self


def zero_functor(g: KGraph) -> WeightFunctor:
    """y = 0, which recovers the preferred dynamics (B_i(0, theta) = A_i)."""
    return WeightFunctor({e: Fraction(0) for e in g.edges})


def evaluate(y: WeightFunctor, lam: Path) -> float:
    try:
        return float(sum(y.values[e] for e in lam.edges))
    except KeyError as exc:
        raise KeyError(f"edge {exc.args[0]!r} missing from functor table") from None


def constraint_matrix(g: KGraph) -> sympy.Matrix:
    """One row per unordered square, columns in edge declaration order."""
    cols = {e: i for i, e in enumerate(g.edges)}
    rows = []
    seen = set()
    for (e, f), (f2, e2) in g._squares.items():
        key = frozenset([(e, f), (f2, e2)])
        if key in seen:
            continue
        seen.add(key)
        row = [0] * len(cols)
        row[cols[e]] += 1
        row[cols[f]] += 1
        row[cols[f2]] -= 1
        row[cols[e2]] -= 1
        rows.append(row)
    if not rows:
        return sympy.zeros(0, len(cols))
    return sympy.Matrix(rows)


@dataclass(frozen=True)
class FunctorSpace:
    edges: tuple[str, ...]
    particular: tuple[Fraction, ...]
    basis: tuple[tuple[Fraction, ...], ...]
    free_variables: tuple[str, ...]
    rank: int = field(default=0)

    @property
    def free_count(self) -> int:
        return len(self.basis)

    def combine(self, coefficients: Sequence[Fraction | float]) -> WeightFunctor:
        if len(coefficients) != len(self.basis):
            raise ValueError(f"expected {len(self.basis)} coefficients")
        vals = list(self.particular)
        for c, b in zip(coefficients, self.basis):
            vals = [v + c * x for v, x in zip(vals, b)]
        return WeightFunctor(dict(zip(self.edges, vals)))


def solve_constraints(g: KGraph) -> FunctorSpace:
    """Exact solution space of the square constraints.

    The system is homogeneous, so the particular solution is zero.  Basis
    vectors come from the reduced row echelon form: one per free edge,
    with that edge set to 1 and the other free edges to 0.
    """
    M = constraint_matrix(g)
    edges = tuple(g.edges)
    n = len(edges)
    if M.rows == 0:
        pivots: tuple[int, ...] = ()
        R = sympy.zeros(0, n)
    else:
        R, pivots = M.rref()
    free = [j for j in range(n) if j not in pivots]
    basis = []
    for j in free:
        vec = [Fraction(0)] * n
        vec[j] = Fraction(1)
        for r, p in enumerate(pivots):
            val = -R[r, j]
            vec[p] = Fraction(int(val.p), int(val.q))
        basis.append(tuple(vec))
    return FunctorSpace(
        edges=edges,
        particular=tuple(Fraction(0) for _ in edges),
        basis=tuple(basis),
        free_variables=tuple(edges[j] for j in free),
        rank=len(pivots),
    )


def sample_nonnegative(
    space: FunctorSpace,
    seed: int,
    scale: Fraction | int = 2,
    denominator: int = 16,
    attempts: int = 10_000,
) -> WeightFunctor:
    """Deterministic pseudo-random nonnegative functor with rational values.

    Coefficients are drawn uniformly from ``{0, 1/den, ..., scale}`` and the
    draw is rejected until every edge value is nonnegative.
    """
    rng = random.Random(seed)
    top = int(Fraction(scale) * denominator)
    last = None
    for _ in range(attempts):
        coeffs = [Fraction(rng.randint(0, top), denominator) for _ in space.basis]
        y = space.combine(coeffs)
        if all(v >= 0 for v in y.values.values()):
            return y
        last = coeffs
    raise SamplingError(
        f"no nonnegative functor in {attempts} attempts; last coefficients {last} "
        f"gave values {space.combine(last).values if last else None}"
    )


def load_functor(path, g: KGraph | None = None) -> WeightFunctor:
    """Read ``edge value`` (or ``edge = value``) lines; ``#`` starts a comment.

    Decimal values are kept exact as fractions.
    """
    values: dict[str, Fraction] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace("=", " ").split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'edge value'")
            name, raw = parts
            try:
                val = Fraction(raw)
            except ValueError:
                if not math.isfinite(float(raw)):
                    raise ValueError(f"{path}:{lineno}: non-finite value") from None
                val = Fraction(float(raw))
            values[name] = val
    y = WeightFunctor(values)
    if g is not None:
        y.check(g)
    return y


def write_functor(y: WeightFunctor, path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for e, v in y.values.items():
            text = str(v) if isinstance(v, Fraction) and v.denominator == 1 else repr(float(v))
            fh.write(f"{e} = {text}\n")


def template(space: FunctorSpace) -> str:
    """Functor-file template with the free variables and basis as comments."""
    lines = [f"# free variables ({space.free_count}): {', '.join(space.free_variables)}"]
    for name, b in zip(space.free_variables, space.basis):
        terms = " ".join(f"{e}:{x}" for e, x in zip(space.edges, b) if x)
        lines.append(f"#   basis[{name}] = {terms}")
    lines.extend(f"{e} = 0" for e in space.edges)
    return "\n".join(lines) + "\n"
