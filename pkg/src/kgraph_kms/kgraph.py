"""Finite k-graphs: validation, normal forms and path combinatorics.

A morphism is stored as a word of edges in *color-nondecreasing* order
(all color-1 edges first, nearest the range).  Because of the unique
factorization property this normal form is unique, so two paths are equal
exactly when their normal forms are.  Words are brought to normal form by
bubble-sorting on colors, replacing each inverted adjacent pair with the
other side of its commuting square.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

try:  # pragma: no cover - exercised depending on interpreter
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

__all__ = [
    "CapExceededError",
    "Edge",
    "InvalidGraphError",
    "KGraph",
    "Path",
    "degree_join",
    "irreducibility_witness",
    "load_graph",
    "load_fixture",
    "validate",
]

DEFAULT_CAP = 12


class InvalidGraphError(ValueError):
    """Raised when a graph description violates the k-graph axioms."""


class CapExceededError(ValueError):
    """Raised when an enumeration would exceed the configured degree cap."""


class Edge(NamedTuple):
    id: str
    color: int  # 0-based
    src: str
    rng: str


@dataclass(frozen=True)
class Path:
    """A morphism of a k-graph in color-block normal form."""

    rng: str
    src: str
    degree: tuple[int, ...]
    edges: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.edges)

    def is_vertex(self) -> bool:
        return not self.edges

    def __str__(self) -> str:
        return "".join(self.edges) if self.edges else self.rng


def degree_join(m: Sequence[int], n: Sequence[int]) -> tuple[int, ...]:
    """Coordinatewise maximum of two degrees."""
    return tuple(max(a, b) for a, b in zip(m, n))


def _leq(m: Sequence[int], n: Sequence[int]) -> bool:
    return all(a <= b for a, b in zip(m, n))


def degrees_upto(max_degree: Sequence[int]) -> list[tuple[int, ...]]:
    """All degrees n with 0 <= n <= max_degree, ordered by |n| then lexicographically descending."""
    degs = itertools.product(*(range(m + 1) for m in max_degree))
    return sorted(degs, key=lambda n: (sum(n), tuple(-x for x in n)))


def irreducibility_witness(matrices, cap: int = DEFAULT_CAP):
    """Search for a finite set F of degrees with sum_{n in F} M^n entrywise positive.

    Degrees are scanned in order of increasing total length, skipping n = 0,
    and a degree is kept only when it makes new entries positive.  Returns the
    tuple F, or None when the cap is reached first.
    """
    mats = [np.asarray(m, dtype=float) for m in matrices]
    k = len(mats)
    size = mats[0].shape[0]
    if any(not np.any(m > 0) for m in mats):
        return None
    covered = np.zeros((size, size), dtype=bool)
    chosen = []
    for total in range(1, cap + 1):
        for n in degrees_upto((total,) * k):
            if sum(n) != total:
                continue
            prod = np.eye(size)
            for m, p in zip(mats, n):
                prod = prod @ np.linalg.matrix_power(m, p)
            support = prod > 0
            if np.any(support & ~covered):
                covered |= support
                chosen.append(n)
                if covered.all():
                    return tuple(chosen)
    return None


class KGraph:
    """A validated finite k-graph.

    Instances are produced by :func:`validate` and are immutable in
    practice; all path operations are pure.
    """

    def __init__(self, name, k, vertices, edges, squares, witness, cap=DEFAULT_CAP):
        self.name = name
        self.k = k
        self.vertices: tuple[str, ...] = tuple(vertices)
        self.edges: dict[str, Edge] = dict(edges)
        self._squares: dict[tuple[str, str], tuple[str, str]] = dict(squares)
        self.connectivity_witness = witness
        self.cap = cap
        self.vertex_index = {v: i for i, v in enumerate(self.vertices)}
        self._by_color_rng: dict[tuple[int, str], list[str]] = {}
        for e in self.edges.values():
            self._by_color_rng.setdefault((e.color, e.rng), []).append(e.id)
        self._nf_cache: dict[tuple[str, ...], tuple[str, ...]] = {}

        n = len(self.vertices)
        A = np.zeros((k, n, n), dtype=np.int64)
        for e in self.edges.values():
            A[e.color, self.vertex_index[e.rng], self.vertex_index[e.src]] += 1
        self.coordinate_matrices = A

    def __repr__(self):
        return f"KGraph(name={self.name!r}, k={self.k}, vertices={len(self.vertices)}, edges={len(self.edges)})"

    # -- construction helpers -------------------------------------------------

    def color(self, edge_id: str) -> int:
        return self.edges[edge_id].color

    def vertex(self, v: str) -> Path:
        if v not in self.vertex_index:
            raise KeyError(f"unknown vertex {v!r}")
        return Path(v, v, (0,) * self.k, ())

    def edge_path(self, edge_id: str) -> Path:
        e = self.edges[edge_id]
        deg = [0] * self.k
        deg[e.color] = 1
        return Path(e.rng, e.src, tuple(deg), (edge_id,))

    def path(self, *edge_ids: str) -> Path:
        """The morphism represented by a composable string of edges (any color order)."""
        if not edge_ids:
            raise ValueError("use vertex() for vertex paths")
        self._check_composable(edge_ids)
        return self._make(self.edges[edge_ids[0]].rng, self._normalize(tuple(edge_ids)))

    def _check_composable(self, word: Sequence[str]) -> None:
        for a, b in zip(word, word[1:]):
            if self.edges[a].src != self.edges[b].rng:
                raise ValueError(f"edges {a} and {b} are not composable")

    def _make(self, rng: str, word: tuple[str, ...]) -> Path:
        deg = [0] * self.k
        for e in word:
            deg[self.edges[e].color] += 1
        src = self.edges[word[-1]].src if word else rng
        return Path(rng, src, tuple(deg), word)

    # -- rewriting -------------------------------------------------------------

    def _sort_word(self, word: Sequence[str], keys: Sequence[int]) -> tuple[str, ...]:
        word = list(word)
        keys = list(keys)
        n = len(word)
        for end in range(n - 1, 0, -1):
            swapped = False
            for i in range(end):
                if keys[i] > keys[i + 1]:
                    word[i], word[i + 1] = self._squares[(word[i], word[i + 1])]
                    keys[i], keys[i + 1] = keys[i + 1], keys[i]
                    swapped = True
            if not swapped:
                break
        return tuple(word)

    def _normalize(self, word: tuple[str, ...]) -> tuple[str, ...]:
        cached = self._nf_cache.get(word)
        if cached is None:
            cached = self._sort_word(word, [self.edges[e].color for e in word])
            self._nf_cache[word] = cached
        return cached

    def refactor(self, path: Path, colors: Sequence[int]) -> tuple[str, ...]:
        """Rewrite ``path`` as the unique edge word with the given color sequence."""
        if sorted(colors) != sorted(self.edges[e].color for e in path.edges):
            raise ValueError("color sequence does not match the degree of the path")
        slots: dict[int, list[int]] = {}
        for pos, c in enumerate(colors):
            slots.setdefault(c, []).append(pos)
        seen: dict[int, int] = {}
        keys = []
        for e in path.edges:
            c = self.edges[e].color
            keys.append(slots[c][seen.get(c, 0)])
            seen[c] = seen.get(c, 0) + 1
        return self._sort_word(path.edges, keys)

    # -- path operations -------------------------------------------------------

    def compose(self, lam: Path, nu: Path) -> Path:
        if lam.src != nu.rng:
            raise ValueError(f"cannot compose: s({lam}) = {lam.src} but r({nu}) = {nu.rng}")
        if not nu.edges:
            return lam
        if not lam.edges:
            return nu
        return self._make(lam.rng, self._normalize(lam.edges + nu.edges))

    def vertex_at(self, word: Sequence[str], rng: str, pos: int) -> str:
        return rng if pos == 0 else self.edges[word[pos - 1]].src

    def subpath(self, lam: Path, p: Sequence[int], q: Sequence[int]) -> Path:
        """The segment lam(p, q), of degree q - p."""
        p, q = tuple(p), tuple(q)
        if not (_leq((0,) * self.k, p) and _leq(p, q) and _leq(q, lam.degree)):
            raise ValueError(f"need 0 <= {p} <= {q} <= {lam.degree}")
        blocks = []
        for lo, hi in ((None, p), (p, q), (q, lam.degree)):
            for c in range(self.k):
                blocks.extend([c] * (hi[c] - (lo[c] if lo else 0)))
        word = self.refactor(lam, blocks)
        i, j = sum(p), sum(q)
        start = self.vertex_at(word, lam.rng, i)
        return self._make(start, word[i:j])

    def shift(self, lam: Path, m: Sequence[int]) -> Path:
        if not _leq(m, lam.degree):
            raise ValueError(f"shift {tuple(m)} exceeds degree {lam.degree}")
        return self.subpath(lam, m, lam.degree)

    def _check_cap(self, n: Sequence[int], cap: int | None) -> None:
        cap = self.cap if cap is None else cap
        if sum(n) > cap:
            raise CapExceededError(f"|n|_1 = {sum(n)} exceeds enumeration cap {cap}")

    def enumerate_paths(self, v: str, n: Sequence[int], w: str | None = None, cap: int | None = None) -> list[Path]:
        """All paths in v Lambda^n (or v Lambda^n w), in normal form."""
        n = tuple(n)
        if len(n) != self.k or any(x < 0 for x in n):
            raise ValueError(f"bad degree {n}")
        self._check_cap(n, cap)
        colors = [c for c in range(self.k) for _ in range(n[c])]
        out = []

        def extend(prefix, at, depth):
            if depth == len(colors):
                if w is None or at == w:
                    out.append(tuple(prefix))
                return
            for e in self._by_color_rng.get((colors[depth], at), ()):
                prefix.append(e)
                extend(prefix, self.edges[e].src, depth + 1)
                prefix.pop()

        extend([], v, 0)
        return [self._make(v, word) for word in out]

    def paths_of_degree(self, n: Sequence[int], cap: int | None = None) -> list[Path]:
        return [p for v in self.vertices for p in self.enumerate_paths(v, n, cap=cap)]

    def paths_upto(self, max_degree: Sequence[int], cap: int | None = None) -> list[Path]:
        """Every path with degree <= max_degree, ordered by degree then normal form."""
        return [p for n in degrees_upto(max_degree) for p in self.paths_of_degree(n, cap=cap)]

    def extensions(self, lam: Path, n: Sequence[int], cap: int | None = None) -> list[Path]:
        """All lam.eta with d(eta) = n."""
        return [self.compose(lam, eta) for eta in self.enumerate_paths(lam.src, n, cap=cap)]

    def lambda_min(self, alpha: Path, beta: Path) -> list[tuple[Path, Path]]:
        """Minimal common extensions: pairs (xi, zeta) with alpha.xi = beta.zeta of degree d(alpha) v d(beta)."""
        if alpha.rng != beta.rng:
            raise ValueError(f"r({alpha}) != r({beta})")
        m = degree_join(alpha.degree, beta.degree)
        da = tuple(a - b for a, b in zip(m, alpha.degree))
        out = []
        for xi in self.enumerate_paths(alpha.src, da, cap=max(self.cap, sum(da))):
            ext = self.compose(alpha, xi)
            if self.subpath(ext, (0,) * self.k, beta.degree) == beta:
                out.append((xi, self.subpath(ext, beta.degree, m)))
        return out

    def path_count(self, v: str, n: Sequence[int], w: str | None = None) -> int:
        """|v Lambda^n w| from the coordinate matrices."""
        M = np.eye(len(self.vertices), dtype=np.int64)
        for c, p in enumerate(n):
            M = M @ np.linalg.matrix_power(self.coordinate_matrices[c], p)
        row = M[self.vertex_index[v]]
        return int(row.sum() if w is None else row[self.vertex_index[w]])


# -- loading and validation --------------------------------------------------------


def _parse_color(key: str) -> int:
    if not key.startswith("color_"):
        raise InvalidGraphError(f"edge section {key!r} must be named color_<i>")
    try:
        i = int(key[len("color_"):])
    except ValueError:
        raise InvalidGraphError(f"edge section {key!r} must be named color_<i>") from None
    return i


def validate(raw: Mapping, cap: int = DEFAULT_CAP) -> KGraph:
    """Check a parsed graph description and build a :class:`KGraph`.

    ``raw`` has the layout of the TOML graph files: ``k``, ``[vertices] ids``,
    ``[edges.color_i]`` tables mapping edge id to ``{src, rng}`` and
    ``[squares] relations`` as quadruples ``[e, f, f', e']`` meaning
    ``e.f = f'.e'``.

    Raises
    ------
    InvalidGraphError
        On dangling endpoints, a non-bijective square set, a failed cube
        condition (k >= 3) or a graph that is not strongly connected.
    """
    try:
        vertices = list(raw["vertices"]["ids"])
        edge_sections = raw["edges"]
    except (KeyError, TypeError) as exc:
        raise InvalidGraphError(f"missing section: {exc}") from None
    if len(set(vertices)) != len(vertices) or not vertices:
        raise InvalidGraphError("vertex ids must be nonempty and distinct")
    colors = sorted(_parse_color(key) for key in edge_sections)
    k = int(raw.get("k", max(colors) if colors else 0))
    if k < 1:
        raise InvalidGraphError("k must be a positive integer")
    edges: dict[str, Edge] = {}
    for key, table in edge_sections.items():
        c = _parse_color(key)
        if not 1 <= c <= k:
            raise InvalidGraphError(f"color {c} outside 1..{k}")
        for eid, ends in table.items():
            if eid in edges or eid in vertices:
                raise InvalidGraphError(f"duplicate identifier {eid!r}")
            src, rng = ends.get("src"), ends.get("rng")
            if src not in vertices or rng not in vertices:
                raise InvalidGraphError(f"edge {eid!r} has dangling endpoint ({src!r} -> {rng!r})")
            edges[eid] = Edge(eid, c - 1, src, rng)

    squares: dict[tuple[str, str], tuple[str, str]] = {}
    for rel in raw.get("squares", {}).get("relations", []):
        if len(rel) != 4 or any(x not in edges for x in rel):
            raise InvalidGraphError(f"square {rel!r} must name four known edges")
        e, f, f2, e2 = (edges[x] for x in rel)
        if e.color == f.color or e.color != e2.color or f.color != f2.color:
            raise InvalidGraphError(f"square {rel!r} has inconsistent colors")
        if e.src != f.rng or f2.src != e2.rng:
            raise InvalidGraphError(f"square {rel!r} contains a non-composable word")
        if e.rng != f2.rng or f.src != e2.src:
            raise InvalidGraphError(f"square {rel!r}: the two sides have different range or source")
        for lhs, rhs in (((e.id, f.id), (f2.id, e2.id)), ((f2.id, e2.id), (e.id, f.id))):
            if lhs in squares and squares[lhs] != rhs:
                raise InvalidGraphError(f"pairing is not a bijection: word {lhs} appears in two squares")
            squares[lhs] = rhs

    # every composable two-color word must be paired
    for a in edges.values():
        for b in edges.values():
            if a.color != b.color and a.src == b.rng and (a.id, b.id) not in squares:
                raise InvalidGraphError(f"pairing is not a bijection: word {a.id}{b.id} is unpaired")

    g = KGraph(raw.get("name"), k, vertices, edges, squares, None, cap=cap)
    A = g.coordinate_matrices
    for i in range(k):
        for j in range(i + 1, k):
            if not np.array_equal(A[i] @ A[j], A[j] @ A[i]):
                raise InvalidGraphError(f"coordinate matrices {i + 1} and {j + 1} do not commute")
    if k >= 3:
        _check_cubes(g)
    witness = irreducibility_witness(A, cap=cap)
    if witness is None:
        raise InvalidGraphError("graph is not strongly connected (no positive A^F found within cap)")
    g.connectivity_witness = witness
    return g


def _check_cubes(g: KGraph) -> None:
    # For each composable word with three distinct colors in decreasing
    # order, the two reduced bubble orders s1 s2 s1 and s2 s1 s2 must agree.
    def swap(word, i):
        word = list(word)
        word[i], word[i + 1] = g._squares[(word[i], word[i + 1])]
        return word

    for a, b, c in itertools.product(g.edges.values(), repeat=3):
        if not (a.color > b.color > c.color):
            continue
        if a.src != b.rng or b.src != c.rng:
            continue
        word = [a.id, b.id, c.id]
        left = swap(swap(swap(word, 0), 1), 0)
        right = swap(swap(swap(word, 1), 0), 1)
        if left != right:
            raise InvalidGraphError(f"cube condition fails on {''.join(word)}: {left} != {right}")


def load_graph(path, cap: int = DEFAULT_CAP) -> KGraph:
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return validate(raw, cap=cap)


FIXTURES = ("mcnamara", "eyeglasses")


def fixture_path(name: str) -> FsPath:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    return FsPath(__file__).with_name("data") / f"{name}.toml"


def load_fixture(name: str, cap: int = DEFAULT_CAP) -> KGraph:
    """Load one of the bundled graphs: ``mcnamara`` (one vertex) or ``eyeglasses`` (three vertices)."""
    return load_graph(fixture_path(name), cap=cap)


def iter_monomial_paths(g: KGraph, max_degree: Sequence[int]) -> Iterator[tuple[Path, Path]]:
    """Pairs (lam, nu) of paths with common source and degrees <= max_degree."""
    by_src: dict[str, list[Path]] = {}
    for p in g.paths_upto(max_degree):
        by_src.setdefault(p.src, []).append(p)
    for v in g.vertices:
        for lam in by_src.get(v, ()):
            for nu in by_src.get(v, ()):
                yield lam, nu


def word_colors(g: KGraph, word: Iterable[str]) -> list[int]:
    return [g.edges[e].color for e in word]
