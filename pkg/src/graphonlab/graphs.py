"""Finite simple graphs, optionally rooted and/or decorated with part labels.

A single immutable :class:`Graph` type covers the plain, rooted and decorated
cases: ``roots`` is an ordered tuple of vertex indices (root ``i`` carries
label ``i + 1``), ``parts`` assigns every vertex a part label.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from typing import Iterable, Sequence

import numpy as np

BRUTE_FORCE_CUTOFF = 8


class UnsupportedSizeError(ValueError):
    """Raised when a brute-force routine is asked about a graph that is too large."""


@dataclass(frozen=True)
class PartitionSpec:
    """Sizes (and optionally degrees and names) of the parts of a partitioned graphon."""

    sizes: tuple[float, ...]
    degrees: tuple[float, ...] | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        sizes = tuple(float(a) for a in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes or any(a <= 0 for a in sizes):
            raise ValueError("part sizes must be positive")
        if abs(math.fsum(sizes) - 1.0) > 1e-12:
            raise ValueError(f"part sizes sum to {math.fsum(sizes)!r}, not 1")
        if self.degrees is not None:
            degrees = tuple(float(d) for d in self.degrees)
            object.__setattr__(self, "degrees", degrees)
            if len(degrees) != len(sizes):
                raise ValueError("need one degree per part")
            if len(set(degrees)) != len(degrees):
                raise ValueError("part degrees must be pairwise distinct")
            if any(not 0.0 <= d <= 1.0 for d in degrees):
                raise ValueError("part degrees must lie in [0, 1]")
        if self.names is not None:
            names = tuple(str(s) for s in self.names)
            object.__setattr__(self, "names", names)
            if len(names) != len(sizes) or len(set(names)) != len(names):
                raise ValueError("need one distinct name per part")

    @property
    def k(self) -> int:
        return len(self.sizes)

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.sizes)[:-1]])

    def index(self, label) -> int:
        """Resolve a part label (integer index or part name) to an index."""
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            if not 0 <= label < self.k:
                raise ValueError(f"part index {label} out of range for {self.k} parts")
            return int(label)
        if self.names is not None and label in self.names:
            return self.names.index(label)
        if isinstance(label, str) and label.isdigit():
            return self.index(int(label))
        raise ValueError(f"unknown part label {label!r}")

    def interval(self, label) -> tuple[float, float]:
        i = self.index(label)
        start = float(self.starts[i])
        return start, start + self.sizes[i]

    def locate(self, x):
        """Return (part index, fraction of the part) for coordinates ``x``."""
        x = np.asarray(x, dtype=float)
        bounds = np.cumsum(self.sizes)[:-1]
        idx = np.searchsorted(bounds, x, side="right")
        sizes = np.asarray(self.sizes)
        frac = (x - self.starts[idx]) / sizes[idx]
        return idx, np.clip(frac, 0.0, 1.0)


@dataclass(frozen=True)
class Graph:
    """A finite simple graph on vertices ``0..order-1``."""

    order: int
    edges: frozenset = field(default_factory=frozenset)
    roots: tuple[int, ...] = ()
    parts: tuple | None = None

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("order must be non-negative")
        norm = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.order and 0 <= v < self.order):
                raise ValueError(f"edge ({u}, {v}) out of range")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))
        roots = tuple(int(r) for r in self.roots)
        if len(set(roots)) != len(roots):
            raise ValueError("roots must be distinct")
        if any(not 0 <= r < self.order for r in roots):
            raise ValueError("root index out of range")
        object.__setattr__(self, "roots", roots)
        if self.parts is not None:
            parts = tuple(self.parts)
            if len(parts) != self.order:
                raise ValueError("need exactly one part label per vertex")
            object.__setattr__(self, "parts", parts)

    # construction helpers -------------------------------------------------
    @classmethod
    def from_edges(cls, order: int, edges: Iterable[Sequence[int]], roots=(), parts=None):
        return cls(order, frozenset(tuple(e) for e in edges), tuple(roots), parts)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        return cls.from_edges(n, combinations(range(n), 2))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n)

    @classmethod
    def path(cls, n: int) -> "Graph":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)])

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    def with_roots(self, roots) -> "Graph":
        return Graph(self.order, self.edges, tuple(roots), self.parts)

    def with_parts(self, parts) -> "Graph":
        return Graph(self.order, self.edges, self.roots, None if parts is None else tuple(parts))

    def plain(self) -> "Graph":
        """The underlying graph with roots and decorations dropped."""
        return Graph(self.order, self.edges)

    # queries ---------------------------------------------------------------
    @property
    def m(self) -> int:
        return len(self.roots)

    @property
    def is_rooted(self) -> bool:
        return bool(self.roots)

    @property
    def is_decorated(self) -> bool:
        return self.parts is not None

    @property
    def non_roots(self) -> tuple[int, ...]:
        rs = set(self.roots)
        return tuple(v for v in range(self.order) if v not in rs)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.order, self.order), dtype=bool)
        for u, v in self.edges:
            a[u, v] = a[v, u] = True
        return a

    def root_graph(self) -> "Graph":
        """H0: the subgraph induced by the roots, relabelled so root i is vertex i."""
        pos = {r: i for i, r in enumerate(self.roots)}
        edges = [(pos[u], pos[v]) for u, v in self.edges if u in pos and v in pos]
        parts = None if self.parts is None else tuple(self.parts[r] for r in self.roots)
        return Graph.from_edges(self.m, edges, range(self.m), parts)

    def pair_code(self) -> int:
        """Bitmask of present edges over the pairs in lexicographic order."""
        code = 0
        for bit, (u, v) in enumerate(combinations(range(self.order), 2)):
            if (u, v) in self.edges:
                code |= 1 << bit
        return code

    def __repr__(self) -> str:
        extra = ""
        if self.roots:
            extra += f", roots={self.roots}"
        if self.parts is not None:
            extra += f", parts={self.parts}"
        return f"Graph({self.order}, {sorted(self.edges)}{extra})"


# ---------------------------------------------------------------------------
# automorphisms and isomorphism


def _check_cutoff(*graphs: Graph, cutoff: int = BRUTE_FORCE_CUTOFF) -> None:
    for g in graphs:
        if g.order > cutoff:
            raise UnsupportedSizeError(
                f"graph of order {g.order} exceeds the brute-force cutoff {cutoff}")


@lru_cache(maxsize=16)
def _perm_table(n: int) -> np.ndarray:
    # the empty graph has exactly one (empty) permutation
    return np.array(list(permutations(range(n))), dtype=np.intp).reshape(math.factorial(n), n)


def _matching_perms(g1: Graph, g2: Graph, fix_roots: bool, respect_parts: bool) -> np.ndarray:
    """Boolean mask over all permutations p with g1 --p--> g2 an isomorphism."""
    n = g1.order
    perms = _perm_table(n)
    a1, a2 = g1.adjacency(), g2.adjacency()
    ok = np.ones(len(perms), dtype=bool)
    if n:
        # a2[p[u], p[v]] == a1[u, v] for every pair
        mapped = a2[perms[:, :, None], perms[:, None, :]]
        ok &= (mapped == a1[None]).all(axis=(1, 2))
    if fix_roots:
        for r1, r2 in zip(g1.roots, g2.roots):
            ok &= perms[:, r1] == r2
    if respect_parts and g1.parts is not None:
        p1 = np.array([str(p) for p in g1.parts])
        p2 = np.array([str(p) for p in g2.parts])
        ok &= (p2[perms] == p1[None]).all(axis=1)
    return ok


def automorphism_count(g: Graph, *, cutoff: int = BRUTE_FORCE_CUTOFF,
                       respect_parts: bool = False) -> int:
    """|Aut(g)| by exhaustive search; roots of a rooted graph must stay fixed."""
    _check_cutoff(g, cutoff=cutoff)
    return int(_matching_perms(g, g, True, respect_parts).sum())


def are_isomorphic(g1: Graph, g2: Graph, *, cutoff: int = BRUTE_FORCE_CUTOFF,
                   respect_parts: bool = False) -> bool:
    """Isomorphism test; for rooted graphs the i-th root must map to the i-th root."""
    _check_cutoff(g1, g2, cutoff=cutoff)
    if g1.order != g2.order or len(g1.edges) != len(g2.edges) or g1.m != g2.m:
        return False
    if respect_parts and (g1.parts is None) != (g2.parts is None):
        return False
    return bool(_matching_perms(g1, g2, True, respect_parts).any())


def rooted_compatible(h1: Graph, h2: Graph) -> bool:
    """True iff the root-induced subgraphs agree under the label-preserving map."""
    if h1.m != h2.m:
        return False
    return h1.root_graph().edges == h2.root_graph().edges


# ---------------------------------------------------------------------------
# isomorphism classes of small graphs


@lru_cache(maxsize=None)
def _canonical_table(n: int) -> np.ndarray:
    """Map every pair-code on n vertices to the smallest code in its orbit."""
    if n > 6:
        raise UnsupportedSizeError("canonical table only built for n <= 6")
    pairs = list(combinations(range(n), 2))
    index = {p: i for i, p in enumerate(pairs)}
    codes = np.arange(1 << len(pairs), dtype=np.int64)
    best = codes.copy()
    bits = (codes[:, None] >> np.arange(len(pairs))) & 1
    for perm in permutations(range(n)):
        target = [index[tuple(sorted((perm[u], perm[v])))] for u, v in pairs]
        image = (bits << np.asarray(target, dtype=np.int64)).sum(axis=1)
        np.minimum(best, image, out=best)
    return best


def canonical_code(g: Graph) -> int:
    """Isomorphism invariant (complete for order <= 6) of the plain graph."""
    return int(_canonical_table(g.order)[g.pair_code()])


def graph_from_code(n: int, code: int) -> Graph:
    pairs = list(combinations(range(n), 2))
    return Graph.from_edges(n, [p for b, p in enumerate(pairs) if code >> b & 1])


def isomorphism_classes(n: int) -> list[Graph]:
    """One representative per isomorphism class of n-vertex graphs."""
    table = _canonical_table(n)
    return [graph_from_code(n, int(c)) for c in np.unique(table)]


# ---------------------------------------------------------------------------
# densities in finite graphs


def _subset_codes(adj: np.ndarray, subsets: np.ndarray) -> np.ndarray:
    k = subsets.shape[1]
    code = np.zeros(len(subsets), dtype=np.int64)
    for bit, (i, j) in enumerate(combinations(range(k), 2)):
        code |= adj[subsets[:, i], subsets[:, j]].astype(np.int64) << bit
    return code


def iter_subsets(n: int, k: int, chunk: int = 1 << 18):
    """Yield all k-subsets of range(n) as integer arrays, in chunks."""
    it = combinations(range(n), k)
    while True:
        block = np.fromiter((v for c in _take(it, chunk) for v in c), dtype=np.intp)
        if block.size == 0 and k > 0:
            return
        yield block.reshape(-1, k)
        if k == 0 or block.size < chunk * k:
            return


def _take(it, n):
    for _ in range(n):
        try:
            yield next(it)
        except StopIteration:
            return


def induced_density_finite(h: Graph, g: Graph) -> Fraction:
    """d(H, G): fraction of |H|-subsets of V(G) inducing a copy of H, exactly."""
    k, n = h.order, g.order
    if k > n:
        return Fraction(0)
    if k <= 1:
        return Fraction(1)
    target = canonical_code(h.plain())
    table = _canonical_table(k)
    adj = g.adjacency()
    hits = 0
    for block in iter_subsets(n, k):
        hits += int((table[_subset_codes(adj, block)] == target).sum())
    return Fraction(hits, math.comb(n, k))


# ---------------------------------------------------------------------------
# text format


def parse_graph(text: str) -> Graph:
    """Parse ``n m`` / ``u v`` lines with optional ``roots:`` and ``parts:`` lines."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty graph description")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError("first line must be 'n m'")
    n, m = int(head[0]), int(head[1])
    edges, roots, parts = [], (), None
    body = lines[1:]
    if len(body) < m:
        raise ValueError(f"expected {m} edge lines, found {len(body)}")
    for ln in body[:m]:
        u, v = ln.split()
        edges.append((int(u), int(v)))
    for ln in body[m:]:
        key, _, rest = ln.partition(":")
        key = key.strip().lower()
        if key == "roots":
            roots = tuple(int(t) for t in rest.split())
        elif key == "parts":
            parts = tuple(int(t) if t.lstrip("-").isdigit() else t for t in rest.split())
        else:
            raise ValueError(f"unrecognised line {ln!r}")
    return Graph.from_edges(n, edges, roots, parts)


def format_graph(g: Graph) -> str:
    lines = [f"{g.order} {len(g.edges)}"]
    lines += [f"{u} {v}" for u, v in sorted(g.edges)]
    if g.roots:
        lines.append("roots: " + " ".join(map(str, g.roots)))
    if g.parts is not None:
        lines.append("parts: " + " ".join(map(str, g.parts)))
    return "\n".join(lines) + "\n"


def load_graph(path) -> Graph:
    with open(path) as fh:
        return parse_graph(fh.read())


# named small graphs used throughout
EDGE = Graph.complete(2)
NON_EDGE = Graph.empty(2)
TRIANGLE = Graph.complete(3)
CHERRY = Graph.path(3)
