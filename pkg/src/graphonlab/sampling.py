"""W-random graphs, densities in large finite graphs, and convergence runs."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .density import graphon_density
from .estimate import Estimate
from .graphon import Graphon
from .graphs import Graph, _canonical_table, canonical_code, iter_subsets
from .rng import run_chunks, stream

MAX_ORDER = 1 << 14
ROW_BLOCK = 256
EXACT_LIMIT = 10 ** 7


@dataclass(frozen=True, eq=False)
class SampledGraph:
    """A large graph stored as a packed bitset, one row of bits per vertex."""

    order: int
    packed: np.ndarray = field(repr=False)
    coords: np.ndarray | None = field(default=None, repr=False)

    def has_edge(self, i, j):
        i, j = np.asarray(i), np.asarray(j)
        return ((self.packed[i, j >> 3] >> (7 - (j & 7))) & 1).astype(bool)

    def adjacency(self) -> np.ndarray:
        return np.unpackbits(self.packed, axis=1, count=self.order).astype(bool)

    def degrees(self) -> np.ndarray:
        return np.unpackbits(self.packed, axis=1, count=self.order).sum(axis=1)

    @property
    def edge_count(self) -> int:
        return int(self.degrees().sum()) // 2

    def edge_list(self):
        adj = self.adjacency()
        u, v = np.nonzero(np.triu(adj, 1))
        return list(zip(u.tolist(), v.tolist()))

    def to_graph(self) -> Graph:
        return Graph.from_edges(self.order, self.edge_list())

    def to_text(self) -> str:
        edges = self.edge_list()
        return "".join([f"{self.order} {len(edges)}\n"] + [f"{u} {v}\n" for u, v in edges])


def packed_adjacency(g) -> SampledGraph:
    if isinstance(g, SampledGraph):
        return g
    return SampledGraph(g.order, np.packbits(g.adjacency(), axis=1))


def sample_w_random_graph(w: Graphon, k: int, seed=None, workers: int = 1,
                          max_order: int = MAX_ORDER) -> SampledGraph:
    """Draw k uniform points and join each pair with probability W(x_i, x_j).

    Row blocks of ``ROW_BLOCK`` vertices draw from their own streams, so the
    result does not depend on ``workers``.
    """
    if k < 1:
        raise ValueError("order must be positive")
    if k > max_order:
        raise ValueError(f"order {k} exceeds the cap {max_order}")
    x = stream(seed, 21).random(k)
    nbytes = (k + 7) // 8
    packed = np.zeros((k, nbytes), dtype=np.uint8)
    n_blocks = (k + ROW_BLOCK - 1) // ROW_BLOCK

    def work(b):
        lo, hi = b * ROW_BLOCK, min(k, (b + 1) * ROW_BLOCK)
        rng = stream(seed, 22, b)
        cols = np.arange(lo, k)
        probs = w._eval(x[lo:hi, None], x[None, lo:])
        upper = (rng.random(probs.shape) < probs) & (cols[None, :] > np.arange(lo, hi)[:, None])
        strip = np.zeros((hi - lo, k), dtype=bool)
        strip[:, lo:] = upper
        strip[:, lo:hi] |= upper[:, :hi - lo].T
        # each block owns its rows right of the diagonal and their mirror images
        packed[lo:hi, lo // 8:] |= np.packbits(strip, axis=1)[:, lo // 8:]
        packed[hi:, lo // 8:(hi + 7) // 8] |= np.packbits(strip[:, hi:].T, axis=1)
        return None

    run_chunks(work, n_blocks, workers)
    return SampledGraph(k, packed, x)


# ---------------------------------------------------------------------------
# densities in finite graphs


def _codes(g: SampledGraph, subsets: np.ndarray) -> np.ndarray:
    k = subsets.shape[1]
    code = np.zeros(len(subsets), dtype=np.int64)
    for bit, (i, j) in enumerate(combinations(range(k), 2)):
        code |= g.has_edge(subsets[:, i], subsets[:, j]).astype(np.int64) << bit
    return code


def _local_hits_exact(h: Graph, g: SampledGraph):
    """Total count of induced copies of h and the per-vertex counts."""
    k, n = h.order, g.order
    if k == 2:
        deg = g.degrees().astype(np.int64)
        if h.edges:
            return int(deg.sum()) // 2, deg
        non = (n - 1) - deg
        return int(non.sum()) // 2, non
    target = canonical_code(h.plain())
    table = _canonical_table(k)
    per_vertex = np.zeros(n, dtype=np.int64)
    hits = 0
    for block in iter_subsets(n, k):
        ok = table[_codes(g, block)] == target
        hits += int(ok.sum())
        per_vertex += np.bincount(block[ok].ravel(), minlength=n)
    return hits, per_vertex


def _random_subsets(rng, n: int, k: int, size: int) -> np.ndarray:
    out = np.empty((0, k), dtype=np.intp)
    while len(out) < size:
        draw = rng.integers(0, n, size=(2 * (size - len(out)) + 16, k))
        s = np.sort(draw, axis=1)
        keep = np.all(s[:, 1:] != s[:, :-1], axis=1) if k > 1 else np.ones(len(s), bool)
        out = np.concatenate([out, draw[keep]])
    return out[:size]


def empirical_density(h: Graph, g, mode: str = "exact", budget: int = 100_000,
                      seed=None) -> Estimate:
    """d(H, G) by full enumeration (``exact``) or uniform subset sampling (``sampled``)."""
    k, n = h.order, g.order
    if k > n:
        return Estimate(0.0, 0.0, 0, "exact-step")
    if k <= 1:
        return Estimate(1.0, 0.0, n, "exact-step")
    pg = packed_adjacency(g)
    if mode == "exact":
        total = math.comb(n, k)
        if total > EXACT_LIMIT and k > 2:
            raise ValueError(f"{total} subsets exceed the exact-mode limit {EXACT_LIMIT}")
        hits, _ = _local_hits_exact(h, pg)
        return Estimate(hits / total, 0.0, total, "exact-step")
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = stream(seed, 23)
    subsets = _random_subsets(rng, n, k, int(budget))
    target = canonical_code(h.plain())
    ok = _canonical_table(k)[_codes(pg, subsets)] == target
    p = float(ok.mean())
    return Estimate(p, math.sqrt(p * (1 - p) / len(ok)), len(ok), "monte-carlo")


def _ustat_sigma(h: Graph, pg: SampledGraph, seed, budget: int) -> float:
    """Spread of d(H, G_n) around d(H, W): k * sd(local densities) / sqrt(n)."""
    k, n = h.order, pg.order
    if k < 2 or n <= k:
        return 0.0
    if k == 2 or math.comb(n, k) <= EXACT_LIMIT:
        _, per_vertex = _local_hits_exact(h, pg)
        local = per_vertex / math.comb(n - 1, k - 1)
    else:
        rng = stream(seed, 24)
        subsets = _random_subsets(rng, n, k, budget)
        ok = _canonical_table(k)[_codes(pg, subsets)] == canonical_code(h.plain())
        seen = np.bincount(subsets.ravel(), minlength=n)
        hit = np.bincount(subsets[ok].ravel(), minlength=n)
        local = hit[seen > 0] / seen[seen > 0]
    return k * float(np.std(local, ddof=1)) / math.sqrt(n)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    estimate: float
    stderr: float
    deviation: float


def convergence_experiment(w: Graphon, h: Graph, orders, seed=None, target: float | None = None,
                           budget: int = 200_000, workers: int = 1) -> list[ConvergenceRow]:
    """One W-random graph per order; deviation from d(H, W).

    ``stderr`` combines the spread of the finite density around its limit
    (from per-vertex local densities) with any subset-sampling error.
    """
    orders = [int(n) for n in orders]
    if any(b <= a for a, b in zip(orders, orders[1:])):
        raise ValueError("orders must be increasing")
    if target is None:
        target = graphon_density(h, w, seed=seed, workers=workers).value
    rows = []
    for idx, n in enumerate(orders):
        sub_seed = int(np.random.SeedSequence(0 if seed is None else seed,
                                              spawn_key=(25, idx)).generate_state(1)[0])
        g = sample_w_random_graph(w, n, sub_seed, workers)
        exact = h.order <= 2 or math.comb(n, h.order) <= EXACT_LIMIT
        est = empirical_density(h, g, "exact" if exact else "sampled", budget, sub_seed)
        sigma = _ustat_sigma(h, g, sub_seed, budget)
        se = math.hypot(sigma, est.stderr)
        rows.append(ConvergenceRow(n, est.value, se, abs(est.value - target)))
    return rows
