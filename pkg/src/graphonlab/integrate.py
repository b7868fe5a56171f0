"""Tensor-grid quadrature and stratified Monte Carlo over products of parts.

An integration domain is a list of axes.  Each axis ranges over ``[0, 1]`` or
over a single part of a partition.  When a partition is known, grid cells are
aligned to part boundaries and subdivided dyadically in part-local
coordinates, and Monte Carlo samples are stratified by part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import PartitionSpec
from .rng import CHUNK, chunk_sizes, run_chunks, stream

METHODS = ("quad", "mc", "exact")
GRID_CHUNK = 1 << 18
MAX_STRATA_FRACTION = 8


@dataclass
class IntegralResult:
    value: np.ndarray
    cov: np.ndarray
    n: int
    method: str

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))


def _cells(size: float, resolution: int) -> int:
    want = max(1.0, resolution * size)
    return 1 << max(0, math.ceil(math.log2(want) - 1e-12))


def axis_nodes(partition: PartitionSpec | None, part: int | None,
               resolution: int | None) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint nodes and weights along one axis.

    ``resolution=None`` places a single node at the midpoint of every part,
    which integrates exactly any integrand that is constant on parts.
    """
    if partition is None:
        if part is not None:
            raise ValueError("a part restriction needs a partition")
        if resolution is None:
            raise ValueError("exact integration needs a step graphon")
        n = int(resolution)
        return (np.arange(n) + 0.5) / n, np.full(n, 1.0 / n)
    parts = range(partition.k) if part is None else [part]
    nodes, weights = [], []
    starts = partition.starts
    for i in parts:
        a = partition.sizes[i]
        n = 1 if resolution is None else _cells(a, resolution)
        nodes.append(starts[i] + a * (np.arange(n) + 0.5) / n)
        weights.append(np.full(n, a / n))
    return np.concatenate(nodes), np.concatenate(weights)


def _as_2d(values: np.ndarray, n: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 0:
        values = np.full(n, float(values))
    return values.reshape(n, -1)


def grid_integrate(fn, axes, partition, resolution, workers: int = 1) -> IntegralResult:
    d = len(axes)
    grids = [axis_nodes(partition, p, resolution) for p in axes]
    shape = tuple(len(g[0]) for g in grids)
    total = int(np.prod(shape)) if d else 1
    n_chunks = max(1, math.ceil(total / GRID_CHUNK))

    def work(c):
        lo, hi = c * GRID_CHUNK, min(total, (c + 1) * GRID_CHUNK)
        idx = np.unravel_index(np.arange(lo, hi), shape) if d else ()
        x = np.stack([grids[j][0][idx[j]] for j in range(d)], axis=1) if d else np.zeros((1, 0))
        w = np.ones(hi - lo if d else 1)
        for j in range(d):
            w = w * grids[j][1][idx[j]]
        vals = _as_2d(fn(x), len(w))
        return w @ vals

    parts = run_chunks(work, n_chunks, workers)
    value = np.sum(parts, axis=0)
    method = "exact-step" if resolution is None else "quadrature"
    return IntegralResult(value, np.zeros((len(value), len(value))), total, method)


def _strata(axes, partition, budget):
    """Enumerate strata as lists of per-axis (start, width)."""
    per_axis = []
    for p in axes:
        if partition is None:
            per_axis.append([(0.0, 1.0)])
        elif p is not None:
            per_axis.append([partition.interval(p)])
        else:
            per_axis.append([partition.interval(i) for i in range(partition.k)])
    count = int(np.prod([len(a) for a in per_axis])) if axes else 1
    if count * MAX_STRATA_FRACTION > budget:
        per_axis = [a if len(a) == 1 else [(0.0, 1.0)] for a in per_axis]
    strata = [[]]
    for options in per_axis:
        strata = [s + [(lo, hi - lo)] for s in strata for lo, hi in options]
    return strata


def mc_integrate(fn, axes, partition, budget, seed, key=(), workers: int = 1) -> IntegralResult:
    """Stratified Monte Carlo with proportional allocation (at least 2 per stratum)."""
    budget = max(2, int(budget))
    d = len(axes)
    strata = _strata(axes, partition, budget)
    vols = np.array([math.prod(w for _, w in s) for s in strata])
    share = vols / vols.sum()
    alloc = np.maximum(2, np.floor(share * budget).astype(int))
    tasks = [(si, ci, size)
             for si in range(len(strata))
             for ci, size in enumerate(chunk_sizes(alloc[si], CHUNK))]

    def work(t):
        si, ci, size = tasks[t]
        rng = stream(seed, *key, si, ci)
        lo = np.array([a for a, _ in strata[si]])
        width = np.array([w for _, w in strata[si]])
        x = lo + width * rng.random((size, d)) if d else np.zeros((size, 0))
        vals = _as_2d(fn(x), size)
        mean = vals.mean(axis=0)
        centred = vals - mean
        return size, mean, centred.T @ centred

    results = run_chunks(work, len(tasks), workers)
    q = results[0][1].shape[0]
    n_s = np.zeros(len(strata), dtype=int)
    mean_s = np.zeros((len(strata), q))
    m2_s = np.zeros((len(strata), q, q))
    for (si, _, _), (n, mean, m2) in zip(tasks, results):
        # Chan et al. pairwise update
        n0 = n_s[si]
        delta = mean - mean_s[si]
        tot = n0 + n
        mean_s[si] = mean_s[si] + delta * (n / tot)
        m2_s[si] = m2_s[si] + m2 + np.outer(delta, delta) * (n0 * n / tot)
        n_s[si] = tot
    value = (vols[:, None] * mean_s).sum(axis=0)
    cov = np.zeros((q, q))
    for si in range(len(strata)):
        cov += vols[si] ** 2 * m2_s[si] / (n_s[si] - 1) / n_s[si]
    return IntegralResult(value, cov, int(n_s.sum()), "monte-carlo")


def integrate(fn, axes, partition, method: str, budget: int, seed=None, key=(),
              workers: int = 1) -> IntegralResult:
    """Integrate ``fn`` over the product domain described by ``axes``.

    For ``quad`` the budget is the total number of grid nodes, spread evenly
    over the axes; for ``mc`` it is the number of samples.
    """
    if method not in METHODS:
        raise ValueError(f"unsupported method {method!r}; choose from {METHODS}")
    if method == "exact":
        if partition is None:
            raise ValueError("exact integration needs a step graphon")
        return grid_integrate(fn, axes, partition, None, workers)
    if method == "quad":
        d = max(1, len(axes))
        resolution = max(1, int(round(budget ** (1.0 / d))))
        return grid_integrate(fn, axes, partition, resolution, workers)
    return mc_integrate(fn, axes, partition, budget, seed, key, workers)
