"""L1 and d_W distances between vertex sections, and the packing witnesses
showing that the typical-vertex space of the Rademacher graphon is not
locally compact."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .estimate import Estimate
from .graphon import (A, A1, B1, B2, C, C1, D, Graphon, RademacherLayout, SectionFunction,
                      _dyadic_index_unchecked)
from .graphs import PartitionSpec

DEFAULT_GRID = 1 << 12
MIN_GRID = 1 << 8
X_CHUNK = 1 << 22

_LAYOUT = RademacherLayout()
_SPEC = _LAYOUT.spec()


def _part_edges(part: str, fracs) -> np.ndarray:
    lo, hi = _SPEC.interval(part)
    return lo + np.asarray(fracs, dtype=float) * (hi - lo)


def _block_edges(i: int) -> list[float]:
    return [1 - 2.0 ** (1 - i), 1 - 2.0 ** -i]


def witness_g() -> SectionFunction:
    """1 on A', B'' and C'; 0.2 on D; 0 elsewhere."""

    values = np.array([0, 1, 0, 0, 1, 0, 1, 0.2])

    def fn(x):
        return values[_SPEC.locate(np.asarray(x, dtype=float))[0]]

    return SectionFunction(fn, "witness g", np.asarray(_SPEC.starts[1:]), _SPEC)


def witness_g_i_delta(i: int, delta: float) -> SectionFunction:
    """The section of the Rademacher graphon at 2/9 - (1 + delta) 2^-i / 9.

    Thresholds are read in part-local fractions: block i of A and A' are
    swapped, B' and B'' are cut at (1 + delta) 2^-i, C carries delta on the
    cells with an even i-th binary digit, and C' is cut at 1 - delta.
    """
    if int(i) != i or i < 1:
        raise ValueError("i must be a positive integer")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    i = int(i)
    cut = (1 + delta) * 2.0 ** -i

    def fn(x):
        part, u = _SPEC.locate(np.asarray(x, dtype=float))
        out = np.zeros(part.shape)
        k = _dyadic_index_unchecked(np.clip(u, 0, 1 - 1e-16))
        out[(part == A) & (k == i)] = 1.0
        out[(part == A1) & (k != i)] = 1.0
        out[(part == B1) & (u <= cut)] = 1.0
        out[(part == B2) & (u <= 1 - cut)] = 1.0
        out[(part == C) & (np.floor(np.ldexp(u, i)) % 2 == 0)] = delta
        out[(part == C1) & (u <= 1 - delta)] = 1.0
        out[part == D] = 0.2
        return out

    breaks = np.concatenate([
        _SPEC.starts[1:],
        _part_edges("A", _block_edges(i)),
        _part_edges("A'", _block_edges(i)),
        _part_edges("B'", [cut]),
        _part_edges("B''", [1 - cut]),
        _part_edges("C", np.arange(1, 1 << i) / (1 << i)),
        _part_edges("C'", [1 - delta]),
    ])
    return SectionFunction(fn, f"witness g_{i},{delta}", np.unique(breaks), _SPEC)


def witness_root_point(i: int, delta: float) -> float:
    """The vertex whose section in the Rademacher graphon is g_{i, delta}."""
    return 2.0 / 9.0 - (1 + delta) * 2.0 ** -i / 9.0


def closed_form_distance(i: int, delta: float) -> float:
    return ((4 + 2 * delta) * 2.0 ** -i + 2 * delta) / 9


# ---------------------------------------------------------------------------
# grids and distances


def _grid_cells(grid: int, layout: PartitionSpec | None, *extra) -> tuple[np.ndarray, np.ndarray]:
    """Midpoints and widths of a uniform or part-aligned grid refined at breakpoints."""
    if grid < MIN_GRID:
        raise ValueError(f"grid resolution must be at least {MIN_GRID}")
    if layout is None:
        edges = [np.linspace(0.0, 1.0, grid + 1)]
    else:
        edges = []
        for lo, a in zip(layout.starts, layout.sizes):
            n = 1 << max(0, math.ceil(math.log2(max(1.0, grid * a)) - 1e-12))
            edges.append(lo + a * np.arange(n + 1) / n)
    edges.extend(np.asarray(b, dtype=float) for b in extra if len(b))
    e = np.unique(np.clip(np.concatenate(edges + [np.array([0.0, 1.0])]), 0.0, 1.0))
    widths = np.diff(e)
    keep = widths > 0
    return ((e[:-1] + e[1:]) / 2)[keep], widths[keep]


def _common_grid(f: SectionFunction, g: SectionFunction, grid: int, layout=None):
    layout = layout or f.layout or g.layout
    return _grid_cells(grid, layout, f.breakpoints, g.breakpoints)


def l1_distance(f: SectionFunction, g: SectionFunction, grid: int = DEFAULT_GRID) -> Estimate:
    """∫|f - g| by the composite midpoint rule on a grid refined at both
    functions' breakpoints; exact for piecewise constant functions."""
    nodes, widths = _common_grid(f, g, grid)
    val = float(np.abs(f(nodes) - g(nodes)) @ widths)
    return Estimate(val, 0.0, len(nodes), "quadrature")


def pairwise_l1(sections, grid: int = DEFAULT_GRID, chunk: int = 1 << 18) -> np.ndarray:
    """Matrix of L1 distances, evaluating every section once per chunk of a
    grid refined at all of their breakpoints."""
    sections = list(sections)
    n = len(sections)
    out = np.zeros((n, n))
    if n == 0:
        return out
    layout = next((s.layout for s in sections if s.layout is not None), None)
    nodes, widths = _grid_cells(grid, layout, *[s.breakpoints for s in sections])
    for lo in range(0, len(nodes), chunk):
        x, wt = nodes[lo:lo + chunk], widths[lo:lo + chunk]
        vals = np.stack([s(x) for s in sections])
        for a in range(n):
            out[a, a + 1:] += np.abs(vals[a + 1:] - vals[a]) @ wt
    return out + out.T


def dw_distance(w: Graphon, f: SectionFunction, g: SectionFunction,
                grid: int = DEFAULT_GRID, outer: int = 1 << 10) -> Estimate:
    """∫ |∫ W(x, y) (f(y) - g(y)) dy| dx.

    The inner rule uses the same nodes as :func:`l1_distance`, so
    ``dw_distance <= l1_distance`` holds up to rounding.
    """
    ys, wy = _common_grid(f, g, grid)
    diff = (f(ys) - g(ys)) * wy
    keep = diff != 0
    ys, diff = ys[keep], diff[keep]
    xs, wx = _grid_cells(max(outer, MIN_GRID), w.partition)
    total = 0.0
    if len(ys):
        step = max(1, X_CHUNK // len(ys))
        for lo in range(0, len(xs), step):
            x = xs[lo:lo + step]
            inner = w._eval(x[:, None], ys[None, :]) @ diff
            total += float(np.abs(inner) @ wx[lo:lo + step])
    return Estimate(total, 0.0, len(xs) * max(1, len(ys)), "quadrature")


def check_separation(i: int, delta: float, i2: int, delta2: float,
                     grid: int = DEFAULT_GRID) -> bool:
    """‖g_{i,δ} - g_{i',δ'}‖₁ > (δ + δ')/18 for i != i'."""
    if i == i2:
        raise ValueError("separation is only claimed for distinct indices")
    d = l1_distance(witness_g_i_delta(i, delta), witness_g_i_delta(i2, delta2), grid)
    return d.value > (delta + delta2) / 18


@dataclass
class PackingReport:
    eps: float
    indices: list
    distances: list = field(default_factory=list)
    min_separation: float = math.inf
    failures: list = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return not self.failures

    def rows(self):
        return [(i, self.eps, d) for i, d in zip(self.indices, self.distances)]


def packing_diagnostic(eps: float, count: int, grid: int = DEFAULT_GRID) -> PackingReport:
    """Witnesses g_{i,eps} for the ``count`` smallest i > log2(1/eps).

    Certifies that each lies within eps of g and that every pair is at least
    eps/9 apart: an eps-ball around g holding ``count`` well separated points.
    """
    if not 0.0 < eps < 0.25:
        raise ValueError("eps must lie in (0, 1/4)")
    if count < 0:
        raise ValueError("count must be non-negative")
    first = math.floor(math.log2(1.0 / eps)) + 1
    indices = list(range(first, first + count))
    rep = PackingReport(eps, indices)
    sections = [witness_g()] + [witness_g_i_delta(i, eps) for i in indices]
    dist = pairwise_l1(sections, grid)
    for a, i in enumerate(indices):
        d = float(dist[0, a + 1])
        rep.distances.append(d)
        if d > eps:
            rep.failures.append(f"g_{i} is {d:.6g} from g, more than eps")
    for a in range(count):
        for b in range(a + 1, count):
            d = float(dist[a + 1, b + 1])
            rep.min_separation = min(rep.min_separation, d)
            if d < eps / 9:
                rep.failures.append(f"g_{indices[a]} and g_{indices[b]} only {d:.6g} apart")
    return rep
