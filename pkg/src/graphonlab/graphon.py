"""Evaluable graphon kernels.

Every graphon exposes a vectorised, symmetric :meth:`Graphon.eval` and an
optional :class:`~graphonlab.graphs.PartitionSpec` describing its parts.  Part
layouts are left-to-right intervals; inside a part, kernels are written in
part-local coordinates (fraction of the part).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .estimate import Estimate
from .graphs import PartitionSpec
from .integrate import integrate

# ---------------------------------------------------------------------------
# helpers


def _coords(x, name="x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError(f"{name} coordinates must lie in [0, 1]")
    return x


def dyadic_index(t):
    """Smallest integer k >= 1 with t + 2**-k < 1, for t in [0, 1).

    Works elementwise on arrays.  Computed from the binary exponent of
    ``1 - t`` so that the boundary points ``1 - 2**-k`` land exactly.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr >= 1.0):
        raise ValueError("dyadic index is defined on [0, 1) only")
    mant, expo = np.frexp(1.0 - t_arr)
    # 1 - t = mant * 2**expo with mant in [0.5, 1)
    k = np.where(mant == 0.5, 2 - expo, 1 - expo)
    return int(k) if np.ndim(t) == 0 else k.astype(np.int64)


def _dyadic_index_unchecked(t: np.ndarray) -> np.ndarray:
    mant, expo = np.frexp(1.0 - np.minimum(t, np.nextafter(1.0, 0.0)))
    return np.where(mant == 0.5, 2 - expo, 1 - expo).astype(np.int64)


def _even_digit(r: np.ndarray, k: np.ndarray) -> np.ndarray:
    """True where floor(r * 2**k) is even (k is clipped to float range)."""
    scaled = np.ldexp(r, np.minimum(k, 1000).astype(np.int32))
    return np.floor(scaled) % 2 == 0


# ---------------------------------------------------------------------------
# base class


class Graphon:
    """A symmetric measurable kernel [0,1]^2 -> [0,1]."""

    kind = "abstract"
    is_step = False

    def __init__(self, partition: PartitionSpec | None = None):
        self.partition = partition

    def eval(self, x, y):
        x, y = np.broadcast_arrays(_coords(x, "x"), _coords(y, "y"))
        out = self._eval(np.asarray(x), np.asarray(y))
        return float(out) if np.ndim(out) == 0 else out

    __call__ = eval

    def _eval(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError(f"{type(self).__name__} has no serial form")

    def __repr__(self):
        return f"<{type(self).__name__} kind={self.kind}>"


class StepGraphon(Graphon):
    """Piecewise constant kernel on a finite partition of [0,1]."""

    kind = "step"
    is_step = True

    def __init__(self, sizes: Sequence[float], matrix, names=None):
        m = np.array(matrix, dtype=float)
        k = len(sizes)
        if m.shape != (k, k):
            raise ValueError(f"value matrix must be {k}x{k}")
        if not np.array_equal(m, m.T):
            raise ValueError("value matrix must be symmetric")
        if np.any(m < 0) or np.any(m > 1):
            raise ValueError("values must lie in [0, 1]")
        sizes = tuple(float(a) for a in sizes)
        degrees = tuple(float(v) for v in m @ np.asarray(sizes))
        if len(set(degrees)) != len(degrees):
            degrees = None
        super().__init__(PartitionSpec(sizes, degrees, names))
        self.matrix = m

    def _eval(self, x, y):
        i, _ = self.partition.locate(x)
        j, _ = self.partition.locate(y)
        return self.matrix[i, j]

    def to_dict(self):
        d = {"kind": "step", "sizes": list(self.partition.sizes), "matrix": self.matrix.tolist()}
        if self.partition.names:
            d["names"] = list(self.partition.names)
        return d


class ConstantGraphon(StepGraphon):
    kind = "constant"

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        super().__init__([1.0], [[p]])
        self.p = float(p)

    def _eval(self, x, y):
        shape = np.broadcast_shapes(np.shape(x), np.shape(y))
        return np.full(shape, self.p) if shape else np.float64(self.p)

    def to_dict(self):
        return {"kind": "constant", "p": self.p}


class GridGraphon(StepGraphon):
    """Step graphon on an n x n uniform grid, e.g. a sampled matrix."""

    kind = "grid"

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        n = m.shape[0]
        super().__init__([1.0 / n] * n, m)

    def _eval(self, x, y):
        n = self.matrix.shape[0]
        i = np.minimum((x * n).astype(np.int64), n - 1)
        j = np.minimum((y * n).astype(np.int64), n - 1)
        return self.matrix[i, j]

    def to_dict(self):
        return {"kind": "grid", "matrix": self.matrix.tolist()}


class HalfGraphon(Graphon):
    """1 where x + y >= 1, else 0."""

    kind = "half"

    def _eval(self, x, y):
        return (x + y >= 1.0).astype(float)

    def to_dict(self):
        return {"kind": "half"}


# ---------------------------------------------------------------------------
# the Rademacher graphon

RADEMACHER_PARTS = ("A", "A'", "B", "B'", "B''", "C", "C'", "D")
A, A1, B, B1, B2, C, C1, D = range(8)


@dataclass(frozen=True)
class RademacherLayout:
    """Left-to-right placement of the eight parts; every part but C has width a."""

    a: float = 1.0 / 9.0
    names: tuple = RADEMACHER_PARTS
    widths: tuple = (1, 1, 1, 1, 1, 2, 1, 1)
    degrees: tuple = (3.0, 3.2, 1.0, 1.2, 1.4, 1.5, 1.8, 1.6)

    def spec(self) -> PartitionSpec:
        return PartitionSpec(tuple(w / 9.0 for w in self.widths),
                             tuple(d / 9.0 for d in self.degrees), self.names)

    def point(self, part: str, frac: float) -> float:
        """Global coordinate of the point at fraction ``frac`` of ``part``."""
        lo, hi = self.spec().interval(part)
        return lo + frac * (hi - lo)


class RademacherGraphon(Graphon):
    kind = "rademacher"

    def __init__(self):
        self.layout = RademacherLayout()
        super().__init__(self.layout.spec())

    def _eval(self, x, y):
        pi, ui = self.partition.locate(x)
        pj, uj = self.partition.locate(y)
        # order each pair so that part(p) <= part(q); every rule is written that way
        swap = pi > pj
        p, q = np.where(swap, pj, pi), np.where(swap, pi, pj)
        u, v = np.where(swap, uj, ui), np.where(swap, ui, uj)
        out = np.zeros(np.shape(u))

        def rule(mask, value):
            np.copyto(out, value, where=mask)

        ku = _dyadic_index_unchecked(u)
        kv = _dyadic_index_unchecked(v)
        in_pq = lambda a, b: (p == a) & (q == b)

        rule(in_pq(A, A) & (ku != kv), 1.0)
        rule(in_pq(A1, A1) & (ku != kv), 1.0)
        rule(in_pq(A, A1) & (ku == kv), 1.0)
        rule(in_pq(A, B) & (u + v <= 1.0), 1.0)
        rule(in_pq(A, B2) & (u + v >= 1.0), 1.0)
        rule(in_pq(A1, B1) & (u + v <= 1.0), 1.0)
        rule(in_pq(A1, B2) & (v <= u), 1.0)
        rule(in_pq(B, B) & (u + v >= 1.0), 1.0)
        rule(in_pq(B1, B1) & (u + v >= 1.0), 1.0)
        rule(in_pq(A, C) & _even_digit(v, ku), 1.0)
        # A' vertices carry the weight (1 - 2^-k - u) 2^k, falling from 1 to 0 in each block
        weight = (1.0 - np.ldexp(1.0, -np.minimum(ku, 1000).astype(np.int32)) - u) \
            * np.ldexp(1.0, np.minimum(ku, 1000).astype(np.int32))
        rule(in_pq(A1, C1) & (weight + v <= 1.0), 1.0)
        a1c = in_pq(A1, C) & _even_digit(v, ku)
        np.copyto(out, weight, where=a1c)
        rule(in_pq(C, C) & (u + v >= 1.0), 0.75)
        rule(in_pq(C1, C1) & (u + v >= 1.0), 1.0)
        rule(in_pq(A1, D) | in_pq(B1, D), 0.2)
        rule(in_pq(B2, D), 0.4)
        rule(in_pq(C1, D), 0.8)
        return out

    def to_dict(self):
        return {"kind": "rademacher"}


# ---------------------------------------------------------------------------
# measure preserving maps


@dataclass(frozen=True)
class MeasurePreservingMap:
    """A measure preserving self-map of [0,1].

    ``kind`` is ``identity``, ``reflect`` (x -> 1 - x), ``doubling``
    (x -> 2x mod 1) or ``exchange``: an interval exchange that cuts [0,1] into
    pieces of the given ``lengths``, lays them out in ``order`` and reverses
    the pieces flagged in ``flips``.
    """

    kind: str = "identity"
    lengths: tuple = ()
    order: tuple = ()
    flips: tuple = ()

    def __post_init__(self):
        if self.kind not in ("identity", "reflect", "doubling", "exchange"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.kind == "exchange":
            if abs(math.fsum(self.lengths) - 1.0) > 1e-12 or min(self.lengths) <= 0:
                raise ValueError("exchange lengths must be positive and sum to 1")
            if sorted(self.order) != list(range(len(self.lengths))):
                raise ValueError("order must be a permutation of the pieces")
            if not self.flips:
                object.__setattr__(self, "flips", (False,) * len(self.lengths))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            return x
        if self.kind == "reflect":
            return 1.0 - x
        if self.kind == "doubling":
            return np.where(x >= 0.5, 2.0 * x - 1.0, 2.0 * x)
        lengths = np.asarray(self.lengths)
        src_start = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
        dst_start = np.zeros(len(lengths))
        pos = 0.0
        for piece in self.order:
            dst_start[piece] = pos
            pos += lengths[piece]
        bounds = np.cumsum(lengths)[:-1]
        idx = np.searchsorted(bounds, x, side="right")
        off = x - src_start[idx]
        flips = np.asarray(self.flips, dtype=bool)
        off = np.where(flips[idx], lengths[idx] - off, off)
        return np.clip(dst_start[idx] + off, 0.0, 1.0)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "exchange":
            d.update(lengths=list(self.lengths), order=list(self.order), flips=list(self.flips))
        return d


def deinterleave(s, d: int):
    """Split the binary digits of s in [0,1] round-robin into d coordinates.

    Bit j of coordinate i is bit ``i + j*d`` of the input (1-based).  The map
    [0,1] -> [0,1]^d is measure preserving off a null set.
    """
    if d < 1:
        raise ValueError("d must be positive")
    s = np.asarray(s, dtype=float)
    per = max(1, 60 // d)
    total = per * d
    m = np.floor(np.clip(s, 0.0, np.nextafter(1.0, 0.0)) * float(1 << total)).astype(np.uint64)
    out = np.zeros(s.shape + (d,))
    for i in range(d):
        acc = np.zeros(s.shape)
        for j in range(per):
            t = i + j * d  # 0-based input digit
            bit = (m >> np.uint64(total - 1 - t)) & np.uint64(1)
            acc += bit.astype(float) * 2.0 ** -(j + 1)
        out[..., i] = acc
    return out


class NorineGraphon(Graphon):
    """W_d: parts A, B_1..B_2d, C of equal size 1/(2d+2)."""

    kind = "norine"

    def __init__(self, d: int):
        if int(d) < 1:
            raise ValueError("d must be a positive integer")
        self.d = d = int(d)
        k = 2 * d + 2
        b = 1.0 / k
        names = ("A",) + tuple(f"B{i}" for i in range(1, 2 * d + 1)) + ("C",)
        degrees = [d * b] + [b * (1 + i / (4 * d)) for i in range(1, 2 * d + 1)] \
            + [b * (2 * d + 1) / 4]
        if len(set(np.round(degrees, 15))) != k:
            degrees = None
        super().__init__(PartitionSpec((b,) * k, degrees, names))

    def _eval(self, x, y):
        d = self.d
        k = 2 * d + 2
        pi, ui = self.partition.locate(x)
        pj, uj = self.partition.locate(y)
        swap = pi > pj
        p, q = np.where(swap, pj, pi), np.where(swap, pi, pj)
        u, v = np.where(swap, uj, ui), np.where(swap, ui, uj)
        out = np.zeros(np.shape(u))
        is_b = lambda t: (t >= 1) & (t <= 2 * d)
        np.copyto(out, 1.0, where=is_b(p) & (p == q) & (u + v >= 1.0))
        cross = is_b(p) & (q == k - 1)
        np.copyto(out, p / (4.0 * d), where=cross)
        a_rows = (p == 0) & is_b(q)
        if np.any(a_rows):
            phi = deinterleave(u[a_rows], d)
            qi = q[a_rows]
            coord = np.where(qi <= d, qi - 1, qi - d - 1)
            val = np.take_along_axis(phi, coord[:, None], axis=1)[:, 0]
            val = np.where(qi <= d, val, 1.0 - val)
            out[a_rows] = (val >= v[a_rows]).astype(float)
        return out

    def to_dict(self):
        return {"kind": "norine", "d": self.d}


class TransformedGraphon(Graphon):
    """W^phi(x, y) = W(phi(x), phi(y))."""

    kind = "transformed"

    def __init__(self, inner: Graphon, phi: MeasurePreservingMap):
        super().__init__(inner.partition if phi.kind == "identity" else None)
        self.inner, self.phi = inner, phi

    def _eval(self, x, y):
        return self.inner._eval(self.phi(x), self.phi(y))

    def to_dict(self):
        return {"kind": "transformed", "inner": self.inner.to_dict(), "map": self.phi.to_dict()}


class BlockModifiedGraphon(Graphon):
    """A partitioned graphon with some part-pair blocks shifted or overwritten.

    ``changes`` holds ``(part, part, op, value)`` with ``op`` in
    ``{"add", "set"}``; results are clipped to [0, 1].
    """

    kind = "modified"

    def __init__(self, inner: Graphon, changes):
        if inner.partition is None:
            raise ValueError("block modifications need a partitioned graphon")
        spec = inner.partition
        super().__init__(PartitionSpec(spec.sizes, None, spec.names))
        self.inner = inner
        self.changes = tuple((spec.index(p), spec.index(q), op, float(val))
                             for p, q, op, val in changes)
        for _, _, op, _ in self.changes:
            if op not in ("add", "set"):
                raise ValueError(f"unknown block operation {op!r}")

    def _eval(self, x, y):
        out = np.array(self.inner._eval(x, y), dtype=float)
        pi, _ = self.partition.locate(x)
        pj, _ = self.partition.locate(y)
        for p, q, op, val in self.changes:
            mask = ((pi == p) & (pj == q)) | ((pi == q) & (pj == p))
            if op == "add":
                out = np.where(mask, out + val, out)
            else:
                out = np.where(mask, val, out)
        return np.clip(out, 0.0, 1.0)

    def to_dict(self):
        names = self.partition.names
        label = (lambda i: names[i]) if names else (lambda i: i)
        return {"kind": "modified", "inner": self.inner.to_dict(),
                "blocks": [[label(p), label(q), op, v] for p, q, op, v in self.changes]}


# ---------------------------------------------------------------------------
# constructors


def constant_graphon(p: float) -> Graphon:
    return ConstantGraphon(p)


def step_graphon(sizes, matrix, names=None) -> Graphon:
    return StepGraphon(sizes, matrix, names)


def half_graphon() -> Graphon:
    return HalfGraphon()


def rademacher_graphon() -> Graphon:
    return RademacherGraphon()


def norine_graphon(d: int) -> Graphon:
    return NorineGraphon(d)


def grid_graphon(matrix) -> Graphon:
    return GridGraphon(matrix)


def apply_measure_preserving(w: Graphon, phi: MeasurePreservingMap) -> Graphon:
    return TransformedGraphon(w, phi)


def modify_blocks(w: Graphon, changes) -> Graphon:
    return BlockModifiedGraphon(w, changes)


# ---------------------------------------------------------------------------
# sections and degrees


@dataclass(frozen=True)
class SectionFunction:
    """A function [0,1] -> [0,1]: a graphon slice or an explicit witness.

    ``breakpoints`` lists known discontinuities; ``layout`` is the partition
    whose boundaries grids should respect.
    """

    fn: Callable = field(repr=False)
    provenance: str = "explicit"
    breakpoints: tuple = ()
    layout: PartitionSpec | None = field(default=None, repr=False)

    def __call__(self, y):
        y = _coords(y, "y")
        out = np.asarray(self.fn(y), dtype=float)
        return np.broadcast_to(out, y.shape).copy() if out.shape != y.shape else out


def section(w: Graphon, x: float) -> SectionFunction:
    """f_x(y) = W(x, y)."""
    x = float(_coords(x))
    return SectionFunction(lambda y: w.eval(np.full(np.shape(y), x), y),
                           f"section x={x!r}", (), w.partition)


def degree(w: Graphon, x: float, method: str = "quad", budget: int = 1 << 16,
           seed=None) -> Estimate:
    """Degree of vertex x: the integral of W(x, .) over [0,1]."""
    x = float(_coords(x))
    if method == "exact" and not w.is_step:
        raise ValueError("exact degrees need a step graphon")
    res = integrate(lambda ys: w.eval(np.full(len(ys), x), ys[:, 0]), [None],
                    w.partition, method, budget, seed, key=(11,))
    return Estimate(float(res.value[0]), float(res.stderr[0]), res.n, res.method)


# ---------------------------------------------------------------------------
# spec files


def graphon_from_dict(spec: dict, base_dir: Path | None = None) -> Graphon:
    kind = spec.get("kind")
    if kind == "constant":
        return constant_graphon(float(spec["p"]))
    if kind == "step":
        return step_graphon(spec["sizes"], spec["matrix"], spec.get("names"))
    if kind == "half":
        return half_graphon()
    if kind == "rademacher":
        return rademacher_graphon()
    if kind == "norine":
        return norine_graphon(int(spec["d"]))
    if kind == "grid":
        if "matrix" in spec:
            return grid_graphon(spec["matrix"])
        path = Path(spec["csv"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        with open(path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
        return grid_graphon(rows)
    if kind == "transformed":
        inner = graphon_from_dict(spec["inner"], base_dir)
        m = dict(spec["map"])
        phi = MeasurePreservingMap(m.pop("kind"), tuple(m.get("lengths", ())),
                                   tuple(m.get("order", ())), tuple(m.get("flips", ())))
        return apply_measure_preserving(inner, phi)
    if kind == "modified":
        inner = graphon_from_dict(spec["inner"], base_dir)
        return modify_blocks(inner, [tuple(b) for b in spec["blocks"]])
    raise ValueError(f"unknown graphon kind {kind!r}")


def parse_builtin(ref: str) -> Graphon:
    """``builtin:NAME[:params]`` for the named graphons."""
    fields = ref.split(":")[1:]
    if not fields:
        raise ValueError("empty builtin reference")
    name, params = fields[0], fields[1:]
    if name == "rademacher" and not params:
        return rademacher_graphon()
    if name == "half" and not params:
        return half_graphon()
    if name == "constant" and len(params) == 1:
        return constant_graphon(float(params[0]))
    if name == "norine" and len(params) == 1:
        return norine_graphon(int(params[0]))
    raise ValueError(f"unknown builtin graphon {ref!r}")


def load_graphon(ref: str) -> Graphon:
    if ref.startswith("builtin:"):
        return parse_builtin(ref)
    path = Path(ref)
    with open(path) as fh:
        return graphon_from_dict(json.load(fh), path.parent)
