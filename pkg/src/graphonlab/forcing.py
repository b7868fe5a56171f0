"""Constraint families for partitioned graphons and numeric checks of the
exact identities satisfied by the Rademacher graphon."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import graphon_density
from .estimate import Estimate
from .expressions import Const, Constraint, Term, Unlabel, prod, verdict
from .graphon import RADEMACHER_PARTS, Graphon, RademacherLayout, degree
from .graphs import Graph, PartitionSpec, isomorphism_classes
from .integrate import axis_nodes

ROOTED_EDGE = Graph.from_edges(2, [(0, 1)], roots=[0])

QUAD_TOL = 1e-4


# ---------------------------------------------------------------------------
# generators


def partition_constraints(spec: PartitionSpec, normalize: bool = True) -> list[Constraint]:
    """Constraints forcing parts of sizes ``spec.sizes`` with degrees ``spec.degrees``.

    The literal forms are the degree polynomial ``prod_i (e1 - d_i) = 0`` and,
    for every j, ``unlabel(prod_{i != j} (e1 - d_i)) = a_j prod_{i != j} (d_j - d_i)``.
    With ``normalize`` each factor is rescaled (by the degree range, and by
    ``d_j - d_i`` in the second family) so that values are of order one; the
    sets of graphons satisfying them are the same.
    """
    if spec.degrees is None:
        raise ValueError("partition spec needs part degrees")
    d, a, k = spec.degrees, spec.sizes, spec.k
    e1 = Term(ROOTED_EDGE)
    span = (max(d) - min(d)) if (normalize and k > 1) else 1.0
    first = prod([(e1 - di) * (1.0 / span) for di in d])
    out = [Constraint(first, Const(0.0), "degrees take the part values")]
    for j in range(k):
        others = [i for i in range(k) if i != j]
        if normalize:
            body = prod([(e1 - d[i]) * (1.0 / (d[j] - d[i])) for i in others])
            target = a[j]
        else:
            body = prod([e1 - d[i] for i in others])
            target = a[j] * math.prod(d[j] - d[i] for i in others)
        name = spec.names[j] if spec.names else str(j)
        out.append(Constraint(Unlabel(body), Const(target), f"size of part {name}"))
    return out


def pseudorandom_constraints(part, other, p: float, spec: PartitionSpec) -> list[Constraint]:
    """Three rooted constraints forcing W = p between two distinct parts.

    Roots lie in ``part`` and the single non-root in ``other``.  The rooted
    densities integrate over ``other`` only, so they are divided by its size.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    i, j = spec.index(part), spec.index(other)
    if i == j:
        raise ValueError("the two parts must differ")
    li, lj = _label(spec, i), _label(spec, j)
    scale = 1.0 / spec.sizes[j]
    edge = Graph.from_edges(2, [(0, 1)], roots=[0], parts=(li, lj))
    triangle = Graph.from_edges(3, [(0, 1), (0, 2), (1, 2)], roots=[0, 1], parts=(li, li, lj))
    cherry = Graph.from_edges(3, [(0, 2), (1, 2)], roots=[0, 1], parts=(li, li, lj))
    return [
        Constraint(Term(edge) * scale, Const(p), f"{li}-{lj} edge"),
        Constraint(Term(triangle) * scale, Const(p * p), f"{li}-{lj} triangle"),
        Constraint(Term(cherry) * scale, Const(p * p), f"{li}-{lj} cherry"),
    ]


def gadget_constraints(base, part, spec: PartitionSpec) -> list[Constraint]:
    """Move constraints d(H, .) = v into one part: every vertex is decorated
    with the part and the target becomes a^|H| v."""
    i = spec.index(part)
    label, size = _label(spec, i), spec.sizes[i]
    out = []
    for h, value in base:
        dec = h.with_parts((label,) * h.order)
        out.append(Constraint(Term(dec), Const(size ** h.order * value), f"{label}: {h!r}"))
    return out


def scaled_half_base(p: float = 1.0) -> list[tuple[Graph, float]]:
    """Edge density and all 3-vertex induced densities of p times the half graphon.

    Homomorphism densities of p*W_half on 3 vertices are 1, p/2, p^2/3, p^3/4 for
    0..3 edges; induced densities follow by inclusion-exclusion.
    """
    t = [1.0, p / 2, p * p / 3, p ** 3 / 4]
    out = [(Graph.complete(2), p / 2)]
    for g in isomorphism_classes(3):
        e = len(g.edges)
        labelled = sum((-1) ** (f - e) * math.comb(3 - e, f - e) * t[f] for f in range(e, 4))
        copies = math.comb(3, e)
        out.append((g, copies * labelled))
    return out


WR_ZERO_PAIRS = (
    ("B''", "B''"), ("D", "D"),
    ("A", "C'"), ("A", "D"), ("A'", "B"), ("B", "B'"), ("B", "B''"), ("B", "C"),
    ("B", "C'"), ("B", "D"), ("B'", "B''"), ("B'", "C"), ("B'", "C'"), ("B''", "C"),
    ("B''", "C'"), ("C", "D"),
)

WR_HALF_PARTS = (("B", 1.0), ("B'", 1.0), ("C", 0.75), ("C'", 1.0))

WR_PSEUDORANDOM = (("A'", "D", 0.2), ("B'", "D", 0.2), ("B''", "D", 0.4), ("C'", "D", 0.8))


def zero_constraints_wr(spec: PartitionSpec | None = None) -> list[Constraint]:
    """Edge density zero inside B'' and D and between fourteen part pairs."""
    spec = spec or RademacherLayout().spec()
    for p, q in WR_ZERO_PAIRS:
        spec.index(p), spec.index(q)
    return [Constraint(Term(Graph.from_edges(2, [(0, 1)], parts=(p, q))), Const(0.0),
                       f"no edges {p}-{q}") for p, q in WR_ZERO_PAIRS]


def triangular_constraints_wr(spec: PartitionSpec | None = None) -> list[Constraint]:
    spec = spec or RademacherLayout().spec()
    out = []
    for part, p in WR_HALF_PARTS:
        out.extend(gadget_constraints(scaled_half_base(p), part, spec))
    return out


def pseudorandom_constraints_wr(spec: PartitionSpec | None = None) -> list[Constraint]:
    spec = spec or RademacherLayout().spec()
    out = []
    for part, other, p in WR_PSEUDORANDOM:
        out.extend(pseudorandom_constraints(part, other, p, spec))
    return out


def _label(spec: PartitionSpec, i: int):
    return spec.names[i] if spec.names else i


# ---------------------------------------------------------------------------
# identity report


@dataclass(frozen=True)
class IdentityRow:
    name: str
    target: float
    estimate: Estimate
    tol: float

    @property
    def verdict(self) -> str:
        return verdict(self.estimate - self.target, self.tol).status


@dataclass
class IdentityReport:
    rows: list = field(default_factory=list)

    @property
    def all_satisfied(self) -> bool:
        return all(r.verdict == "satisfied" for r in self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def by_name(self, name: str) -> IdentityRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)


def _nodes(w: Graphon, part: str, resolution: int):
    """Part-aligned midpoint grid on one part: (global nodes, local fractions, weights)."""
    spec = w.partition
    i = spec.index(part)
    y, wt = axis_nodes(spec, i, resolution)
    lo, hi = spec.interval(i)
    return y, (y - lo) / (hi - lo), wt


def _restricted(w: Graphon, x: float, part: str, resolution: int, mask=None, power=1):
    """∫ over ``part`` of W(x, y)^power, optionally times mask(local fraction)."""
    y, frac, wt = _nodes(w, part, resolution)
    vals = w._eval(np.full(len(y), x), y) ** power
    if mask is not None:
        vals = vals * mask(frac)
    return float(vals @ wt)


def _even_digit_mask(k: int):
    return lambda v: (np.floor(np.ldexp(v, k)) % 2 == 0).astype(float)


def _quad(value: float, n: int) -> Estimate:
    return Estimate(value, 0.0, n, "quadrature")


def wr_degree_targets() -> dict:
    lay = RademacherLayout()
    return {name: d * lay.a for name, d in zip(lay.names, lay.degrees)}


def verify_wr_identities(w: Graphon, budget: int = 1_000_000, seed=None, workers: int = 1,
                         blocks: int = 5, resolution: int = 1 << 16) -> IdentityReport:
    """Check the exact identities of the Rademacher graphon on ``w``.

    Quadrature rows use tolerance 1e-4; the Monte Carlo row uses 3 stderr at
    the given budget.  ``w`` must carry the eight-part layout.
    """
    spec = w.partition
    if spec is None or tuple(spec.names or ()) != RADEMACHER_PARTS:
        raise ValueError("graphon does not carry the Rademacher part layout")
    lay = RademacherLayout()
    a = lay.a
    rows = []
    # (i) part degrees at two sample vertices per part
    for name, target in wr_degree_targets().items():
        for frac in (0.3, 0.7):
            x = lay.point(name, frac)
            est = degree(w, x, "quad", resolution)
            rows.append(IdentityRow(f"degree {name} @{frac}", target, est, QUAD_TOL))
    # (ii) non-edges inside A
    ne = Graph.from_edges(2, [], parts=("A", "A"))
    rows.append(IdentityRow("non-edge density A-A (quad)", 1 / 243,
                            graphon_density(ne, w, "quad", 1 << 22, workers=workers), QUAD_TOL))
    rows.append(IdentityRow("non-edge density A-A (mc)", 1 / 243,
                            graphon_density(ne, w, "mc", budget, seed, workers), 0.0))
    for k in range(1, blocks + 1):
        mid = 1 - 1.5 * 2.0 ** -k
        x = lay.point("A", mid)
        # (iii) A' neighbourhood of a vertex of A in block k
        rows.append(IdentityRow(f"|N_A'(x)| x in A block {k}", 2.0 ** -k / 9,
                                _quad(_restricted(w, x, "A'", resolution), resolution), QUAD_TOL))
        # (vii) the A non-neighbourhood of block k is exactly J_k
        j_lo, j_hi = 1 - 2.0 ** (1 - k), 1 - 2.0 ** -k
        inside = _restricted(w, x, "A", resolution, lambda v: 1.0 * ((v >= j_lo) & (v < j_hi)))
        rows.append(IdentityRow(f"W on A x J_{k} is zero", 0.0,
                                _quad(inside, resolution), QUAD_TOL))
        rows.append(IdentityRow(f"|A \\ N_A(x)| x in A block {k}", (j_hi - j_lo) * a,
                                _quad(a - _restricted(w, x, "A", resolution), resolution), QUAD_TOL))
    # (iv) A neighbourhood of C vertices
    for s_frac in (0.0, 0.125, 0.3, 0.55, 0.9):
        x = lay.point("C", s_frac)
        offset = s_frac * 2 * a
        rows.append(IdentityRow(f"|N_A(x)| x in C @{s_frac}", a - offset / 2,
                                _quad(_restricted(w, x, "A", resolution), resolution), QUAD_TOL))
    # (v), (vi) the A'-C weights on I_k
    for k in range(1, blocks + 1):
        for t_rel in (0.2, 0.6):
            lo = 1 - 2.0 ** (1 - k)
            t = lo + t_rel * 2.0 ** -k
            x = lay.point("A'", t)
            v = (1 - 2.0 ** -k - t) * 2.0 ** k
            mask = _even_digit_mask(k)
            first = _restricted(w, x, "C", resolution, mask)
            second = math.sqrt(_restricted(w, x, "C", resolution, mask, power=2))
            rows.append(IdentityRow(f"first moment on I_{k} @t={t:.6g}", v / 9,
                                    _quad(first, resolution), QUAD_TOL))
            rows.append(IdentityRow(f"second moment on I_{k} @t={t:.6g}", v / 3,
                                    _quad(second, resolution), QUAD_TOL))
    return IdentityReport(rows)


def first_moment_on_block(w: Graphon, k: int, t: float, resolution: int = 1 << 16) -> float:
    """∫ over I_k of W(x', y) for x' at local fraction t of A'."""
    x = RademacherLayout().point("A'", t)
    return _restricted(w, x, "C", resolution, _even_digit_mask(k))


# ---------------------------------------------------------------------------
# constraint files


def family_constraints(entry: dict, spec: PartitionSpec) -> list[Constraint]:
    """Expand a ``{"family": ...}`` entry of a constraint file."""
    fam = entry["family"]
    if fam == "partition":
        return partition_constraints(spec, bool(entry.get("normalize", True)))
    if fam == "pseudorandom":
        return pseudorandom_constraints(entry["part"], entry["other"], float(entry["p"]), spec)
    if fam == "gadget":
        if entry.get("base", "half") != "half":
            raise ValueError("only the scaled half graphon base is built in")
        return gadget_constraints(scaled_half_base(float(entry.get("p", 1.0))), entry["part"], spec)
    if fam == "zero-wr":
        return zero_constraints_wr(spec)
    if fam == "triangular-wr":
        return triangular_constraints_wr(spec)
    if fam == "pseudorandom-wr":
        return pseudorandom_constraints_wr(spec)
    raise ValueError(f"unknown constraint family {fam!r}")


def load_constraint_file(path, spec: PartitionSpec | None = None):
    """Read a JSON constraint file; returns (spec, [(constraint, tol or None)])."""
    import json
    from pathlib import Path

    from .expressions import constraint_from_dict

    path = Path(path)
    data = json.loads(path.read_text())
    if "partition" in data:
        p = data["partition"]
        spec = PartitionSpec(tuple(p["sizes"]), tuple(p["degrees"]) if p.get("degrees") else None,
                             tuple(p["names"]) if p.get("names") else None)
    out = []
    for entry in data.get("constraints", []):
        if "family" in entry:
            if spec is None:
                raise ValueError("constraint families need a partition")
            tol = entry.get("tol")
            out.extend((c, tol) for c in family_constraints(entry, spec))
        else:
            out.append(constraint_from_dict(entry, path.parent))
    return spec, out
