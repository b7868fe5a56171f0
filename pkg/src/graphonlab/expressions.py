"""Density expressions, constraints, and their compilation.

Expressions are immutable trees built from real constants and graph terms with
``+`` and ``*`` (subtraction is multiplication by -1).  A rooted expression has
mutually compatible rooted graph terms; wrapping it in :class:`Unlabel` gives
an ordinary expression.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as iproduct

import numpy as np

from .estimate import Estimate
from .graphon import Graphon
from .graphs import Graph, PartitionSpec, automorphism_count

# ---------------------------------------------------------------------------
# expression nodes


class Expr:
    def __add__(self, other):
        return Sum(self, as_expr(other))

    def __radd__(self, other):
        return Sum(as_expr(other), self)

    def __mul__(self, other):
        return Product(self, as_expr(other))

    def __rmul__(self, other):
        return Product(as_expr(other), self)

    def __neg__(self):
        return Product(Const(-1.0), self)

    def __sub__(self, other):
        return Sum(self, -as_expr(other))

    def __rsub__(self, other):
        return Sum(as_expr(other), -self)


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __repr__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Term(Expr):
    graph: Graph

    def __repr__(self):
        return f"[{self.graph!r}]"


@dataclass(frozen=True)
class Sum(Expr):
    left: Expr
    right: Expr

    def __repr__(self):
        return f"({self.left!r} + {self.right!r})"


@dataclass(frozen=True)
class Product(Expr):
    left: Expr
    right: Expr

    def __repr__(self):
        return f"{self.left!r}·{self.right!r}"


@dataclass(frozen=True)
class Unlabel(Expr):
    inner: Expr

    def __repr__(self):
        return f"⟦{self.inner!r}⟧"


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, Graph):
        return Term(x)
    if isinstance(x, (int, float, np.floating, np.integer)):
        return Const(float(x))
    raise TypeError(f"cannot build a density expression from {type(x).__name__}")


def total(items) -> Expr:
    items = [as_expr(i) for i in items]
    if not items:
        return Const(0.0)
    out = items[0]
    for it in items[1:]:
        out = Sum(out, it)
    return out


def prod(items) -> Expr:
    items = [as_expr(i) for i in items]
    if not items:
        return Const(1.0)
    out = items[0]
    for it in items[1:]:
        out = Product(out, it)
    return out


# ---------------------------------------------------------------------------
# structure queries


def terms(expr: Expr, *, through_unlabel: bool = False) -> list[Graph]:
    if isinstance(expr, Term):
        return [expr.graph]
    if isinstance(expr, (Sum, Product)):
        return terms(expr.left, through_unlabel=through_unlabel) + \
            terms(expr.right, through_unlabel=through_unlabel)
    if isinstance(expr, Unlabel) and through_unlabel:
        return terms(expr.inner, through_unlabel=True)
    return []


def rooted_leaves(expr: Expr) -> list[Graph]:
    return [g for g in terms(expr) if g.is_rooted]


def is_rooted(expr: Expr) -> bool:
    return bool(rooted_leaves(as_expr(expr)))


def is_decorated(expr: Expr) -> bool:
    return any(g.is_decorated for g in terms(as_expr(expr), through_unlabel=True))


class IncompatibleError(ValueError):
    pass


def _root_signature(g: Graph):
    h0 = g.root_graph()
    return h0.order, h0.edges, h0.parts


def check_compatible(graphs) -> None:
    """All rooted graphs must share the labelled root graph (and root parts)."""
    graphs = list(graphs)
    if not graphs:
        return
    if any(not g.is_rooted for g in graphs) and any(g.is_rooted for g in graphs):
        raise IncompatibleError("rooted and unrooted graphs mixed in one expression")
    sig = _root_signature(graphs[0])
    for g in graphs[1:]:
        if _root_signature(g) != sig:
            raise IncompatibleError(f"{g!r} is not compatible with {graphs[0]!r}")


def ordinary_subexpressions(expr: Expr) -> list[Expr]:
    """Maximal subtrees of a rooted expression that contain no rooted term but do
    need a graphon to evaluate (unrooted graph terms or unlabelings)."""
    if isinstance(expr, Const):
        return []
    if not is_rooted(expr):
        return [expr]
    if isinstance(expr, (Sum, Product)):
        return ordinary_subexpressions(expr.left) + ordinary_subexpressions(expr.right)
    return []


def evaluate_pointwise(expr: Expr, leaf, consts: dict):
    """Evaluate a rooted expression given ``leaf(graph) -> array`` at fixed roots."""
    if isinstance(expr, Const):
        return expr.value
    if expr in consts:
        return consts[expr]
    if isinstance(expr, Term):
        return leaf(expr.graph)
    if isinstance(expr, Sum):
        return evaluate_pointwise(expr.left, leaf, consts) + evaluate_pointwise(expr.right, leaf, consts)
    if isinstance(expr, Product):
        return evaluate_pointwise(expr.left, leaf, consts) * evaluate_pointwise(expr.right, leaf, consts)
    raise TypeError(f"cannot evaluate {expr!r} pointwise")


# ---------------------------------------------------------------------------
# evaluation


def _leaf_seed(seed, path: int):
    from .rng import default_seed

    base = default_seed() if seed is None else int(seed)
    return int(np.random.SeedSequence(base, spawn_key=(97, path)).generate_state(1)[0])


def evaluate_expression(expr, w: Graphon, method: str = "auto", budget=None, seed=None,
                        workers: int = 1, inner=None, _path: int = 1) -> Estimate:
    """Numeric value of an expression in W, with errors combined in quadrature.

    A rooted expression evaluates to its expectation under the root measure.
    Independent subtrees get independent random streams.
    """
    from . import density as dn

    expr = as_expr(expr)
    if is_rooted(expr):
        return dn.rooted_expectation(expr, w, method, budget, _leaf_seed(seed, _path), inner, workers)
    if isinstance(expr, Const):
        return Estimate.const(expr.value)
    if isinstance(expr, Term):
        return dn.graphon_density(expr.graph, w, method, budget, _leaf_seed(seed, _path), workers)
    if isinstance(expr, Unlabel):
        if not is_rooted(expr.inner):
            return evaluate_expression(expr.inner, w, method, budget, seed, workers, inner,
                                       2 * _path)
        return dn.unlabel(expr.inner, w, method, budget, _leaf_seed(seed, _path), inner, workers)
    left = evaluate_expression(expr.left, w, method, budget, seed, workers, inner, 2 * _path)
    right = evaluate_expression(expr.right, w, method, budget, seed, workers, inner, 2 * _path + 1)
    return left + right if isinstance(expr, Sum) else left * right


# ---------------------------------------------------------------------------
# constraints


@dataclass(frozen=True)
class Constraint:
    lhs: Expr
    rhs: Expr
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "lhs", as_expr(self.lhs))
        object.__setattr__(self, "rhs", as_expr(self.rhs))
        leaves = rooted_leaves(self.lhs) + rooted_leaves(self.rhs)
        check_compatible(leaves)

    @property
    def kind(self) -> str:
        if is_rooted(self.lhs) or is_rooted(self.rhs):
            return "rooted"
        if is_decorated(self.lhs) or is_decorated(self.rhs):
            return "decorated"
        return "ordinary"


def compile_rooted_constraint(c: Constraint) -> Constraint:
    """D = D' (rooted) becomes the ordinary ⟦(D - D')·(D - D')⟧ = 0."""
    if c.kind != "rooted":
        raise ValueError("constraint is not rooted")
    diff = Sum(c.lhs, Product(Const(-1.0), c.rhs))
    return Constraint(Unlabel(Product(diff, diff)), Const(0.0), c.name)


def neighbour_sum(h: Graph, i: int) -> Expr:
    """Sum of all (n+1)-vertex rooted graphs whose n roots induce h (plain) and
    whose single non-root is adjacent to root i: its value is the degree of root i."""
    n = h.order
    base = set(h.plain().edges)
    others = [j for j in range(n) if j != i]
    graphs = []
    for pattern in iproduct((False, True), repeat=len(others)):
        edges = base | {(i, n)} | {(j, n) for j, on in zip(others, pattern) if on}
        graphs.append(Graph.from_edges(n + 1, edges, range(n)))
    return total(Term(g) for g in graphs)


def compile_decorated(h: Graph, spec: PartitionSpec) -> Expr:
    """Rewrite the density of a decorated unrooted graph with plain graphs only.

    Each root i is tested for membership in its part by a polynomial in its
    degree that is 1 at the part's degree and 0 at all other part degrees.
    """
    if h.is_rooted:
        raise ValueError("compile_decorated expects an unrooted graph")
    if h.parts is None:
        raise ValueError("graph carries no decoration")
    if spec.degrees is None:
        raise ValueError("partition spec needs part degrees")
    d = spec.degrees
    factors = []
    for i, label in enumerate(h.parts):
        li = spec.index(label)
        hi = neighbour_sum(h, i)
        for j in range(spec.k):
            if j != li:
                factors.append(Product(Sum(hi, Const(-d[j])), Const(1.0 / (d[li] - d[j]))))
    scale = math.factorial(h.order) / automorphism_count(h.plain())
    return Product(Const(scale), Unlabel(prod(factors)))


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class Verdict:
    status: str
    residual: Estimate
    tol: float

    @property
    def satisfied(self) -> bool:
        return self.status == "satisfied"


def verdict(residual: Estimate, tol: float) -> Verdict:
    r, s = abs(residual.value), residual.stderr
    if r <= max(tol, 3.0 * s):
        status = "satisfied"
    elif r > tol + 3.0 * s:
        status = "violated"
    else:
        status = "inconclusive"
    return Verdict(status, residual, tol)


def default_tol(method: str, rooted: bool = False) -> float:
    """1e-3 for deterministic methods; Monte Carlo relies on the 3 stderr rule,
    except that a compiled rooted constraint (a nonnegative square whose inner
    integrals are deterministic) gets the 1e-4 quadrature floor."""
    if method != "mc":
        return 1e-3
    return 1e-4 if rooted else 0.0


def check_constraint(c: Constraint, w: Graphon, tol: float | None = None, method: str = "auto",
                     budget=None, seed=None, workers: int = 1, inner=None) -> Verdict:
    """Satisfied iff |lhs - rhs| <= max(tol, 3 stderr); violated iff it exceeds
    tol + 3 stderr; inconclusive in between.  Rooted constraints are compiled first."""
    rooted = c.kind == "rooted"
    if rooted:
        c = compile_rooted_constraint(c)
    if tol is None:
        tol = default_tol(method, rooted)
    lhs = evaluate_expression(c.lhs, w, method, budget, seed, workers, inner, 2)
    rhs = evaluate_expression(c.rhs, w, method, budget, seed, workers, inner, 3)
    return verdict(lhs - rhs, tol)


# ---------------------------------------------------------------------------
# constraint files
#
# EXPR := number | {"graph": GRAPH} | {"graph_file": path} | {"sum": [EXPR...]}
#       | {"product": [EXPR...]} | {"unlabel": EXPR}
# GRAPH := {"n": int, "edges": [[u, v]...], "roots": [...], "parts": [...],
#           "free": [[u, v]...]}
# A pair listed under "free" is summed over both adjacency choices.


def graph_terms_from_dict(spec: dict) -> Expr:
    n = int(spec["n"])
    edges = {tuple(sorted(map(int, e))) for e in spec.get("edges", [])}
    free = [tuple(sorted(map(int, e))) for e in spec.get("free", [])]
    if set(free) & edges:
        raise ValueError("a pair cannot be both an edge and free")
    roots = tuple(int(r) for r in spec.get("roots", []))
    parts = spec.get("parts")
    parts = tuple(parts) if parts is not None else None
    graphs = []
    for pattern in iproduct((False, True), repeat=len(free)):
        chosen = edges | {p for p, on in zip(free, pattern) if on}
        graphs.append(Term(Graph.from_edges(n, chosen, roots, parts)))
    return total(graphs)


def expr_from_dict(node, base_dir=None) -> Expr:
    from pathlib import Path

    from .graphs import load_graph

    if isinstance(node, (int, float)) and not isinstance(node, bool):
        return Const(float(node))
    if not isinstance(node, dict) or len(node) != 1:
        raise ValueError(f"malformed expression node {node!r}")
    (key, val), = node.items()
    if key == "graph":
        return graph_terms_from_dict(val)
    if key == "graph_file":
        path = Path(val)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        return Term(load_graph(path))
    if key == "sum":
        return total(expr_from_dict(v, base_dir) for v in val)
    if key == "product":
        return prod(expr_from_dict(v, base_dir) for v in val)
    if key == "unlabel":
        return Unlabel(expr_from_dict(val, base_dir))
    raise ValueError(f"unknown expression key {key!r}")


def constraint_from_dict(entry: dict, base_dir=None) -> tuple[Constraint, float | None]:
    c = Constraint(expr_from_dict(entry["lhs"], base_dir), expr_from_dict(entry.get("rhs", 0), base_dir),
                   str(entry.get("name", "")))
    tol = entry.get("tol")
    return c, (None if tol is None else float(tol))
