"""Subgraph densities in graphons: plain, decorated and rooted, plus unlabeling.

Conventions (all integrals over [0,1] with Lebesgue measure):

* ``d(H, W) = |H|!/|Aut(H)| * ∫ prod_{edges} W prod_{non-edges} (1 - W)``.
* A decorated graph additionally requires vertex i to lie in its labelled
  part; the prefactor uses the automorphisms of the undecorated graph, so the
  decorated edge (A1, A2) has density ``∫_{A1}∫_{A2} W``.
* For a rooted graph with root graph H0 on m roots, ``c(x_1..x_m)`` is the
  probability that the roots induce H0 respecting labels (and lie in their
  labelled parts).  ``unlabel(D) = ∫ c(x) D(x) dx`` so that the expectation of
  D under the root measure is ``unlabel(D) / ∫ c``.
"""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .estimate import Estimate
from .graphon import Graphon
from .graphs import BRUTE_FORCE_CUTOFF, Graph, PartitionSpec, UnsupportedSizeError, automorphism_count
from .integrate import axis_nodes, integrate
from .rng import stream

DEFAULT_MC_BUDGET = 1_000_000
DEFAULT_QUAD_BUDGET = 1 << 20
DEFAULT_INNER = 1 << 14
ROW_CHUNK = 1 << 20


class DegenerateRootError(ValueError):
    """The chosen roots induce the root graph with probability density zero."""


class ZeroMassError(ValueError):
    """The root graph has (numerically) zero density, so the root measure is undefined."""


def _budget(method: str, budget) -> int:
    if budget is not None:
        return int(budget)
    return DEFAULT_MC_BUDGET if method == "mc" else DEFAULT_QUAD_BUDGET


def _pick_method(method: str, w: Graphon, dims: int) -> str:
    if method != "auto":
        return method
    if w.is_step:
        return "exact"
    return "quad" if dims <= 2 else "mc"


def _as_estimate(res, idx=0) -> Estimate:
    return Estimate(float(res.value[idx]), float(res.stderr[idx]), res.n, res.method)


def _part_axes(h: Graph, w: Graphon, vertices) -> list:
    """Per-vertex part restriction (index) or None for undecorated vertices."""
    if h.parts is None:
        return [None] * len(vertices)
    if w.partition is None:
        raise ValueError("decorated graphs need a graphon with partition metadata")
    return [w.partition.index(h.parts[v]) for v in vertices]


def _pair_product(w: Graphon, h: Graph, x: np.ndarray, skip=frozenset()) -> np.ndarray:
    """prod over vertex pairs of W (edge) or 1 - W (non-edge); x has shape (..., |H|)."""
    out = np.ones(x.shape[:-1])
    for i, j in combinations(range(h.order), 2):
        if (i, j) in skip:
            continue
        v = w._eval(x[..., i], x[..., j])
        out *= v if (i, j) in h.edges else 1.0 - v
    return out


def _check_order(h: Graph):
    if h.order > BRUTE_FORCE_CUTOFF:
        raise UnsupportedSizeError(f"graph order {h.order} exceeds {BRUTE_FORCE_CUTOFF}")


# ---------------------------------------------------------------------------
# unrooted densities


def graphon_density(h: Graph, w: Graphon, method: str = "auto", budget=None, seed=None,
                    workers: int = 1) -> Estimate:
    """Induced density d(H, W); decorated graphs are restricted to their parts."""
    if h.is_rooted:
        raise ValueError("use rooted_density for rooted graphs")
    _check_order(h)
    method = _pick_method(method, w, h.order)
    if method == "exact" and not w.is_step:
        raise ValueError("the exact method needs a step graphon")
    budget = _budget(method, budget)
    axes = _part_axes(h, w, range(h.order))
    pref = math.factorial(h.order) / automorphism_count(h.plain())
    res = integrate(lambda x: _pair_product(w, h, x), axes, w.partition, method, budget,
                    seed, key=(1, h.pair_code()), workers=workers)
    est = _as_estimate(res)
    return Estimate(pref * est.value, pref * est.stderr, est.budget, est.method)


def decorated_density(h: Graph, w: Graphon, method: str = "auto", budget=None, seed=None,
                      workers: int = 1) -> Estimate:
    if h.parts is None:
        raise ValueError("graph carries no decoration")
    if w.partition is None:
        raise ValueError("decorated densities need a graphon with partition metadata")
    return graphon_density(h, w, method, budget, seed, workers)


# ---------------------------------------------------------------------------
# rooted densities


def root_weight(h: Graph, w: Graphon, roots: np.ndarray) -> np.ndarray:
    """c(x_1..x_m) for the root graph of h, times the root part indicators."""
    h0 = h.root_graph()
    roots = np.atleast_2d(np.asarray(roots, dtype=float))
    c = _pair_product(w, h0, roots)
    if h0.parts is not None:
        spec = w.partition
        if spec is None:
            raise ValueError("decorated roots need a graphon with partition metadata")
        for i, label in enumerate(h0.parts):
            lo, hi = spec.interval(label)
            xi = roots[:, i]
            inside = (xi >= lo) & ((xi < hi) | (hi >= 1.0))
            c = c * inside
    return c


def _inner_nodes(h: Graph, w: Graphon, inner, exact: bool):
    """Grid over the non-root coordinates of h: (nodes (M, k), weights (M,))."""
    free = h.non_roots
    axes = _part_axes(h, w, free)
    k = len(free)
    if k == 0:
        return np.zeros((1, 0)), np.ones(1)
    res = None if exact else max(1, int(round(inner ** (1.0 / k))))
    grids = [axis_nodes(w.partition, p, res) for p in axes]
    mesh = np.meshgrid(*[g[0] for g in grids], indexing="ij")
    wmesh = np.meshgrid(*[g[1] for g in grids], indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    weights = np.prod(np.stack([m.ravel() for m in wmesh], axis=1), axis=1)
    return nodes, weights


def rooted_prefactor(h: Graph) -> float:
    return math.factorial(h.order - h.m) / automorphism_count(h.plain().with_roots(h.roots))


def rooted_values(h: Graph, w: Graphon, roots: np.ndarray, inner: int = DEFAULT_INNER,
                  exact: bool | None = None) -> np.ndarray:
    """Rooted densities of h at many root tuples at once (deterministic inner grid).

    Conditioned on the roots inducing H0: the root-root pairs do not enter.
    """
    _check_order(h)
    roots = np.atleast_2d(np.asarray(roots, dtype=float))
    if exact is None:
        exact = w.is_step
    nodes, weights = _inner_nodes(h, w, inner, exact)
    order = list(h.roots) + list(h.non_roots)
    relabel = {old: new for new, old in enumerate(order)}
    hh = Graph.from_edges(h.order, [(relabel[u], relabel[v]) for u, v in h.edges])
    m = h.m
    skip = frozenset(combinations(range(m), 2))
    out = np.empty(len(roots))
    step = max(1, ROW_CHUNK // max(1, len(nodes)))
    for lo in range(0, len(roots), step):
        r = roots[lo:lo + step]
        x = np.empty((len(r), len(nodes), h.order))
        x[:, :, :m] = r[:, None, :]
        x[:, :, m:] = nodes[None, :, :]
        out[lo:lo + step] = _pair_product(w, hh, x, skip) @ weights
    return rooted_prefactor(h) * out


def rooted_density(h: Graph, w: Graphon, roots, method: str = "quad", budget=None,
                   seed=None) -> Estimate:
    """Density of rooted h with its roots fixed at the given coordinates."""
    roots = np.asarray(roots, dtype=float).reshape(1, -1)
    if roots.shape[1] != h.m:
        raise ValueError(f"expected {h.m} root coordinates")
    if np.any(roots < 0) or np.any(roots > 1):
        raise ValueError("root coordinates must lie in [0, 1]")
    if root_weight(h, w, roots)[0] <= 0.0:
        raise DegenerateRootError("roots induce the root graph with probability 0")
    if method == "auto":
        method = "exact" if w.is_step else "quad"
    if method in ("quad", "exact"):
        inner = DEFAULT_INNER if budget is None else int(budget)
        val = rooted_values(h, w, roots, inner, exact=(method == "exact"))[0]
        return Estimate(float(val), 0.0, inner, "exact-step" if method == "exact" else "quadrature")
    if method != "mc":
        raise ValueError(f"unsupported method {method!r}")
    free = h.non_roots
    axes = _part_axes(h, w, free)
    m = h.m
    order = list(h.roots) + list(free)
    relabel = {old: new for new, old in enumerate(order)}
    hh = Graph.from_edges(h.order, [(relabel[u], relabel[v]) for u, v in h.edges])
    skip = frozenset(combinations(range(m), 2))

    def fn(z):
        x = np.concatenate([np.broadcast_to(roots, (len(z), m)), z], axis=1)
        return _pair_product(w, hh, x, skip)

    res = integrate(fn, axes, w.partition, "mc", _budget("mc", budget), seed, key=(3,))
    pref = rooted_prefactor(h)
    est = _as_estimate(res)
    return Estimate(pref * est.value, pref * est.stderr, est.budget, est.method)


def root_density(h: Graph, w: Graphon, method: str = "auto", budget=None, seed=None) -> Estimate:
    """∫ c: the labelled probability that random roots induce H0 (in their parts)."""
    h0 = h.root_graph()
    method = _pick_method(method, w, h0.order)
    axes = _part_axes(h0, w, range(h0.order))
    res = integrate(lambda x: root_weight(h, w, x), axes, w.partition, method,
                    _budget(method, budget), seed, key=(4,))
    return _as_estimate(res)


def root_measure_sample(h: Graph, w: Graphon, size: int, seed=None, max_tries: int = 10 ** 7,
                        floor: float = 1e-6) -> np.ndarray:
    """Draw ``size`` root tuples from the root measure mu by rejection sampling.

    Proposals are uniform on the product of the roots' parts; a proposal x is
    accepted with probability c(x) <= 1.
    """
    h0 = h.root_graph()
    m = h0.order
    spec = w.partition
    lo = np.zeros(m)
    width = np.ones(m)
    if h0.parts is not None:
        for i, label in enumerate(h0.parts):
            a, b = spec.interval(label)
            lo[i], width[i] = a, b - a
    rng = stream(seed, 5)
    got, tries = [], 0
    n_got = 0
    batch = max(1024, 4 * size)
    while n_got < size:
        x = lo + width * rng.random((batch, m))
        keep = rng.random(batch) < root_weight(h, w, x)
        got.append(x[keep])
        n_got += int(keep.sum())
        tries += batch
        if tries >= max_tries and n_got < floor * tries:
            raise ZeroMassError("root graph has (numerically) zero mass under W")
        if tries >= max_tries and n_got < size:
            raise ZeroMassError(f"only {n_got} of {size} roots accepted after {tries} proposals")
    return np.concatenate(got)[:size]


# ---------------------------------------------------------------------------
# rooted expressions


def _rooted_setup(expr, w: Graphon):
    from . import expressions as ex

    expr = ex.as_expr(expr)
    leaves = ex.rooted_leaves(expr)
    if not leaves:
        raise ValueError("expression has no rooted graph terms")
    ex.check_compatible(leaves)
    return expr, leaves[0]


def _single_free_values(g: Graph, w: Graphon, x: np.ndarray, cols: dict, inner: int,
                        exact: bool) -> np.ndarray:
    """Rooted densities of a graph with one non-root, reusing kernel columns
    W(x_j, y) shared by every such graph in an expression."""
    (free,) = g.non_roots
    part = None if g.parts is None else w.partition.index(g.parts[free])
    if ("nodes", part) not in cols:
        res = None if exact else inner
        cols[("nodes", part)] = axis_nodes(w.partition, part, res)
    nodes, weights = cols[("nodes", part)]
    prod_ = np.ones((len(x), len(nodes)))
    for j, r in enumerate(g.roots):
        key = (j, part)
        if key not in cols:
            cols[key] = w._eval(x[:, j, None], nodes[None, :])
        v = cols[key]
        prod_ *= v if g.has_edge(r, free) else 1.0 - v
    return rooted_prefactor(g) * (prod_ @ weights)


def _rooted_integrand(expr, leaves_first: Graph, w: Graphon, exact: bool, inner: int,
                      consts: dict):
    from . import expressions as ex

    def block(x):
        c = root_weight(leaves_first, w, x)
        cache, cols = {}, {}

        def leaf(g):
            if g not in cache:
                if len(g.non_roots) == 1:
                    cache[g] = _single_free_values(g, w, x, cols, inner, exact)
                else:
                    cache[g] = rooted_values(g, w, x, inner, exact)
            return cache[g]

        vals = ex.evaluate_pointwise(expr, leaf, consts)
        return np.stack([c * vals, c * np.ones(len(x))], axis=1)

    def fn(x):
        step = max(1, ROW_CHUNK // (1 if exact else max(1, inner)))
        return np.concatenate([block(x[lo:lo + step]) for lo in range(0, len(x), step)])

    return fn


def _ordinary_constants(expr, w, method, budget, seed, workers):
    """Evaluate ordinary subexpressions nested inside a rooted one (as constants)."""
    from . import expressions as ex

    out = {}
    for sub in ex.ordinary_subexpressions(expr):
        out[sub] = ex.evaluate_expression(sub, w, method, budget, seed, workers).value
    return out


def _rooted_integral(expr, w: Graphon, method: str, budget, seed, inner, workers):
    expr, first = _rooted_setup(expr, w)
    h0 = first.root_graph()
    method = _pick_method(method, w, h0.order + 1)
    if method == "exact" and not w.is_step:
        raise ValueError("the exact method needs a step graphon")
    inner = DEFAULT_INNER if inner is None else int(inner)
    consts = _ordinary_constants(expr, w, method, budget, seed, workers)
    # inner integrals are exact on step graphons, grid quadrature otherwise
    fn = _rooted_integrand(expr, first, w, w.is_step, inner, consts)
    axes = _part_axes(h0, w, range(h0.order))
    budget = _budget(method, budget)
    if method != "exact":
        # the budget counts kernel evaluations; each outer point costs one inner grid
        cost = 1 if w.is_step else max(1, inner)
        budget = max(64, budget // cost) if method == "mc" else max(1, budget // cost)
    return integrate(fn, axes, w.partition, method, budget, seed, key=(6,), workers=workers)


def unlabel(expr, w: Graphon, method: str = "auto", budget=None, seed=None, inner=None,
            workers: int = 1) -> Estimate:
    """The unlabeled value ∫ c(x) D(x) dx of a rooted density expression D."""
    res = _rooted_integral(expr, w, method, budget, seed, inner, workers)
    return _as_estimate(res, 0)


def rooted_expectation(expr, w: Graphon, method: str = "auto", budget=None, seed=None,
                       inner=None, workers: int = 1, min_mass: float = 1e-12) -> Estimate:
    """E_mu[D] = unlabel(D) / ∫ c, with a delta-method error for the ratio."""
    res = _rooted_integral(expr, w, method, budget, seed, inner, workers)
    num, den = res.value
    if den <= min_mass:
        raise ZeroMassError("root graph has (numerically) zero density")
    ratio = num / den
    var = (res.cov[0, 0] - 2 * ratio * res.cov[0, 1] + ratio ** 2 * res.cov[1, 1]) / den ** 2
    return Estimate(float(ratio), float(math.sqrt(max(var, 0.0))), res.n, res.method)


def sampled_rooted_expectation(expr, w: Graphon, size: int = 10_000, seed=None,
                               inner=None) -> Estimate:
    """E_mu[D] by drawing roots from mu and evaluating D at each draw."""
    from . import expressions as ex

    expr, first = _rooted_setup(expr, w)
    inner = DEFAULT_INNER if inner is None else int(inner)
    roots = root_measure_sample(first, w, size, seed)
    consts = _ordinary_constants(expr, w, "auto", None, seed, 1)
    cache = {}

    def leaf(g):
        if g not in cache:
            cache[g] = rooted_values(g, w, roots, inner)
        return cache[g]

    vals = ex.evaluate_pointwise(expr, leaf, consts)
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(size)), size,
                    "monte-carlo")


def partition_of(w: Graphon) -> PartitionSpec:
    if w.partition is None:
        raise ValueError("graphon carries no partition metadata")
    return w.partition
