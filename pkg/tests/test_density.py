import math

import numpy as np
import pytest

from graphonlab import density as dn
from graphonlab.expressions import Term
from graphonlab.graphon import (MeasurePreservingMap, RademacherLayout, apply_measure_preserving,
                                constant_graphon, half_graphon)
from graphonlab.graphs import Graph, UnsupportedSizeError, isomorphism_classes

from conftest import random_step

EDGE, TRI = Graph.complete(2), Graph.complete(3)
E1 = Graph.from_edges(2, [(0, 1)], roots=[0])
LAY = RademacherLayout()


def half_triangle_oracle(res=1 << 10):
    """Triangle density of the half graphon on a midpoint grid: for each (x, y)
    with x + y >= 1, the z-measure of {z >= max(1-x, 1-y)} is min(x, y)."""
    t = (np.arange(res) + 0.5) / res
    x, y = t[:, None], t[None, :]
    return float(np.where(x + y >= 1, np.minimum(x, y), 0.0).mean())


def test_plain_examples():
    assert dn.graphon_density(EDGE, constant_graphon(0.5)).value == pytest.approx(0.5)
    assert dn.graphon_density(EDGE, half_graphon()).value == pytest.approx(0.5, abs=1e-3)
    est = dn.graphon_density(TRI, half_graphon(), "mc", 1_000_000, seed=4)
    assert est.within(half_triangle_oracle(), 3, 1e-3)
    assert half_triangle_oracle() == pytest.approx(0.25, abs=1e-3)


def test_size_and_method_errors():
    with pytest.raises(UnsupportedSizeError):
        dn.graphon_density(Graph.empty(9), constant_graphon(0.5))
    with pytest.raises(ValueError):
        dn.graphon_density(EDGE, half_graphon(), "exact")
    with pytest.raises(ValueError):
        dn.graphon_density(E1, half_graphon())


def test_decorated_examples(wr):
    assert dn.decorated_density(Graph.from_edges(2, [(0, 1)], parts=("A", "D")), wr).value == 0
    ne = dn.decorated_density(Graph.empty(2).with_parts(("A", "A")), wr, "quad", 1 << 22)
    assert ne.value == pytest.approx(1 / 243, abs=1e-4)
    bb = dn.decorated_density(Graph.complete(2).with_parts(("B", "B")), wr, "quad", 1 << 20)
    assert bb.value == pytest.approx(1 / 162, abs=1e-4)
    with pytest.raises(ValueError):
        dn.decorated_density(Graph.complete(2).with_parts(("A", "Z")), wr)
    with pytest.raises(ValueError):
        dn.decorated_density(Graph.complete(2).with_parts(("A", "B")), half_graphon())


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("seed", [0, 1])
def test_classes_sum_to_one_exact(n, seed):
    w = random_step(np.random.default_rng(seed), 3)
    total = sum(dn.graphon_density(h, w).value for h in isomorphism_classes(n))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_classes_sum_to_one_mc(wr):
    ests = [dn.graphon_density(h, wr, "mc", 200_000, seed=2) for h in isomorphism_classes(3)]
    se = math.sqrt(sum(e.stderr ** 2 for e in ests))
    assert abs(sum(e.value for e in ests) - 1.0) <= 3 * se + 1e-9


@pytest.mark.parametrize("seed", range(4))
def test_exact_matches_mc(seed):
    rng = np.random.default_rng(10 + seed)
    w = random_step(rng, int(rng.integers(1, 5)))
    for h in isomorphism_classes(int(rng.integers(2, 5))):
        exact = dn.graphon_density(h, w, "exact")
        mc = dn.graphon_density(h, w, "mc", 200_000, seed=seed)
        assert exact.stderr == 0.0
        assert mc.within(exact.value, 3.5, 1e-9)


@pytest.mark.parametrize("kind", ["reflect", "doubling"])
def test_weak_isomorphism_invariance(kind):
    w = half_graphon()
    v = apply_measure_preserving(w, MeasurePreservingMap(kind))
    cherry = Graph.path(3).with_roots([1])
    a = dn.unlabel(Term(cherry), w, "mc", 1 << 22, seed=1, inner=1 << 10)
    b = dn.unlabel(Term(cherry), v, "mc", 1 << 22, seed=1, inner=1 << 10)
    assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr) + 1e-3
    for h in isomorphism_classes(3):
        a = dn.graphon_density(h, w, "mc", 200_000, seed=3)
        b = dn.graphon_density(h, v, "mc", 200_000, seed=4)
        assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr) + 1e-9


def test_rooted_density_examples():
    for p in (0.2, 0.7):
        assert dn.rooted_density(E1, constant_graphon(p), [0.4]).value == pytest.approx(p)
    for x in (0.1, 0.55, 0.9):
        assert dn.rooted_density(E1, half_graphon(), [x]).value == pytest.approx(x, abs=1e-4)
    mc = dn.rooted_density(E1, half_graphon(), [0.3], "mc", 100_000, seed=2)
    assert mc.within(0.3)


def test_rooted_degenerate(wr):
    non_edge = Graph.from_edges(3, [], roots=[0, 1], parts=("A", "A", "B"))
    # different dyadic blocks of A are always adjacent
    with pytest.raises(dn.DegenerateRootError):
        dn.rooted_density(non_edge, wr, [LAY.point("A", 0.2), LAY.point("A", 0.7)])


def test_rooted_nested_b_neighbourhoods(wr):
    """Two A roots in one dyadic block: the B neighbourhood of the smaller
    fraction contains that of the larger, so the common neighbourhood is the
    smaller one, of mass (1 - larger fraction) within B."""
    g = Graph.from_edges(3, [(0, 2), (1, 2)], roots=[0, 1], parts=("A", "A", "B"))
    u, v = 0.55, 0.7
    est = dn.rooted_density(g, wr, [LAY.point("A", u), LAY.point("A", v)])
    assert est.value == pytest.approx((1 - v) / 9, abs=1e-4)


def test_root_measure_sample():
    x = dn.root_measure_sample(E1, half_graphon(), 20_000, seed=1)
    assert x.shape == (20_000, 1)
    assert abs(x.mean() - 0.5) < 0.01
    pair = Graph.from_edges(3, [(0, 1)], roots=[0, 1])
    y = dn.root_measure_sample(pair, constant_graphon(0.5), 20_000, seed=2)
    assert np.allclose(y.mean(axis=0), 0.5, atol=0.01)
    z = dn.root_measure_sample(pair, half_graphon(), 100_000, seed=3)
    assert np.all(z.sum(axis=1) >= 1)
    with pytest.raises(dn.ZeroMassError):
        dn.root_measure_sample(pair, constant_graphon(0.0), 10, seed=0, max_tries=10 ** 5)


def test_unlabel_examples():
    for p in (0.3, 0.8):
        assert dn.unlabel(Term(E1), constant_graphon(p)).value == pytest.approx(p)
    assert dn.unlabel(Term(E1) * 0 + 0.7, constant_graphon(0.4)).value == pytest.approx(0.7)
    with pytest.raises(ValueError):
        dn.unlabel(Term(EDGE), constant_graphon(0.4))


def test_unlabel_two_part_degree_polynomial():
    from graphonlab import step_graphon
    sizes, m = (0.3, 0.7), np.array([[0.9, 0.2], [0.2, 0.5]])
    w = step_graphon(sizes, m)
    d = m @ np.array(sizes)
    for j in range(2):
        i = 1 - j
        est = dn.unlabel(Term(E1) - d[i], w)
        assert est.value == pytest.approx(sizes[j] * (d[j] - d[i]), abs=1e-12)


@pytest.mark.parametrize("w", [constant_graphon(0.5), half_graphon()], ids=["const", "half"])
def test_rooted_measure_average_matches_unlabel(w):
    cherry = Graph.path(3).with_roots([1])
    ratio = dn.rooted_expectation(Term(cherry), w, "mc", 1 << 22, seed=2, inner=1 << 10)
    sampled = dn.sampled_rooted_expectation(Term(cherry), w, 20_000, seed=3, inner=1 << 10)
    assert abs(ratio.value - sampled.value) <= 3 * math.hypot(ratio.stderr, sampled.stderr) + 1e-3
