import math
from fractions import Fraction
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphonlab.graphs import (Graph, PartitionSpec, UnsupportedSizeError, are_isomorphic,
                               automorphism_count, format_graph, induced_density_finite,
                               isomorphism_classes, parse_graph, rooted_compatible)


@st.composite
def graphs(draw, max_order=6):
    n = draw(st.integers(0, max_order))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Graph.from_edges(n, [p for p, keep in zip(pairs, mask) if keep])


def relabel(g: Graph, perm) -> Graph:
    return Graph.from_edges(g.order, [(perm[u], perm[v]) for u, v in g.edges])


@pytest.mark.parametrize("g, expected", [
    (Graph.complete(3), 6), (Graph.path(3), 2), (Graph.cycle(4), 8),
    (Graph.empty(4), 24), (Graph.complete(1), 1),
])
def test_automorphism_examples(g, expected):
    assert automorphism_count(g) == expected


def test_rooted_automorphisms_fix_roots():
    assert automorphism_count(Graph.complete(3).with_roots([0])) == 2
    assert automorphism_count(Graph.path(3).with_roots([0, 2])) == 1


def test_size_cutoff():
    with pytest.raises(UnsupportedSizeError):
        automorphism_count(Graph.empty(9))


@given(graphs())
def test_automorphism_count_divides_factorial(g):
    assert math.factorial(g.order) % automorphism_count(g) == 0


def test_isomorphism_examples():
    assert are_isomorphic(Graph.complete(3), Graph.cycle(3))
    e0 = Graph.from_edges(2, [(0, 1)], roots=[0])
    e1 = Graph.from_edges(2, [(0, 1)], roots=[1])
    assert are_isomorphic(e0, e1)
    centre = Graph.path(3).with_roots([1])
    leaf = Graph.path(3).with_roots([0])
    assert not are_isomorphic(centre, leaf)


@settings(max_examples=60)
@given(graphs(5), st.randoms())
def test_isomorphism_equivalence(g, rnd):
    perm = list(range(g.order))
    rnd.shuffle(perm)
    h = relabel(g, perm)
    assert are_isomorphic(g, g)
    assert are_isomorphic(g, h) and are_isomorphic(h, g)
    inv = list(np.argsort(perm))
    assert are_isomorphic(relabel(h, inv), g)


def test_rooted_compatible():
    single = Graph.from_edges(2, [(0, 1)], roots=[0])
    assert rooted_compatible(single, Graph.path(3).with_roots([1]))
    a = Graph.from_edges(3, [(0, 1)], roots=[0, 1])
    b = Graph.from_edges(3, [], roots=[0, 1])
    assert not rooted_compatible(a, b)
    assert rooted_compatible(a, a)


def test_induced_density_examples():
    edge = Graph.complete(2)
    assert induced_density_finite(edge, Graph.complete(3)) == 1
    assert induced_density_finite(Graph.complete(4), Graph.complete(3)) == 0
    assert induced_density_finite(edge, Graph.path(3)) == Fraction(2, 3)


@settings(max_examples=30)
@given(graphs(7), st.integers(2, 4))
def test_induced_densities_sum_to_one(g, k):
    total = sum(induced_density_finite(h, g) for h in isomorphism_classes(k))
    assert total == (1 if k <= g.order else 0)


def test_class_counts():
    assert [len(isomorphism_classes(n)) for n in range(1, 6)] == [1, 2, 4, 11, 34]


@given(graphs())
def test_text_format_round_trip(g):
    assert parse_graph(format_graph(g)) == g


def test_text_format_annotations():
    g = parse_graph("3 2\n0 1\n1 2\nroots: 1\nparts: A B 0\n")
    assert g.roots == (1,) and g.parts == ("A", "B", 0)
    with pytest.raises(ValueError):
        parse_graph("3 2\n0 1\n")
    with pytest.raises(ValueError):
        parse_graph("2 1\n0 0\n")


def test_partition_spec_validation():
    PartitionSpec((0.5, 0.5), (0.1, 0.2))
    with pytest.raises(ValueError):
        PartitionSpec((0.5, 0.6))
    with pytest.raises(ValueError):
        PartitionSpec((0.5, 0.5), (0.2, 0.2))
    with pytest.raises(ValueError):
        PartitionSpec((1.0, 0.0))
