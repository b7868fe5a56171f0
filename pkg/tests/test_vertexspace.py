import numpy as np
import pytest

from graphonlab.graphon import RademacherLayout, SectionFunction, constant_graphon, section
from graphonlab.vertexspace import (MIN_GRID, check_separation, closed_form_distance,
                                    dw_distance, l1_distance, packing_diagnostic, witness_g,
                                    witness_g_i_delta, witness_root_point)

LAY = RademacherLayout()


def const_fn(c):
    return SectionFunction(lambda x: np.full(np.shape(x), float(c)), f"const {c}", np.array([]),
                           None)


def corpus():
    fns = [witness_g(), const_fn(0.0), const_fn(1.0), const_fn(0.4)]
    fns += [witness_g_i_delta(i, d) for i, d in [(2, 0.3), (3, 0.1), (5, 0.25), (7, 0.5)]]
    fns.append(SectionFunction(lambda x: np.asarray(x, dtype=float) ** 2, "square", np.array([]),
                               None))
    return fns


def test_l1_examples():
    g = witness_g()
    assert l1_distance(g, g).value == 0
    assert l1_distance(const_fn(1), const_fn(0)).value == pytest.approx(1.0)
    assert l1_distance(witness_g_i_delta(3, 0.1), g).value == pytest.approx(0.725 / 9, abs=1e-4)
    with pytest.raises(ValueError):
        l1_distance(g, g, MIN_GRID // 2)


def test_witness_values():
    g = witness_g()
    assert g(LAY.point("D", 0.3)) == pytest.approx(0.2)
    gi = witness_g_i_delta(3, 0.25)
    # fraction 0.3 of C has third binary digit 0 (0.3 * 8 = 2.4)
    assert gi(LAY.point("C", 0.3)) == pytest.approx(0.25)
    assert gi(LAY.point("C", 0.4)) == 0.0
    for bad in [(0, 0.5), (2, 0.0), (2, 1.0), (1.5, 0.2)]:
        with pytest.raises(ValueError):
            witness_g_i_delta(*bad)


def test_pseudometric():
    fns = corpus()
    n = len(fns)
    d = np.array([[l1_distance(f, g).value for g in fns] for f in fns])
    assert np.array_equal(d, d.T) and np.all(np.diag(d) == 0)
    tol = 2.0 / 4096
    for i in range(n):
        for j in range(n):
            assert np.all(d[i, j] <= d[i] + d[:, j] + tol)


@pytest.mark.parametrize("delta", [0.1, 0.25, 0.5])
@pytest.mark.parametrize("i", range(1, 11))
def test_closed_form_distance(i, delta):
    d = l1_distance(witness_g_i_delta(i, delta), witness_g(), 1 << 12).value
    assert d == pytest.approx(closed_form_distance(i, delta), abs=1e-4)


@pytest.mark.parametrize("i", range(1, 9))
def test_section_identity(wr, i):
    for delta in (0.1, 0.5):
        s = section(wr, witness_root_point(i, delta))
        assert l1_distance(s, witness_g_i_delta(i, delta)).value <= 2 / 4096


def test_separation():
    assert check_separation(3, 0.1, 5, 0.1)
    assert check_separation(4, 0.5, 7, 0.25)
    with pytest.raises(ValueError):
        check_separation(4, 0.5, 4, 0.25)


def test_packing_examples():
    rep = packing_diagnostic(2 ** -6, 8)
    assert rep.certified and rep.indices == list(range(7, 15))
    assert rep.distances[0] == pytest.approx(0.00697, abs=1e-5)
    assert packing_diagnostic(2 ** -4, 4).certified
    empty = packing_diagnostic(0.1, 0)
    assert empty.certified and empty.indices == []
    with pytest.raises(ValueError):
        packing_diagnostic(0.3, 2)


def test_dw_properties(wr):
    fns = corpus()
    rng = np.random.default_rng(0)
    for _ in range(12):
        a, b = rng.choice(len(fns), 2)
        f, g = fns[a], fns[b]
        assert dw_distance(wr, f, g).value <= l1_distance(f, g).value + 1e-6
    assert dw_distance(wr, fns[4], fns[4]).value == 0
    f, g = fns[0], fns[-1]
    mean_diff = float(np.mean(f((np.arange(1 << 16) + 0.5) / (1 << 16))
                              - g((np.arange(1 << 16) + 0.5) / (1 << 16))))
    assert dw_distance(constant_graphon(0.3), f, g).value == pytest.approx(
        0.3 * abs(mean_diff), abs=1e-4)
