import math

import numpy as np
import pytest

from tetra3d.sl2 import (DegenerateBlock, PoleProximity, Sl2Element, compare_composite_six_vertex,
                         compare_composite_sl2, compare_proportional, gradation_gauge, r_sl2, six_vertex,
                         six_vertex_matrix, sl2_matrix, sl2_ybe_residual)


def test_six_vertex_weights():
    lam, q = 1.7, 0.4
    assert six_vertex(0, 0, 0, 0, lam, q) == pytest.approx(q * lam - 1 / (q * lam))
    assert six_vertex(1, 0, 0, 1, lam, q) == pytest.approx(q - 1 / q)
    assert six_vertex(0, 1, 0, 1, lam, q) == pytest.approx(lam - 1 / lam)
    assert six_vertex(0, 0, 1, 1, lam, q) == 0.0


def test_higher_spin_reduces_to_six_vertex():
    # same spectral parameter, overall normalisation -1
    for lam in (0.3, 0.8, 1.9):
        np.testing.assert_allclose(-sl2_matrix(1, 1, lam, 0.45), six_vertex_matrix(lam, 0.45), rtol=1e-12)


def test_delta_and_validation():
    assert r_sl2(Sl2Element(1, 1, 1, 0, 1, 1, 0.5), 0.5) == 0.0
    with pytest.raises(ValueError):
        Sl2Element(1, 1, 2, 0, 1, 0, 0.5)


def test_pole_detection():
    # lambda^2 = q^{J - I} hits the k = l = 0 denominator
    with pytest.raises(PoleProximity):
        r_sl2(Sl2Element(1, 2, 0, 1, 0, 1, math.sqrt(0.5)), 0.5)


def test_yang_baxter():
    for I, J, K in [(1, 1, 1), (1, 2, 1), (2, 1, 2)]:
        assert sl2_ybe_residual(I, J, K, 0.37, 0.81, 0.55) < 1e-10


def test_compare_proportional():
    a = np.array([[1.0, 2.0], [0.0, 3.0]])
    assert compare_proportional(2 * a, a)["max_rel_dev"] == pytest.approx(0.0)
    assert compare_proportional(np.zeros((2, 2)), np.zeros((2, 2)))["max_rel_dev"] == 0.0
    with pytest.raises(DegenerateBlock):
        compare_proportional(a, np.zeros((2, 2)))


def test_trivial_charges():
    rep = compare_composite_sl2(0, 0, 0.5, 0.5)
    assert rep["passed"]


def test_composite_matches_in_gradation_gauge():
    for I, J, w, q in [(1, 1, 0.2, 0.5), (2, 1, 0.05, 0.4), (1, 0, 0.3, 0.6), (2, 2, 0.02, 0.5)]:
        rep = compare_composite_sl2(I, J, w, q)
        assert rep["gauge_dev"] < 1e-10, (I, J)


def test_single_scalar_fails_at_unit_charges():
    # the two c-type entries of the composite block differ by a factor 1/w,
    # while the six-vertex c weights are equal
    rep = compare_composite_sl2(1, 1, 0.2, 0.5)
    assert not rep["passed"]
    assert rep["max_rel_dev"] > 0.1


def test_six_vertex_comparison():
    rep = compare_composite_six_vertex(0.2, 0.5)
    assert rep["gauge_passed"] and not rep["passed"]


def test_gauge_is_diagonal_similarity():
    lam = 0.7
    g = gradation_gauge(2, 1, lam)
    d = np.array([lam ** a for a in range(3) for _ in range(2)])
    np.testing.assert_allclose(g, d[:, None] / d[None, :])
