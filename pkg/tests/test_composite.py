import random

import numpy as np
import pytest

from tetra3d.composite import (CompositeBlock, Divergence, apply_horizontal_field, block_dim,
                               composite_block, convergence_limit, multispins, random_domain_pair,
                               s_weight, s_weight_series, verify_ybe_block, ybe_domain_ok)


def test_single_site_zero_block_is_geometric():
    assert s_weight((0,), (0,), (0,), (0,), 0.5, 0.5) == pytest.approx(2.0, rel=1e-12)
    blk = composite_block(1, 0, 0, 0.3, 0.4)
    assert blk.matrix.shape == (1, 1)
    assert blk.matrix[0, 0] == pytest.approx(1 / 0.7, rel=1e-12)


def test_charge_mismatch_vanishes():
    assert s_weight((1, 0), (0, 1), (1, 0), (1, 1), 0.05, 0.5) == 0.0
    assert s_weight((1,), (0,), (0,), (0,), 0.2, 0.5) == 0.0


def test_zero_charge_two_sites():
    # both chain factors are diagonal ones: again a geometric series
    assert s_weight((0, 0), (0, 0), (0, 0), (0, 0), 0.25, 0.5) == pytest.approx(1 / 0.75, rel=1e-12)


def test_bases():
    assert multispins(2, 1) == [(0, 1), (1, 0)]
    assert block_dim(3, 2) == len(multispins(3, 2)) == 6


def test_i0_j1_structure():
    blk = composite_block(2, 0, 1, 0.1, 0.5)
    # per-site conservation with i = i' = 0 forces j = j'
    assert blk.matrix.shape == (2, 2)
    assert blk.matrix[0, 1] == 0.0 and blk.matrix[1, 0] == 0.0
    assert blk.matrix[0, 0] > 0 and blk.matrix[1, 1] > 0


def test_constructor_rejects_wrong_shape():
    with pytest.raises(ValueError):
        CompositeBlock(2, 1, 1, 0.1, 0.5, np.zeros((3, 3)), 0.0)


def test_divergence_outside_domain():
    assert convergence_limit(1, 1, 0.5) == 0.25
    with pytest.raises(Divergence):
        s_weight_series((1, 0), (1, 0), (1, 0), (1, 0), 0.3, 0.5)


def test_ybe_trivial_charges():
    assert verify_ybe_block(2, 0, 0, 0, 0.3, 0.2, 0.5)["passed"]


def test_ybe_two_sites_unit_charges():
    w, wp = 0.06, 0.01
    assert ybe_domain_ok(1, 1, 1, w, wp, 0.5)
    rep = verify_ybe_block(2, 1, 1, 1, w, wp, 0.5)
    assert rep["passed"], rep["rel_dev"]


def test_unit_charge_point_outside_domain():
    assert not ybe_domain_ok(1, 1, 1, 0.2, 0.3, 0.5)
    with pytest.raises(Divergence):
        verify_ybe_block(2, 1, 1, 1, 0.2, 0.3, 0.5)


def test_ybe_single_site_random():
    rng = random.Random(2)
    for I in range(3):
        for J in range(3):
            for K in range(3):
                w, wp = random_domain_pair(rng, I, J, K, 0.6)
                assert verify_ybe_block(1, I, J, K, w, wp, 0.6)["passed"]


def test_horizontal_field_identity_and_neutral_block():
    blk = composite_block(2, 1, 1, 0.1, 0.5)
    same = apply_horizontal_field(blk, 1.0, 1.0, 0.0)
    np.testing.assert_array_equal(same.matrix, blk.matrix)
    zero_j = composite_block(2, 1, 0, 0.1, 0.5)
    np.testing.assert_array_equal(apply_horizontal_field(zero_j, 0.3, [2.0, 0.5], 1.0).matrix, zero_j.matrix)


def test_ybe_survives_horizontal_field():
    rep = verify_ybe_block(2, 1, 1, 1, 0.06, 0.01, 0.5, field=(0.7, [1.3, 1 / 1.3], 1.0))
    assert rep["passed"], rep["rel_dev"]
