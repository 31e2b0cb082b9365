import pytest

from tetra3d.oscillator import CutoffTooSmall, check_relation, relations, safe_window, verify_oscillator_map


def test_smallest_cutoff():
    assert safe_window(2) == [(0, 0, 0)]
    assert verify_oscillator_map(2)["passed"]


def test_all_relations_cutoff_3():
    rep = verify_oscillator_map(3)
    assert rep["passed"], rep["failures"][:2]
    assert set(rep["relations"]) == set(relations())


def test_literal_k3_cube_fails():
    assert not verify_oscillator_map(3, k3_power=3, names=["(k2')^2"])["passed"]


def test_literal_a2_sign_fails():
    rep = verify_oscillator_map(3, a2_sign=1, names=["a2'+", "a2'-"])
    assert not rep["passed"]


def test_sign_fixes_only_the_a2_relations():
    rel = relations(a2_sign=1)
    x, xp = rel["k2' a1'+"]
    assert check_relation(x, xp, 3) == []


def test_cutoff_too_small():
    with pytest.raises(CutoffTooSmall):
        verify_oscillator_map(1)
