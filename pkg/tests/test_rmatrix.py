import itertools
import random
from fractions import Fraction

import pytest

from tetra3d.qpoly import ONE, ZERO, LaurentPoly, poly_eval
from tetra3d.rmatrix import (DressParams, PoleDomain, SpinTuple6, asymptotic_exponent_check, conserves,
                             dress_factor, q_poly_hypergeometric, q_poly_recursive, r_element,
                             r_element_dressed, r_element_from_q, r_value, similarity_transform,
                             verify_symmetry_P13, verify_symmetry_transpose)

# hand-entered low-order elements
LOW_ORDER = {
    (0, 0, 0, 0, 0, 0): {"0": "1"},
    (0, 1, 0, 0, 1, 0): {"-1": "1"},
    (1, 1, 0, 1, 1, 0): {"-2": "1"},
    (0, 1, 0, 1, 0, 1): {"-2": "1", "0": "-1"},
    (1, 2, 1, 1, 2, 1): {"-7": "1", "-5": "1", "-1": "-1"},
    (0, 2, 1, 2, 0, 3): {"-10": "1", "-6": "-1", "-4": "-1", "0": "1"},
    (2, 3, 1, 2, 3, 1): {"-14": "1", "-12": "1", "-10": "1", "-6": "-1", "-4": "-1"},
}


def mono(e):
    return LaurentPoly({e: 1})


def q1_formula(a1, a2, a3):
    x, y, z = mono(-2 * a1), mono(-2 * a2), mono(-2 * a3)
    return 1 - (x + z) + x * y * z


def q2_formula(a1, a2, a3):
    x, y, z = mono(-2 * a1), mono(-2 * a2), mono(-2 * a3)
    q2 = mono(2)
    return ((1 - x) * (1 - x * q2) * (1 - z) * (1 - z * q2) - x * x * z * z * mono(4) * (1 - y * y)
            - x * z * q2 * (1 + q2) * (1 - y) * (1 - x - z))


@pytest.mark.parametrize("idx,expected", sorted(LOW_ORDER.items()))
def test_low_order_elements(idx, expected):
    assert r_element(idx).to_json() == expected


def test_off_conservation_is_zero():
    assert r_element((0, 1, 0, 1, 0, 0)).is_zero()
    assert not conserves((0, 1, 0, 1, 0, 0))


def test_spin_tuple_parsing():
    assert SpinTuple6.parse("0,1,0|1,0,1") == (0, 1, 0, 1, 0, 1)
    with pytest.raises(ValueError):
        SpinTuple6.parse("1,2,3")
    with pytest.raises(ValueError):
        SpinTuple6.of((0, -1, 0, 0, 0, 0))


def test_q_poly_examples():
    assert q_poly_recursive(0, 3, 1, 4) == ONE
    assert q_poly_recursive(1, 0, 0, 0) == ZERO
    assert q_poly_recursive(1, 1, 1, 1) == LaurentPoly({0: 1, -2: -2, -6: 1})


def test_q_poly_against_closed_forms():
    rng = random.Random(11)
    for _ in range(20):
        a = [rng.randint(0, 5) for _ in range(3)]
        assert q_poly_recursive(1, *a) == q1_formula(*a)
        assert q_poly_recursive(2, *a) == q2_formula(*a)


def test_hypergeometric_matches_recurrence():
    assert q_poly_hypergeometric(0, 2, 2, 2) == ONE
    assert q_poly_hypergeometric(1, 1, 1, 1) == q_poly_recursive(1, 1, 1, 1)
    for n in range(5):
        for a1, a2, a3 in itertools.product(range(n, n + 2), range(3), range(3)):
            assert q_poly_hypergeometric(n, a1, a2, a3) == q_poly_recursive(n, a1, a2, a3)


def test_hypergeometric_pole_domain():
    with pytest.raises(PoleDomain):
        q_poly_hypergeometric(2, 1, 2, 3)


def test_recurrence_assembly_matches_pole_free_sum():
    for idx in itertools.product(range(3), repeat=6):
        if conserves(idx):
            assert r_element_from_q(idx) == r_element(idx), idx


def test_integrality_and_positivity():
    qs = [Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)]
    for idx in itertools.product(range(3), repeat=6):
        p = r_element(idx)
        assert p.is_integral()
        if conserves(idx):
            assert all(p.evaluate_exact(q) >= 0 for q in qs)


def test_symmetries_exhaustive_small():
    assert verify_symmetry_P13(0)["passed"]
    assert verify_symmetry_P13(2)["passed"]
    assert verify_symmetry_transpose(0)["passed"]
    assert verify_symmetry_transpose(2)["passed"]


def _perturbed(target):
    def element(idx):
        p = r_element(idx)
        return p + 1 if tuple(idx) == target else p
    return element


def test_symmetry_negative_controls():
    # a tuple that is mapped to a different tuple by the symmetry
    assert verify_symmetry_P13(1, _perturbed((1, 0, 0, 1, 0, 0)))["violations"]
    assert verify_symmetry_transpose(1, _perturbed((0, 1, 0, 1, 0, 1)))["violations"]


def test_dressing():
    idx = (0, 1, 0, 0, 1, 0)
    ones = DressParams((1, 1, 1), (1, 1, 1))
    for t in [(0, 0, 0, 0, 0, 0), idx, (1, 2, 1, 1, 2, 1)]:
        assert r_element_dressed(t, ones, 0.5) == pytest.approx(r_value(t, 0.5))
    assert r_element_dressed((0,) * 6, DressParams((2, 3, 4), (5, 6, 7)), 0.3) == 1.0
    # (mu_k / lam_i)^{n2} with lam_i = 2 and n2 = 1, times q^-1 at q = 1/2
    assert r_element_dressed(idx, DressParams((2, 1, 1), (1, 1, 1)), 0.5) == pytest.approx(1.0)
    assert dress_factor((0, 0, 0, 1, 0, 0), DressParams((1, 3, 2), (1, 1, 1))) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        DressParams((1, 0, 1), (1, 1, 1))


def test_similarity():
    q = 0.5
    assert similarity_transform((1, 2, 1, 1, 2, 1), 2, 3, 5, q) == pytest.approx(r_value((1, 2, 1, 1, 2, 1), q))
    assert similarity_transform((0, 1, 0, 1, 0, 1), 1, 1, 1, q) == pytest.approx(3.0)
    assert similarity_transform((0, 1, 0, 1, 0, 1), 2, 3, 5, q) == pytest.approx(0.5 * 3 * 0.2 * 3.0)


def test_asymptotic_exponents():
    rep = asymptotic_exponent_check((1, 1, 1, 1, 1, 1), range(1, 9))
    assert rep["linear"]
    assert rep["max_residual_per_scale"] < 3.0
    # for (0,1,0|0,1,0) the element is exactly q^{-L}: leading term 0, residual -L
    rep = asymptotic_exponent_check((0, 1, 0, 0, 1, 0), [1, 2, 5])
    for row in rep["rows"]:
        assert row["leading"] == 0
        assert row["residual"] == pytest.approx(-row["scale"])
    assert asymptotic_exponent_check((0, 1, 0, 0, 1, 0), [1])["linear"]


def test_float_evaluation_agrees_with_exact():
    p = r_element((2, 3, 1, 2, 3, 1))
    assert poly_eval(p, 0.5) == pytest.approx(float(p.evaluate_exact(Fraction(1, 2))))
