import random

from tetra3d.rmatrix import DressParams
from tetra3d.tetrahedron import (TetraExternal, charge_groups, conserved_charges, dress_from_spaces,
                                 enumerate_internal, enumerate_internal_bruteforce, nontrivial_externals,
                                 sweep, verify_tetrahedron, verify_tetrahedron_dressed)


def test_trivial_external():
    ext = TetraExternal((0,) * 6, (0,) * 6)
    assert enumerate_internal(ext, "lhs") == [(0,) * 6]
    rep = verify_tetrahedron(ext)
    assert rep.equal and rep.lhs.to_json() == {"0": "1"}


def test_charge_mismatch_has_no_internals():
    ext = TetraExternal((1, 0, 0, 0, 0, 0), (0,) * 6)
    assert enumerate_internal(ext, "lhs") == []
    assert enumerate_internal(ext, "rhs") == []


def test_enumeration_matches_bruteforce():
    rng = random.Random(3)
    exts = [TetraExternal((0, 1, 0, 0, 0, 0), (0, 1, 0, 0, 0, 0)),
            TetraExternal((1, 1, 0, 1, 0, 1), (1, 0, 1, 0, 1, 1))]
    exts += [e for e in nontrivial_externals(1) if rng.random() < 0.05]
    for ext in exts:
        for side in ("lhs", "rhs"):
            assert sorted(enumerate_internal(ext, side)) == enumerate_internal_bruteforce(ext, side)


def test_single_excitation():
    assert verify_tetrahedron(TetraExternal((0, 1, 0, 0, 0, 0), (0, 1, 0, 0, 0, 0))).equal


def test_sweep_entries_le_1():
    rep = sweep(1)
    assert rep["checked"] == 2 ** 12
    assert rep["failures"] == []


def test_sweep_max_index_0():
    rep = sweep(0)
    assert rep["checked"] == 1 and rep["failures"] == []


def test_conserved_charges_are_invariant():
    for npp_list in charge_groups(1).values():
        ref = conserved_charges(npp_list[0])
        assert all(conserved_charges(t) == ref for t in npp_list)


def test_dressed_unit_parameters_reduce():
    ext = TetraExternal((1, 1, 0, 1, 0, 1), (1, 0, 1, 0, 1, 1))
    ones = [DressParams((1, 1, 1), (1, 1, 1))] * 4
    rep = verify_tetrahedron_dressed(ext, ones, 0.5)
    assert rep["equal"]
    assert rep["lhs"] == verify_tetrahedron_dressed(ext, None, 0.5)["lhs"]


def test_dressed_random_parameters():
    rng = random.Random(5)
    lam = [rng.uniform(0.5, 2) for _ in range(6)]
    mu = [rng.uniform(0.5, 2) for _ in range(6)]
    dress = dress_from_spaces(lam, mu)
    for ext in nontrivial_externals(1):
        assert verify_tetrahedron_dressed(ext, dress, 0.5)["equal"]


def test_dressed_negative_control():
    rng = random.Random(5)
    lam = [rng.uniform(0.5, 2) for _ in range(6)]
    mu = [rng.uniform(0.5, 2) for _ in range(6)]
    dress = dress_from_spaces(lam, mu)
    bent = list(mu)
    bent[2] *= 1.7
    other = dress_from_spaces(lam, bent)
    found = any(not verify_tetrahedron_dressed(ext, dress, 0.5, rhs_dress=other)["equal"]
                for ext in nontrivial_externals(1))
    assert found
