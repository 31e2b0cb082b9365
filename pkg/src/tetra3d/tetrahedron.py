"""Exact check of the tetrahedron equation in matrix form.

Spaces are numbered 1..6 (stored 0..5).  Each side is a product of four
R-factors; a factor ``R_{abc}`` maps the current occupations of spaces
``(a, b, c)`` to new ones.  Reading a side left to right, the first factor
consumes the external unprimed indices and the last factor must land on the
double-primed externals.  Every intermediate occupation is an internal
summation index.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .qpoly import ZERO, LaurentPoly, poly_sum
from .rmatrix import DressParams, conserves, dress_factor, r_element, r_value

LHS_ORDER = ((0, 1, 2), (0, 3, 4), (1, 3, 5), (2, 4, 5))
RHS_ORDER = ((2, 4, 5), (1, 3, 5), (0, 3, 4), (0, 1, 2))
SIDES = {"lhs": LHS_ORDER, "rhs": RHS_ORDER}


@dataclass(frozen=True)
class TetraExternal:
    n: tuple[int, ...]
    npp: tuple[int, ...]

    def __post_init__(self):
        if len(self.n) != 6 or len(self.npp) != 6:
            raise ValueError("tetrahedron externals need six unprimed and six double-primed spins")
        if min(self.n + self.npp) < 0:
            raise ValueError("spins must be non-negative")

    def as_list(self) -> list[int]:
        return list(self.n) + list(self.npp)


@dataclass
class TetraReport:
    ext: TetraExternal
    lhs: LaurentPoly
    rhs: LaurentPoly
    internal_count_lhs: int
    internal_count_rhs: int
    equal: bool = field(init=False)

    def __post_init__(self):
        self.equal = self.lhs == self.rhs

    def to_json(self) -> dict:
        return {"n": list(self.ext.n), "npp": list(self.ext.npp), "lhs": self.lhs.to_json(),
                "rhs": self.rhs.to_json(), "internal_lhs": self.internal_count_lhs,
                "internal_rhs": self.internal_count_rhs, "equal": self.equal}


def _paths(state: tuple[int, ...], order, final: tuple[int, ...], step: int,
           trail: list) -> Iterator[list]:
    """Depth-first walk through admissible intermediate states.

    ``trail`` collects, per factor, the six-index tuple it contributes.
    """
    if step == len(order):
        if state == final:
            yield list(trail)
        return
    a, b, c = order[step]
    x1, x2, x3 = state[a], state[b], state[c]
    s12, s23 = x1 + x2, x2 + x3
    remaining = order[step + 1:]
    # a space untouched by later factors must already take its final value
    fixed = {sp: final[sp] for sp in (a, b, c) if not any(sp in f for f in remaining)}
    lo, hi = 0, min(s12, s23)
    if b in fixed:
        lo = hi = fixed[b]
    for y2 in range(lo, hi + 1):
        y1, y3 = s12 - y2, s23 - y2
        if y1 < 0 or y3 < 0:
            continue
        if a in fixed and y1 != fixed[a]:
            continue
        if c in fixed and y3 != fixed[c]:
            continue
        new = list(state)
        new[a], new[b], new[c] = y1, y2, y3
        trail.append((x1, x2, x3, y1, y2, y3))
        yield from _paths(tuple(new), order, final, step + 1, trail)
        trail.pop()


def _internal_of(path: list, order) -> tuple[int, ...]:
    # internal indices n'_1..n'_6: the value of each space after its first factor
    out = [None] * 6
    for (a, b, c), idx in zip(order, path):
        for sp, val in zip((a, b, c), idx[3:]):
            if out[sp] is None:
                out[sp] = val
    return tuple(out)


def enumerate_paths(ext: TetraExternal, side: str) -> list[list]:
    order = SIDES[side]
    return list(_paths(tuple(ext.n), order, tuple(ext.npp), 0, []))


def enumerate_internal(ext: TetraExternal, side: str) -> list[tuple[int, ...]]:
    """All internal assignments compatible with every delta constraint on one side."""
    order = SIDES[side]
    return [_internal_of(p, order) for p in enumerate_paths(ext, side)]


def enumerate_internal_bruteforce(ext: TetraExternal, side: str) -> list[tuple[int, ...]]:
    """Filter a bounding box; every occupation is bounded by the total charge."""
    order = SIDES[side]
    bound = sum(ext.n)
    found = []
    for internal in itertools.product(range(bound + 1), repeat=6):
        state = list(ext.n)
        seen = [False] * 6
        ok = True
        for a, b, c in order:
            new = list(state)
            for sp in (a, b, c):
                new[sp] = ext.npp[sp] if seen[sp] else internal[sp]
                seen[sp] = True
            if not conserves([state[a], state[b], state[c], new[a], new[b], new[c]]):
                ok = False
                break
            state = new
        if ok and tuple(state) == tuple(ext.npp):
            found.append(internal)
    return sorted(found)


def side_value(ext: TetraExternal, side: str) -> tuple[LaurentPoly, int]:
    terms = []
    paths = enumerate_paths(ext, side)
    for path in paths:
        prod = None
        for idx in path:
            el = r_element(idx)
            if el.is_zero():
                prod = ZERO
                break
            prod = el if prod is None else prod * el
        if prod is not None and not prod.is_zero():
            terms.append(prod)
    return poly_sum(terms), len(paths)


def verify_tetrahedron(ext: TetraExternal) -> TetraReport:
    lhs, nl = side_value(ext, "lhs")
    rhs, nr = side_value(ext, "rhs")
    return TetraReport(ext, lhs, rhs, nl, nr)


def conserved_charges(vec: Sequence[int]) -> tuple[int, ...]:
    """Linear combinations of the six occupations preserved by both sides.

    A nonzero side forces these to agree between the unprimed and the
    double-primed externals.
    """
    return tuple(sum(c * v for c, v in zip(row, vec)) for row in _invariant_basis())


# Each factor on spaces (a, b, c) moves occupations along (+1, -1, +1), so an
# invariant c must satisfy c_a - c_b + c_c = 0 for all four factors.  The
# constraint matrix has rank 3; these rows span its kernel.
_BASIS = ((1, 1, 0, 1, 0, 0), (-1, 0, 1, 0, 1, 0), (0, -1, -1, 0, 0, 1))


def _invariant_basis() -> tuple[tuple[int, ...], ...]:
    return _BASIS


def verify_tetrahedron_dressed(ext: TetraExternal, dress: Sequence[DressParams] | None,
                               q: float, tol: float = 1e-10,
                               rhs_dress: Sequence[DressParams] | None = None) -> dict:
    """Numeric check with dressed factors.

    ``dress`` holds four :class:`DressParams`, one per factor in the order
    R_123, R_145, R_246, R_356; the same factor carries the same dressing on
    both sides.  ``rhs_dress`` overrides the right-hand side (negative
    controls only).
    """
    facs = {f: d for f, d in zip(LHS_ORDER, dress)} if dress else {}
    rfacs = {f: d for f, d in zip(LHS_ORDER, rhs_dress)} if rhs_dress else facs

    def side(name, table):
        total = []
        for path in enumerate_paths(ext, name):
            val = 1.0
            for f, idx in zip(SIDES[name], path):
                v = r_value(idx, q)
                if f in table:
                    v *= dress_factor(idx, table[f])
                val *= v
            total.append(val)
        return math.fsum(total)

    lhs, rhs = side("lhs", facs), side("rhs", rfacs)
    scale = max(abs(lhs), abs(rhs), 1.0)
    dev = abs(lhs - rhs) / scale
    return {"n": list(ext.n), "npp": list(ext.npp), "lhs": lhs, "rhs": rhs,
            "rel_dev": dev, "equal": dev <= tol}


def dress_from_spaces(lam: Sequence[float], mu: Sequence[float]) -> list[DressParams]:
    """Per-factor dressing built from per-space ``lambda_i, mu_i`` (i = 1..6)."""
    return [DressParams((lam[a], lam[b], lam[c]), (mu[a], mu[b], mu[c])) for a, b, c in LHS_ORDER]


def all_externals(max_index: int) -> Iterator[TetraExternal]:
    rng = range(max_index + 1)
    for t in itertools.product(rng, repeat=12):
        yield TetraExternal(t[:6], t[6:])


def charge_groups(max_index: int) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
    groups: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for t in itertools.product(range(max_index + 1), repeat=6):
        groups.setdefault(conserved_charges(t), []).append(t)
    return groups


def nontrivial_externals(max_index: int) -> Iterator[TetraExternal]:
    """Externals with matching conserved charges, in lexicographic order of ``n``."""
    groups = charge_groups(max_index)
    for n in itertools.product(range(max_index + 1), repeat=6):
        for npp in groups[conserved_charges(n)]:
            yield TetraExternal(n, npp)


def _check_chunk(args: tuple[list[tuple[int, ...]], int]) -> tuple[int, list[dict]]:
    ns, max_index = args
    groups = charge_groups(max_index)
    count, failures = 0, []
    for n in ns:
        for npp in groups[conserved_charges(n)]:
            count += 1
            rep = verify_tetrahedron(TetraExternal(n, npp))
            if not rep.equal:
                failures.append(rep.to_json())
    return count, failures


def sweep(max_index: int, *, exhaustive: bool = True, samples: int = 0, seed: int = 0,
          workers: int = 1) -> dict:
    """Check every (or a random sample of) external tuple with entries <= max_index.

    Tuples whose conserved charges differ between the unprimed and
    double-primed sides have both sides identically zero, so the exhaustive
    sweep only evaluates tuples inside a common charge group and counts the
    rest as checked.  ``workers > 1`` splits the exhaustive sweep over
    processes; results are merged in a fixed order.
    """
    failures = []
    nontrivial = 0
    if exhaustive:
        checked = (max_index + 1) ** 12
        ns = list(itertools.product(range(max_index + 1), repeat=6))
        if workers > 1:
            from concurrent.futures import ProcessPoolExecutor

            size = max(1, len(ns) // (4 * workers))
            chunks = [(ns[a:a + size], max_index) for a in range(0, len(ns), size)]
            with ProcessPoolExecutor(workers) as pool:
                results = list(pool.map(_check_chunk, chunks))
        else:
            results = [_check_chunk((ns, max_index))]
        for count, bad in results:
            nontrivial += count
            failures.extend(bad)
    else:
        checked = samples
        for ext in _sample_nontrivial(random.Random(seed), max_index, samples):
            nontrivial += 1
            rep = verify_tetrahedron(ext)
            if not rep.equal:
                failures.append(rep.to_json())
    return {"max_index": max_index, "exhaustive": exhaustive, "seed": None if exhaustive else seed,
            "checked": checked, "nontrivial": nontrivial, "failures": failures}


def _sample_nontrivial(rng: random.Random, max_index: int, samples: int) -> Iterator[TetraExternal]:
    """Random externals with matching conserved charges (the only ones that can be nonzero)."""
    got = 0
    while got < samples:
        n = tuple(rng.randint(0, max_index) for _ in range(6))
        npp = tuple(rng.randint(0, max_index) for _ in range(6))
        if conserved_charges(n) != conserved_charges(npp):
            continue
        got += 1
        yield TetraExternal(n, npp)
