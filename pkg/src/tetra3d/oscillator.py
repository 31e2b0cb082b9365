"""Truncated Fock-space check of the q-oscillator map realised by R.

Generators act in the representation where ``k = q^(-N-1/2)``,
``a-|n> = |n+1>`` and ``a+|n> = (1 - q^(-2n))|n-1>``.  Half-integer powers of
``q`` are handled by working in ``s = q^(1/2)``: every polynomial here is a
Laurent polynomial in ``s``.

With ``R`` indexed as ``<n1,n2,n3|R|n1',n2',n3'>`` the check for a generator
combination ``x`` with image ``x'`` is ``x R = R x'`` on matrix elements
``<m| . |n>`` whose indices sit at least two steps below the cutoff in every
factor; there the truncated products are exact because no monomial shifts an
occupation number by more than one.

The positive R realises the image of ``a_2`` with the opposite overall sign,
i.e. the map composed with the automorphism ``a_2 -> -a_2`` (a ``(-1)^N``
change of basis in the second space).  ``a2_sign=+1`` reproduces the literal
form and fails; it is kept as a negative control.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable

from .qpoly import LaurentPoly, poly_sum
from .rmatrix import r_element

State = tuple[int, int, int]
# a word is a tuple of (op, space) applied right-to-left; op in {"k", "k-", "a+", "a-"}
Word = tuple[tuple[str, int], ...]
Expr = list[tuple[LaurentPoly, Word]]


class CutoffTooSmall(ValueError):
    pass


SAFE_MARGIN = 2


def _s(e: int) -> LaurentPoly:
    return LaurentPoly({e: 1})


def _apply_op(op: str, space: int, state: State) -> tuple[LaurentPoly, State] | None:
    n = state[space]
    if op == "k":
        return _s(-2 * n - 1), state
    if op == "a-":
        new = list(state)
        new[space] = n + 1
        return _s(0), tuple(new)
    if op == "a+":
        if n == 0:
            return None
        new = list(state)
        new[space] = n - 1
        return LaurentPoly({0: 1, -4 * n: -1}), tuple(new)
    raise ValueError(op)


def apply_expr(expr: Expr, state: State, cutoff: int) -> dict[State, LaurentPoly]:
    """Act with ``expr`` on ``|state>`` inside the cube ``[0, cutoff]^3``."""
    out: dict[State, list[LaurentPoly]] = {}
    for coef, word in expr:
        amp, st = coef, state
        for op, space in reversed(word):
            res = _apply_op(op, space, st)
            if res is None:
                amp = None
                break
            f, st = res
            amp = amp * f
            if max(st) > cutoff:
                amp = None
                break
        if amp is None or amp.is_zero():
            continue
        out.setdefault(st, []).append(amp)
    return {st: p for st, terms in out.items() if not (p := poly_sum(terms)).is_zero()}


@lru_cache(maxsize=None)
def _r_s(idx: tuple[int, ...]) -> LaurentPoly:
    return r_element(idx).substitute_power(2)


def _r_row(m: State, cutoff: int) -> dict[State, LaurentPoly]:
    """Nonzero ``<m|R|p>`` with ``p`` inside the cube."""
    n1, n2, n3 = m
    out = {}
    for p2 in range(0, min(n1 + n2, n2 + n3) + 1):
        p = (n1 + n2 - p2, p2, n2 + n3 - p2)
        if max(p) > cutoff:
            continue
        val = _r_s(m + p)
        if not val.is_zero():
            out[p] = val
    return out


def _mono(coef_exp: int, *word, coef: int = 1) -> tuple[LaurentPoly, Word]:
    return LaurentPoly({coef_exp: coef}), tuple(word)


def relations(k3_power: int = 2, a2_sign: int = -1) -> dict[str, tuple[Expr, Expr]]:
    """Generator combinations and their images, as ``name -> (x, x')``.

    ``k3_power`` selects the power of ``k_3`` in the last term of the
    ``(k_2')^2`` relation; 2 is the consistent reading, 3 is the literal one
    kept as a negative control.
    """
    k1, k2, k3 = ("k", 0), ("k", 1), ("k", 2)
    A = {(s, i): ("a" + s, i) for s in "+-" for i in range(3)}
    rel: dict[str, tuple[Expr, Expr]] = {}
    for sg, op in (("+", "-"), ("-", "+")):
        rel["k2' a1'%s" % sg] = (
            [_mono(0, k2, A[sg, 0])],
            [_mono(0, k3, A[sg, 0]), _mono(0, k1, A[sg, 1], A[op, 2])],
        )
        rel["a2'%s" % sg] = (
            [_mono(0, A[sg, 1])],
            [_mono(0, A[sg, 0], A[sg, 2], coef=a2_sign), _mono(0, k1, k3, A[sg, 1], coef=-a2_sign)],
        )
        rel["k2' a3'%s" % sg] = (
            [_mono(0, k2, A[sg, 2])],
            [_mono(0, k1, A[sg, 2]), _mono(0, k3, A[op, 0], A[sg, 1])],
        )
    # q = s^2, so q^{-1} -> s^-2 and q -> s^2
    rel["(k2')^2"] = (
        [_mono(0, k2, k2)],
        [
            _mono(0, k1, k1, k2, k2, k3, k3),
            _mono(-2, k1, k3, A["+", 0], A["-", 1], A["+", 2]),
            _mono(2, k1, k3, A["-", 0], A["+", 1], A["-", 2]),
            _mono(0, k1, k1),
            _mono(0, k3, k3),
            _mono(-2, k1, k1, *([k3] * k3_power), coef=-1),
            _mono(2, k1, k1, *([k3] * k3_power), coef=-1),
        ],
    )
    rel["k1' k2'"] = ([_mono(0, k1, k2)], [_mono(0, k1, k2)])
    rel["k2' k3'"] = ([_mono(0, k2, k3)], [_mono(0, k2, k3)])
    return rel


def safe_window(cutoff: int) -> list[State]:
    top = cutoff - SAFE_MARGIN
    if top < 0:
        raise CutoffTooSmall("cutoff %d leaves an empty safe window" % cutoff)
    return list(itertools.product(range(top + 1), repeat=3))


def check_relation(x: Expr, xp: Expr, cutoff: int) -> list[dict]:
    """Return mismatching window entries of ``x R`` versus ``R x'``."""
    window = safe_window(cutoff)
    cube = list(itertools.product(range(cutoff + 1), repeat=3))
    x_rows: dict[State, dict[State, LaurentPoly]] = {}
    for p in cube:
        for m, amp in apply_expr(x, p, cutoff).items():
            x_rows.setdefault(m, {})[p] = amp
    bad = []
    for n in window:
        xp_col = apply_expr(xp, n, cutoff)
        for m in window:
            lhs_terms = []
            for p, amp in x_rows.get(m, {}).items():
                rp = _r_s(p + n)
                if not rp.is_zero():
                    lhs_terms.append(amp * rp)
            lhs = poly_sum(lhs_terms)
            r_row = _r_row(m, cutoff)
            rhs = poly_sum(r_row[p] * amp for p, amp in xp_col.items() if p in r_row)
            if lhs != rhs:
                bad.append({"row": list(m), "col": list(n), "lhs": lhs.to_json(), "rhs": rhs.to_json()})
    return bad


def verify_oscillator_map(cutoff: int, k3_power: int = 2, a2_sign: int = -1,
                          names: Iterable[str] | None = None) -> dict:
    if cutoff < SAFE_MARGIN:
        raise CutoffTooSmall("cutoff must be at least %d" % SAFE_MARGIN)
    rel = relations(k3_power, a2_sign)
    report = {"cutoff": cutoff, "k3_power": k3_power, "a2_sign": a2_sign,
              "window_size": len(safe_window(cutoff)),
              "relations": {}, "failures": []}
    for name in (names or rel):
        x, xp = rel[name]
        bad = check_relation(x, xp, cutoff)
        report["relations"][name] = {"mismatches": len(bad)}
        report["failures"].extend({"relation": name, **b} for b in bad[:5])
    report["passed"] = not report["failures"]
    return report
