"""Matrix elements of the positive 3D R-matrix.

Elements are indexed ``R(n1, n2, n3 | n1p, n2p, n3p)`` with the unprimed
triple as the row (``<n1,n2,n3| R |n1p,n2p,n3p>``).  The pole-free double
Pochhammer sum is the canonical definition; the Q-polynomial recurrence and
the terminating 2phi1 form are kept as independent oracles.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from .qpoly import ONE, ZERO, LaurentPoly, poly_eval, poly_sum, q_pochhammer


class PoleDomain(ValueError):
    """The hypergeometric form has a pole at the requested parameters."""


class SpinTuple6(NamedTuple):
    n1: int
    n2: int
    n3: int
    n1p: int
    n2p: int
    n3p: int

    @classmethod
    def parse(cls, text: str) -> "SpinTuple6":
        parts = [int(t) for t in text.replace("|", ",").split(",") if t.strip()]
        if len(parts) != 6:
            raise ValueError("expected six comma separated integers, got %r" % text)
        return cls.of(parts)

    @classmethod
    def of(cls, idx: Sequence[int]) -> "SpinTuple6":
        t = cls(*(int(x) for x in idx))
        if min(t) < 0:
            raise ValueError("spins must be non-negative: %r" % (tuple(t),))
        return t


def conserves(idx: Sequence[int]) -> bool:
    n1, n2, n3, m1, m2, m3 = idx
    return n1 + n2 == m1 + m2 and n2 + n3 == m2 + m3


def _gauss_ratio(a: int, m: int) -> LaurentPoly:
    """``(q**a; q**2)_m / (q**2; q**2)_m`` by exact division."""
    num = q_pochhammer(a, m)
    if num.is_zero():
        return ZERO
    return num.divexact(q_pochhammer(2, m))


# Plain dicts as memo tables: single get/set operations are atomic under the
# GIL, so concurrent readers and writers at worst recompute an entry.  The
# tables are also what the on-disk cache saves and restores.
R_MEMO: dict[tuple[int, ...], LaurentPoly] = {}
Q_MEMO: dict[tuple[int, int, int, int], LaurentPoly] = {}


def _r_element(n1: int, n2: int, n3: int, m1: int, m2: int, m3: int) -> LaurentPoly:
    if n1 + n2 != m1 + m2 or n2 + n3 != m2 + m3:
        return ZERO
    key = (n1, n2, n3, m1, m2, m3)
    hit = R_MEMO.get(key)
    if hit is not None:
        return hit
    R_MEMO[key] = out = _r_element_sum(n1, n2, n3, m1, m2, m3)
    return out


def _r_element_sum(n1: int, n2: int, n3: int, m1: int, m2: int, m3: int) -> LaurentPoly:
    terms = []
    for r in range(n2 + 1):
        left = _gauss_ratio(-2 * m1, n2 - r)
        if left.is_zero():
            continue
        terms.append((left * _gauss_ratio(2 + 2 * n1, r)).shift(-2 * r * (n3 + m1 + 1)))
    pref = n2 * (n2 + 1) - (n2 - m1) * (n2 - m3)
    return poly_sum(terms).shift(pref)


def r_element(idx: Sequence[int]) -> LaurentPoly:
    """Exact element from the pole-free sum; zero off the conservation laws."""
    n1, n2, n3, m1, m2, m3 = idx
    if min(idx) < 0:
        raise ValueError("spins must be non-negative: %r" % (tuple(idx),))
    return _r_element(n1, n2, n3, m1, m2, m3)


def r_value(idx: Sequence[int], q: float) -> float:
    return poly_eval(r_element(idx), q)


# --- Q-polynomial oracles ----------------------------------------------------


def q_poly_recursive(n: int, a1: int, a2: int, a3: int) -> LaurentPoly:
    """``Q_n(q**(-2 a1), q**(-2 a2), q**(-2 a3))`` from the three-term recurrence.

    Shifting ``x -> x q**2`` lowers ``a1`` by one.  Whenever a shifted argument
    would go negative its coefficient ``(x - 1)`` or ``(y - 1)`` vanishes, so
    the recursion never leaves the non-negative lattice.
    """
    if min(n, a1, a2, a3) < 0:
        raise ValueError("arguments must be non-negative")
    if n == 0:
        return ONE
    key = (n, a1, a2, a3)
    hit = Q_MEMO.get(key)
    if hit is not None:
        return hit
    Q_MEMO[key] = out = _q_step(n, a1, a2, a3)
    return out


def _q_step(n: int, a1: int, a2: int, a3: int) -> LaurentPoly:
    m = n - 1
    out = ZERO
    if a1 > 0 and a3 > 0:
        coef = LaurentPoly({-2 * a1: 1, 0: -1}) * LaurentPoly({-2 * a3: 1, 0: -1})
        out = out + coef * q_poly_recursive(m, a1 - 1, a2, a3 - 1)
    if a2 > 0:
        coef = LaurentPoly({-2 * (a1 + a3 + a2): 1, -2 * (a1 + a3): -1}).shift(2 * m)
        out = out + coef * q_poly_recursive(m, a1, a2 - 1, a3)
    return out


def q_poly_hypergeometric(n: int, a1: int, a2: int, a3: int) -> LaurentPoly:
    """Terminating 2phi1 expression for ``Q_n``; defined only for ``n <= a1``.

    For ``a1 < n`` the lower parameter ``q**(2 - 2n + 2 a1)`` hits a
    non-positive power of ``q**2`` inside the sum and :class:`PoleDomain` is
    raised.
    """
    if min(n, a1, a2, a3) < 0:
        raise ValueError("arguments must be non-negative")
    if n == 0:
        return ONE
    c_exp = 2 - 2 * n + 2 * a1
    if any(c_exp + 2 * j == 0 for j in range(n)):
        raise PoleDomain("2phi1 lower parameter q^%d meets a pole for n=%d" % (c_exp, n))
    b_exp = 2 - 2 * n + 2 * a1 + 2 * a2
    z_exp = 2 * n - 2 * a2 - 2 * a3
    pp_n = q_pochhammer(2, n)
    c_n = q_pochhammer(c_exp, n)
    numer = []
    for k in range(n + 1):
        t = q_pochhammer(-2 * n, k) * q_pochhammer(b_exp, k)
        if t.is_zero():
            continue
        # multiply by the cofactors (p;p)_n/(p;p)_k and (c;p)_n/(c;p)_k
        t = t * q_pochhammer(2 + 2 * k, n - k) * q_pochhammer(c_exp + 2 * k, n - k)
        numer.append(t.shift(z_exp * k))
    total = poly_sum(numer) * q_pochhammer(-2 * a1, n)
    return total.divexact(pp_n * c_n)


def r_element_from_q(idx: Sequence[int]) -> LaurentPoly:
    """Assemble an element from ``Q_{n2}`` via the recurrence (oracle path)."""
    n1, n2, n3, m1, m2, m3 = idx
    if not conserves(idx):
        return ZERO
    pref = n2 * (n2 + 1) - (n2 - m1) * (n2 - m3)
    return (q_poly_recursive(n2, m1, m2, m3).shift(pref)).divexact(q_pochhammer(2, n2))


# --- symmetries ----------------------------------------------------------------


Element = Callable[[Sequence[int]], LaurentPoly]


def _tuples(maxn: int):
    rng = range(maxn + 1)
    for n1, n2, n3, m1, m2 in itertools.product(rng, repeat=5):
        # the conservation laws fix n3p; anything else is zero on both sides
        m3 = n2 + n3 - m2
        if 0 <= m3 <= maxn and n1 + n2 == m1 + m2:
            yield (n1, n2, n3, m1, m2, m3)


def verify_symmetry_P13(maxn: int, element: Element = r_element) -> dict:
    """Exchange of the first and third spaces: ``R(n1,n2,n3|..) = R(n3,n2,n1|..)``.

    Off the conservation laws both sides vanish by construction, so only
    conserving tuples are compared; ``checked`` counts every tuple.
    """
    violations, compared = [], 0
    for idx in _tuples(maxn):
        n1, n2, n3, m1, m2, m3 = idx
        compared += 1
        lhs, rhs = element(idx), element((n3, n2, n1, m3, m2, m1))
        if lhs != rhs:
            violations.append({"idx": list(idx), "lhs": lhs.to_json(), "rhs": rhs.to_json()})
    return {"maxn": maxn, "checked": (maxn + 1) ** 6, "compared": compared,
            "violations": violations, "passed": not violations}


def transpose_weight(n: int) -> LaurentPoly:
    """Diagonal entry ``q^{-n^2} (q^2;q^2)_n``."""
    return q_pochhammer(2, n).shift(-n * n)


def verify_symmetry_transpose(maxn: int, element: Element = r_element) -> dict:
    """Partial transpose in the third space with the diagonal weights.

    Checked elementwise as
    ``R(n2,n1,n3'|n2',n1',n3) S(n3') = q^{n2-n1} S(n3) R(n1,n2,n3|n1',n2',n3')``
    with ``S(n) = q^{-n^2}(q^2;q^2)_n``.
    """
    violations, compared = [], 0
    for idx in _tuples(maxn):
        n1, n2, n3, m1, m2, m3 = idx
        compared += 1
        lhs = element((n2, n1, m3, m2, m1, n3)) * transpose_weight(m3)
        rhs = (element(idx) * transpose_weight(n3)).shift(n2 - n1)
        if lhs != rhs:
            violations.append({"idx": list(idx), "lhs": lhs.to_json(), "rhs": rhs.to_json()})
    return {"maxn": maxn, "checked": (maxn + 1) ** 6, "compared": compared,
            "violations": violations, "passed": not violations}


# --- dressing and similarity --------------------------------------------------


@dataclass(frozen=True)
class DressParams:
    """Edge weights ``lambda_i, mu_i`` for one R-factor acting in spaces (i, j, k).

    The three entries of ``lam`` and ``mu`` refer to the first, second and
    third space of the factor respectively.
    """

    lam: tuple[float, float, float]
    mu: tuple[float, float, float]

    def __post_init__(self):
        if min(self.lam) <= 0 or min(self.mu) <= 0:
            raise ValueError("dressing parameters must be positive")


def dress_factor(idx: Sequence[int], d: DressParams) -> float:
    """``(mu_k/lam_i)^{N_j} (lam_j/lam_k)^{N_i} (mu_i/mu_j)^{N_k}`` on the in-state.

    The left operator factor acts on the row (unprimed) occupation, the right
    factors on the column (primed) occupation.
    """
    n1, n2, n3, m1, m2, m3 = idx
    li, lj, lk = d.lam
    mi, mj, mk = d.mu
    return (mk / li) ** n2 * (lj / lk) ** m1 * (mi / mj) ** m3


def r_element_dressed(idx: Sequence[int], d: DressParams, q: float) -> float:
    val = r_value(idx, q)
    if val == 0.0:
        return 0.0
    return dress_factor(idx, d) * val


def similarity_transform(idx: Sequence[int], c1: float, c2: float, c3: float, q: float) -> float:
    n1, n2, n3, m1, m2, m3 = idx
    if min(c1, c2, c3) <= 0:
        raise ValueError("similarity constants must be positive")
    return c1 ** (n1 - m1) * c2 ** (n2 - m2) * c3 ** (n3 - m3) * r_value(idx, q)


# --- asymptotics ---------------------------------------------------------------


def leading_exponent(idx: Sequence[int]) -> int:
    n1, n2, n3, m1, m2, m3 = idx
    return -n1 * n2 - m1 * m3 - n2 * n3


def asymptotic_exponent_check(base: Sequence[int], scales: Sequence[int], q: float = 0.5) -> dict:
    """Compare ``log|R| / log q`` along ``scale * base`` with the quadratic law.

    The residual ``e(L) - leading`` must grow at most linearly in the scale
    ``L``; the report carries ``residual / L`` for each scale and the spread
    of those ratios.
    """
    if not conserves(base):
        raise ValueError("base tuple violates the conservation laws")
    rows = []
    for lam in scales:
        idx = [lam * x for x in base]
        p = r_element(idx)
        # exact lowest exponent dominates as q -> 0; evaluate in log form
        lq = math.log(q)
        lead_e = p.min_exp()
        rest = LaurentPoly({e - lead_e: v for e, v in p.items()})
        val = poly_eval(rest, q) if rest.max_exp() * abs(lq) < 700 else float(rest.coeffs[0])
        e_val = lead_e + math.log(abs(val)) / lq
        resid = e_val - leading_exponent(idx)
        rows.append({"scale": lam, "exponent": e_val, "leading": leading_exponent(idx),
                     "residual": resid, "residual_per_scale": resid / lam})
    ratios = [abs(r["residual_per_scale"]) for r in rows]
    bound = max(ratios) if ratios else 0.0
    linear = len(rows) < 2 or all(abs(r["residual"]) <= (bound + 1.0) * r["scale"] for r in rows)
    return {"base": list(base), "rows": rows, "max_residual_per_scale": bound, "linear": linear}
