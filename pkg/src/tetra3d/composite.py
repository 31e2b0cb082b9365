"""Composite 2D weights from a periodic front-to-back chain of R-factors.

``S(w)[i, j -> i', j'] = sum_k w^{k_1} prod_n R(i_n, j_n, k_n | i'_n, j'_n, k_{n+1})``
with ``k_{N+1} = k_1``.  Given ``k_1`` the chain deltas fix every ``k_n``, so
the weight is a one-dimensional series in ``k_1``.  Along that series each
factor grows like ``q^{-(j_n + i'_n) k}``, so the terms decay at the asymptotic
rate ``w q^{-(I+J)}`` and the series converges only for ``w < q^{I+J}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .qpoly import LaurentPoly
from .rmatrix import r_element

MultiSpin = tuple[int, ...]


class Divergence(ArithmeticError):
    """A k-series does not decay for the requested spectral parameter."""


def multispins(n_sites: int, charge: int) -> list[MultiSpin]:
    """Basis of the charge-``charge`` sector on ``n_sites`` sites, lexicographic."""
    if n_sites < 1 or charge < 0:
        raise ValueError("need n_sites >= 1 and charge >= 0")
    return [t for t in itertools.product(range(charge + 1), repeat=n_sites) if sum(t) == charge]


def block_dim(n_sites: int, charge: int) -> int:
    return math.comb(charge + n_sites - 1, n_sites - 1)


def r_log(idx: Sequence[int], q: float) -> float:
    """``log R(idx)`` at ``q``; ``-inf`` for a zero element.

    The lowest power is factored out first so large exponents never overflow.
    """
    p = _element(tuple(idx))
    if p.is_zero():
        return -math.inf
    e0 = p.min_exp()
    lq = math.log(q)
    rest = math.fsum(float(v) * math.exp((e - e0) * lq) for e, v in p.items())
    if rest <= 0.0:
        # positivity guarantees rest > 0; a non-positive float means cancellation
        rest = float(p.evaluate_exact(_as_fraction(q)) / _as_fraction(q) ** e0)
        if rest <= 0.0:
            raise ArithmeticError("non-positive element %r at q=%g" % (tuple(idx), q))
    return e0 * lq + math.log(rest)


def _as_fraction(q: float):
    from fractions import Fraction

    return Fraction(q)


@lru_cache(maxsize=200_000)
def _element(idx: tuple[int, ...]) -> LaurentPoly:
    return r_element(idx)


@dataclass
class SeriesResult:
    value: float
    tail_bound: float
    terms: int
    rate: float  # asymptotic term ratio w q^{-(I+J)}


def chain_offsets(j: MultiSpin, jp: MultiSpin) -> list[int] | None:
    """Offsets ``c_n`` with ``k_n = k_1 + c_n``; ``None`` if the chain cannot close."""
    c = [0]
    for a, b in zip(j, jp):
        c.append(c[-1] + a - b)
    if c[-1] != 0:
        return None
    return c


def s_weight_series(i: MultiSpin, j: MultiSpin, ip: MultiSpin, jp: MultiSpin, w: float, q: float,
                    tol: float = 1e-13, max_terms: int = 5000) -> SeriesResult:
    """Sum the k-series with a ratio-test tail bound.

    The tail after the last term ``t`` is bounded by ``t r / (1 - r)`` with
    ``r`` the larger of the recently observed term ratio and the asymptotic
    rate; summation stops once that bound is below ``tol`` times the partial
    sum.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    if w <= 0:
        raise ValueError("w must be positive")
    n = len(i)
    if not (len(j) == len(ip) == len(jp) == n):
        raise ValueError("multi-spins must have equal length")
    charge_i, charge_j = sum(i), sum(j)
    rate = w * q ** (-(charge_i + charge_j))
    if sum(ip) != charge_i or sum(jp) != charge_j:
        return SeriesResult(0.0, 0.0, 0, rate)
    if any(a + b != c + d for a, b, c, d in zip(i, j, ip, jp)):
        return SeriesResult(0.0, 0.0, 0, rate)
    c = chain_offsets(j, jp)
    if c is None:
        return SeriesResult(0.0, 0.0, 0, rate)
    kmin = max(0, -min(c))
    lw = math.log(w)
    logs = []
    total_terms = []
    k = kmin
    prev = None
    ratio_window: list[float] = []
    while True:
        lt = k * lw
        zero = False
        for s in range(n):
            v = r_log((i[s], j[s], k + c[s], ip[s], jp[s], k + c[s + 1]), q)
            if v == -math.inf:
                zero = True
                break
            lt += v
        t = 0.0 if zero else math.exp(lt) if lt < 700 else math.inf
        if t == math.inf:
            raise Divergence("term overflow at k=%d (w=%g, rate %g)" % (k, w, rate))
        total_terms.append(t)
        logs.append(lt)
        if prev is not None and prev > 0 and t > 0:
            ratio_window.append(t / prev)
            ratio_window = ratio_window[-4:]
        prev = t
        k += 1
        if len(total_terms) >= 8 and ratio_window:
            r = max(max(ratio_window), rate)
            if r >= 1.0:
                if rate >= 1.0 or len(total_terms) > 200:
                    raise Divergence("k-series does not decay: ratio %.4g at w=%g (asymptotic rate %.4g)"
                                     % (r, w, rate))
            else:
                partial = math.fsum(total_terms)
                tail = t * r / (1.0 - r)
                if tail <= tol * max(partial, 1e-300):
                    return SeriesResult(partial, tail, len(total_terms), rate)
        elif len(total_terms) >= 8 and all(x == 0.0 for x in total_terms[-8:]) and rate < 1.0:
            # every late term vanishes identically: finite sum
            return SeriesResult(math.fsum(total_terms), 0.0, len(total_terms), rate)
        if len(total_terms) >= max_terms:
            raise Divergence("no convergence after %d terms (w=%g, rate %.4g)" % (max_terms, w, rate))


def s_weight(i: MultiSpin, j: MultiSpin, ip: MultiSpin, jp: MultiSpin, w: float, q: float,
             tol: float = 1e-13) -> float:
    return s_weight_series(i, j, ip, jp, w, q, tol).value


@dataclass
class CompositeBlock:
    """Dense ``(I, J)`` block of ``S(w)``.

    Rows and columns run over ``(i, j)`` pairs in the product of the two
    lexicographic bases, ``i`` outermost: row ``(i, j)`` holds the in-state,
    column ``(i', j')`` the out-state.
    """

    n_sites: int
    charge_i: int
    charge_j: int
    w: float
    q: float
    matrix: np.ndarray
    tail_bound: float

    def __post_init__(self):
        d = block_dim(self.n_sites, self.charge_i) * block_dim(self.n_sites, self.charge_j)
        if self.matrix.shape != (d, d):
            raise ValueError("block matrix shape %r does not match charges (%d, %d)"
                             % (self.matrix.shape, self.charge_i, self.charge_j))

    @property
    def basis(self) -> list[tuple[MultiSpin, MultiSpin]]:
        return list(itertools.product(multispins(self.n_sites, self.charge_i),
                                      multispins(self.n_sites, self.charge_j)))

    def entry(self, i, j, ip, jp) -> float:
        b = self.basis
        return float(self.matrix[b.index((tuple(i), tuple(j))), b.index((tuple(ip), tuple(jp)))])

    def to_json(self) -> dict:
        return {"n": self.n_sites, "I": self.charge_i, "J": self.charge_j, "w": self.w, "q": self.q,
                "basis": [[list(a), list(b)] for a, b in self.basis],
                "matrix": self.matrix.tolist(), "tail_bound": self.tail_bound}


def composite_block(n_sites: int, charge_i: int, charge_j: int, w: float, q: float,
                    tol: float = 1e-13) -> CompositeBlock:
    basis = list(itertools.product(multispins(n_sites, charge_i), multispins(n_sites, charge_j)))
    d = len(basis)
    mat = np.zeros((d, d))
    tail = 0.0
    for r, (i, j) in enumerate(basis):
        for c, (ip, jp) in enumerate(basis):
            res = s_weight_series(i, j, ip, jp, w, q, tol)
            mat[r, c] = res.value
            tail = max(tail, res.tail_bound)
    return CompositeBlock(n_sites, charge_i, charge_j, w, q, mat, tail)


def convergence_limit(charge_i: int, charge_j: int, q: float) -> float:
    """Supremum of spectral parameters for which the ``(I, J)`` block converges."""
    return q ** (charge_i + charge_j)


def apply_horizontal_field(block: CompositeBlock, v: float, vn: Sequence[float] | float,
                           mu_exponent: float = 0.0) -> CompositeBlock:
    """Multiply entries by ``prod_n (q^{mu I} v / v_n)^{j_n}`` on the in-state ``j``."""
    if v <= 0:
        raise ValueError("v must be positive")
    if isinstance(vn, (int, float)):
        vn = [float(vn)] * block.n_sites
    if len(vn) != block.n_sites or min(vn) <= 0:
        raise ValueError("need one positive field per site")
    base = [block.q ** (mu_exponent * block.charge_i) * v / x for x in vn]
    scale = np.array([math.prod(b ** jn for b, jn in zip(base, j)) for _, j in block.basis])
    return CompositeBlock(block.n_sites, block.charge_i, block.charge_j, block.w, block.q,
                          block.matrix * scale[:, None], block.tail_bound)


# --- Yang-Baxter equation -------------------------------------------------------


def _embed(block: np.ndarray, dims: tuple[int, int, int], pair: tuple[int, int]) -> np.ndarray:
    """Lift a two-space operator to the triple product acting on spaces ``pair``."""
    d1, d2, d3 = dims
    shape = (d1, d2, d3)
    a, b = pair
    other = ({0, 1, 2} - {a, b}).pop()
    da, db = shape[a], shape[b]
    t = block.reshape(da, db, da, db)
    eye = np.eye(shape[other])
    # full[x0,x1,x2 ; y0,y1,y2]
    full = np.einsum("abcd,ef->abecdf", t, eye)
    # axes currently (a, b, other, a', b', other'); reorder to (0,1,2,0',1',2')
    order = [a, b, other]
    perm = [order.index(k) for k in range(3)]
    full = full.transpose(perm + [p + 3 for p in perm])
    n = d1 * d2 * d3
    return full.reshape(n, n)


def verify_ybe_block(n_sites: int, charge_i: int, charge_j: int, charge_jbar: int,
                     w: float, wp: float, q: float, tol: float = 1e-9,
                     field: tuple[float, Sequence[float], float] | None = None) -> dict:
    """Compare ``S12(w) S13(w') S23(w'/w)`` with ``S23(w'/w) S13(w') S12(w)``.

    Space 1 carries charge ``I``, space 2 ``J``, space 3 ``Jbar``.  ``field``
    ``(v, v_n, mu)`` applies the horizontal field to the blocks on (1, 2)
    and (1, 3).
    """
    b12 = composite_block(n_sites, charge_i, charge_j, w, q)
    b13 = composite_block(n_sites, charge_i, charge_jbar, wp, q)
    b23 = composite_block(n_sites, charge_j, charge_jbar, wp / w, q)
    if field is not None:
        v, vn, mu = field
        b12 = apply_horizontal_field(b12, v, vn, mu)
        b13 = apply_horizontal_field(b13, v, vn, mu)
    dims = (block_dim(n_sites, charge_i), block_dim(n_sites, charge_j), block_dim(n_sites, charge_jbar))
    s12 = _embed(b12.matrix, dims, (0, 1))
    s13 = _embed(b13.matrix, dims, (0, 2))
    s23 = _embed(b23.matrix, dims, (1, 2))
    lhs = s12 @ s13 @ s23
    rhs = s23 @ s13 @ s12
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
    dev = float(np.abs(lhs - rhs).max() / scale)
    return {"n": n_sites, "I": charge_i, "J": charge_j, "Jbar": charge_jbar, "w": w, "wp": wp, "q": q,
            "rel_dev": dev, "tail_bound": max(b12.tail_bound, b13.tail_bound, b23.tail_bound),
            "passed": dev <= tol}


def ybe_domain_ok(charge_i: int, charge_j: int, charge_jbar: int, w: float, wp: float, q: float,
                  margin: float = 0.8) -> bool:
    """All three blocks of the YBE converge with a safety ``margin`` on the rate."""
    return (w < margin * convergence_limit(charge_i, charge_j, q)
            and wp < margin * convergence_limit(charge_i, charge_jbar, q)
            and wp / w < margin * convergence_limit(charge_j, charge_jbar, q))


def random_domain_pair(rng, charge_i: int, charge_j: int, charge_jbar: int, q: float,
                       margin: float = 0.8) -> tuple[float, float]:
    """Draw ``(w, w')`` so that all three YBE blocks converge (see :func:`ybe_domain_ok`)."""
    w = margin * convergence_limit(charge_i, charge_j, q) * rng.uniform(0.2, 0.95)
    top = min(convergence_limit(charge_i, charge_jbar, q),
              w * convergence_limit(charge_j, charge_jbar, q))
    wp = margin * top * rng.uniform(0.2, 0.95)
    return w, wp
