"""Periodic cubic lattice: spin fields, partition functions and transfer matrices.

Coordinates are 0-based: ``i[l][m][n]``, ``j[l][m][n]``, ``k[l][m][n]`` with
``l < L`` (height), ``m < M`` (left to right) and ``n < N`` (front to back).
The vertex ``(l, m, n)`` carries the weight
``R(i[l][m][n], j[l][m][n], k[l][m][n] | i[l+1][m][n], j[l][m+1][n], k[l][m][n+1])``
with every index taken periodically.

A layer state is the ``M x N`` array of vertical spins of one horizontal
layer, flattened row-major (``m`` outer).  Layer states of a sector are
listed in lexicographic order of that flat tuple.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .composite import Divergence, r_log, s_weight
from .qpoly import LaurentPoly
from .rmatrix import r_element, r_value

Array3 = tuple[tuple[tuple[int, ...], ...], ...]
LayerState = tuple[int, ...]


class Inadmissible(ValueError):
    """A spin field violates a local conservation law."""


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LatticeSpec:
    L: int
    M: int
    N: int
    q: float = 0.5
    u: float = 0.5
    v: float = 0.3
    w: float = 0.3
    mu: float = 1.0
    mu123: tuple[float, float, float] | None = None
    v_inh: tuple[float, ...] | None = None
    w_inh: tuple[float, ...] | None = None
    cutoff: int | None = None
    tol: float = 1e-10

    def __post_init__(self):
        if min(self.L, self.M, self.N) < 1:
            raise ValueError("lattice sizes must be positive")
        if not 0 < self.q < 1:
            raise ValueError("q must lie in (0, 1)")
        if min(self.u, self.v, self.w) <= 0:
            raise ValueError("u, v, w must be positive")
        if self.cutoff is not None and self.cutoff < 0:
            raise ValueError("cutoff must be non-negative")
        for name, vals, size in (("v_inh", self.v_inh, self.N), ("w_inh", self.w_inh, self.M)):
            if vals is None:
                continue
            if len(vals) != size or min(vals) <= 0:
                raise ValueError("%s needs %d positive entries" % (name, size))
            if abs(math.prod(vals) - 1.0) > 1e-12:
                raise ValueError("%s must multiply to 1" % name)

    @property
    def mus(self) -> tuple[float, float, float]:
        return self.mu123 if self.mu123 is not None else (self.mu, self.mu, self.mu)

    def with_(self, **kw) -> "LatticeSpec":
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        data.update(kw)
        return LatticeSpec(**data)


# --- spin fields ----------------------------------------------------------------


@dataclass(frozen=True)
class SpinField3D:
    i: Array3
    j: Array3
    k: Array3

    @property
    def shape(self) -> tuple[int, int, int]:
        return len(self.i), len(self.i[0]), len(self.i[0][0])

    def vertex(self, l: int, m: int, n: int) -> tuple[int, ...]:
        L, M, N = self.shape
        return (self.i[l][m][n], self.j[l][m][n], self.k[l][m][n],
                self.i[(l + 1) % L][m][n], self.j[l][(m + 1) % M][n], self.k[l][m][(n + 1) % N])

    def vertices(self) -> Iterator[tuple[int, ...]]:
        L, M, N = self.shape
        for l, m, n in itertools.product(range(L), range(M), range(N)):
            yield self.vertex(l, m, n)


def _nest(flat: Sequence[int], L: int, M: int, N: int) -> Array3:
    return tuple(tuple(tuple(flat[(l * M + m) * N + n] for n in range(N)) for m in range(M))
                 for l in range(L))


def is_admissible(f: SpinField3D) -> bool:
    for a1, a2, a3, b1, b2, b3 in f.vertices():
        if a1 + a2 != b1 + b2 or a2 + a3 != b2 + b3:
            return False
    return True


def _prefix_range(steps: Sequence[int]) -> tuple[int, int]:
    """Min and max of the partial sums ``0, s0, s0+s1, ...`` (last total excluded)."""
    acc, lo, hi = 0, 0, 0
    for s in steps[:-1]:
        acc += s
        lo, hi = min(lo, acc), max(hi, acc)
    return lo, hi


def enumerate_fields(L: int, M: int, N: int, cap: int, sector: int | None = None) -> Iterator[SpinField3D]:
    """All admissible periodic fields with every spin in ``[0, cap]``.

    Independent of the transfer-matrix code path: vertical spins are
    enumerated outright, ``d = i[l+1] - i[l]`` must sum to zero along every
    ``m`` and ``n`` line, and ``j`` (resp. ``k``) is then fixed by its value
    on the first column (resp. first row) through ``j[m+1] = j[m] - d`` and
    ``k[n+1] = k[n] + d``.
    """
    size = L * M * N
    for flat in itertools.product(range(cap + 1), repeat=size):
        i = _nest(flat, L, M, N)
        if sector is not None and sum(flat[:M * N]) != sector:
            continue
        d = [[[i[(l + 1) % L][m][n] - i[l][m][n] for n in range(N)] for m in range(M)] for l in range(L)]
        ok = all(sum(d[l][m][n] for m in range(M)) == 0 for l in range(L) for n in range(N)) and \
            all(sum(d[l][m][n] for n in range(N)) == 0 for l in range(L) for m in range(M))
        if not ok:
            continue
        j_choices, k_choices = [], []
        for l, n in itertools.product(range(L), range(N)):
            # j[l][m][n] = j0 - (d[l][0][n] + ... + d[l][m-1][n])
            lo, hi = _prefix_range([d[l][m][n] for m in range(M)])
            j_choices.append(range(max(0, hi), min(cap, cap + lo) + 1))
        for l, m in itertools.product(range(L), range(M)):
            lo, hi = _prefix_range([d[l][m][n] for n in range(N)])
            k_choices.append(range(max(0, -lo), min(cap, cap - hi) + 1))
        for jb in itertools.product(*j_choices):
            jf = [[[0] * N for _ in range(M)] for _ in range(L)]
            for (l, n), j0 in zip(itertools.product(range(L), range(N)), jb):
                acc = j0
                for m in range(M):
                    jf[l][m][n] = acc
                    acc -= d[l][m][n]
            for kb in itertools.product(*k_choices):
                kf = [[[0] * N for _ in range(M)] for _ in range(L)]
                for (l, m), k0 in zip(itertools.product(range(L), range(M)), kb):
                    acc = k0
                    for n in range(N):
                        kf[l][m][n] = acc
                        acc += d[l][m][n]
                yield SpinField3D(i, tuple(tuple(map(tuple, x)) for x in jf),
                                  tuple(tuple(map(tuple, x)) for x in kf))


def enumerate_fields_bruteforce(L: int, M: int, N: int, cap: int) -> list[SpinField3D]:
    """Filter every assignment of all ``3 L M N`` spins (tiny lattices only)."""
    size = L * M * N
    out = []
    for flat in itertools.product(range(cap + 1), repeat=3 * size):
        f = SpinField3D(_nest(flat[:size], L, M, N), _nest(flat[size:2 * size], L, M, N),
                        _nest(flat[2 * size:], L, M, N))
        if is_admissible(f):
            out.append(f)
    return out


@dataclass(frozen=True)
class ConservedSums:
    I: int
    J: int
    K: int
    I_M: tuple[int, ...]   # I^{(M)}_n, sum over m
    I_N: tuple[int, ...]   # I^{(N)}_m, sum over n
    J_L: tuple[int, ...]   # J^{(L)}_n, sum over l
    J_N: tuple[int, ...]   # J^{(N)}_l, sum over n
    K_L: tuple[int, ...]   # K^{(L)}_m, sum over l
    K_M: tuple[int, ...]   # K^{(M)}_l, sum over m


def _unique(values: set, what: str) -> int:
    if len(values) != 1:
        raise Inadmissible("%s depends on a coordinate it should not: %r" % (what, sorted(values)))
    return values.pop()


def conserved_sums(f: SpinField3D) -> ConservedSums:
    """All one- and two-dimensional spin sums, checking their coordinate independence."""
    if not is_admissible(f):
        raise Inadmissible("local conservation violated")
    L, M, N = f.shape
    i, j, k = f.i, f.j, f.k
    I = _unique({sum(i[l][m][n] for m in range(M) for n in range(N)) for l in range(L)}, "I")
    J = _unique({sum(j[l][m][n] for l in range(L) for n in range(N)) for m in range(M)}, "J")
    K = _unique({sum(k[l][m][n] for l in range(L) for m in range(M)) for n in range(N)}, "K")
    I_M = tuple(_unique({sum(i[l][m][n] for m in range(M)) for l in range(L)}, "I^(M)") for n in range(N))
    I_N = tuple(_unique({sum(i[l][m][n] for n in range(N)) for l in range(L)}, "I^(N)") for m in range(M))
    J_L = tuple(_unique({sum(j[l][m][n] for l in range(L)) for m in range(M)}, "J^(L)") for n in range(N))
    # summing j here; no other spin carries these indices
    J_N = tuple(_unique({sum(j[l][m][n] for n in range(N)) for m in range(M)}, "J^(N)") for l in range(L))
    K_L = tuple(_unique({sum(k[l][m][n] for l in range(L)) for n in range(N)}, "K^(L)") for m in range(M))
    K_M = tuple(_unique({sum(k[l][m][n] for m in range(M)) for n in range(N)}, "K^(M)") for l in range(L))
    return ConservedSums(I, J, K, I_M, I_N, J_L, J_N, K_L, K_M)


def u_functional(f: SpinField3D) -> int:
    s = conserved_sums(f)
    return (sum(a * b for a, b in zip(s.J_N, s.K_M)) + sum(a * b for a, b in zip(s.I_N, s.K_L))
            + sum(a * b for a, b in zip(s.I_M, s.J_L)))


def d_field(f: SpinField3D) -> list[list[list[int]]]:
    L, M, N = f.shape
    return [[[f.i[(l + 1) % L][m][n] - f.i[l][m][n] for n in range(N)] for m in range(M)] for l in range(L)]


def s_functional_direct(f: SpinField3D) -> int:
    """The triple sum over all vertices written with partial sums of ``d``."""
    d = d_field(f)
    L, M, N = f.shape
    total = 0
    for l, m, n in itertools.product(range(L), range(M), range(N)):
        side = sum(d[l][s][n] for s in range(m))
        below = sum(d[r][m][n] for r in range(l))
        front = sum(d[l][m][t] for t in range(n))
        below_incl = below + d[l][m][n]
        front_incl = front + d[l][m][n]
        total += side * (below + front) - below_incl * front_incl
    return total


def s_functional_pairs(f: SpinField3D) -> int:
    """Twice the sum of ``d d'`` over ordered coordinate pairs of the set C."""
    d = d_field(f)
    L, M, N = f.shape
    total = 0
    for l1, l2 in itertools.combinations_with_replacement(range(L - 1), 2):
        for m2, m1 in itertools.combinations_with_replacement(range(M - 1), 2):
            for n1, n2 in itertools.combinations_with_replacement(range(N - 1), 2):
                total += d[l1][m1][n1] * d[l2][m2][n2]
    return 2 * total


def s_functional(f: SpinField3D) -> int:
    """Quadratic functional of the differences; raises if the two forms disagree."""
    a, b = s_functional_direct(f), s_functional_pairs(f)
    if a != b:
        raise ArithmeticError("S forms disagree: %d vs %d" % (a, b))
    return a


# --- weights -----------------------------------------------------------------------


def field_weight(f: SpinField3D, spec: LatticeSpec) -> float:
    """Summand of the restricted partition function for one field."""
    q = spec.q
    s = conserved_sums(f)
    val = q ** (spec.mu * u_functional(f)) * spec.v ** s.J * spec.w ** s.K
    for idx in f.vertices():
        r = r_value(idx, q)
        if r == 0.0:
            return 0.0
        val *= q ** idx[1] * r
    return val


def field_weight_exact(f: SpinField3D, spec: LatticeSpec) -> LaurentPoly:
    """Exact product of ``q^j R`` over vertices (fugacity factors excluded)."""
    out = LaurentPoly({0: 1})
    for idx in f.vertices():
        out = out * r_element(idx).shift(idx[1])
    return out


@dataclass
class PartitionResult:
    value: float
    tail_bound: float
    method: str
    terms: int = 0
    cutoff_series: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"value": self.value, "tail_bound": self.tail_bound, "method": self.method,
                "terms": self.terms, "cutoff_series": self.cutoff_series}


def partition_enumerated(spec: LatticeSpec, sector: int, cap: int) -> PartitionResult:
    """Direct sum over all admissible periodic fields with spins ``<= cap``."""
    terms = [field_weight(f, spec) for f in enumerate_fields(spec.L, spec.M, spec.N, cap, sector)]
    return PartitionResult(math.fsum(terms), 0.0, "enumeration", len(terms))


# --- transfer matrix ---------------------------------------------------------------


def layer_states(M: int, N: int, sector: int, cap: int | None = None) -> list[LayerState]:
    top = sector if cap is None else min(sector, cap)
    return [t for t in itertools.product(range(top + 1), repeat=M * N) if sum(t) == sector]


def _line_sums(state: LayerState, M: int, N: int) -> tuple[list[int], list[int]]:
    """``I^{(N)}_m`` (sum over n) and ``I^{(M)}_n`` (sum over m)."""
    rows = [sum(state[m * N + n] for n in range(N)) for m in range(M)]
    cols = [sum(state[m * N + n] for m in range(M)) for n in range(N)]
    return rows, cols


def _bounded_vectors(size: int, lows: Sequence[int], highs: Sequence[int], total_max: int) -> Iterator[tuple[int, ...]]:
    def rec(pos, budget, acc):
        if pos == size:
            yield tuple(acc)
            return
        for x in range(lows[pos], min(highs[pos], lows[pos] + budget) + 1):
            acc.append(x)
            yield from rec(pos + 1, budget - (x - lows[pos]), acc)
            acc.pop()

    slack = total_max - sum(lows)
    if slack < 0 or any(h < lo for lo, h in zip(lows, highs)):
        return iter(())
    return rec(0, slack, [])


def layer_terms(i: LayerState, ip: LayerState, M: int, N: int, q: float, mu: float,
                jk_cap: int | None, shell: int) -> Iterator[tuple[int, int, float]]:
    """Yield ``(J, K, weight)`` for every layer configuration with ``J, K <= shell``.

    ``weight`` excludes ``v^J w^K``.  With ``jk_cap`` every horizontal spin
    of the layer is bounded by it.
    """
    d = [[ip[m * N + n] - i[m * N + n] for n in range(N)] for m in range(M)]
    if any(sum(d[m][n] for m in range(M)) for n in range(N)):
        return
    if any(sum(d[m][n] for n in range(N)) for m in range(M)):
        return
    rows, cols = _line_sums(i, M, N)
    lq = math.log(q)
    big = shell if jk_cap is None else jk_cap
    j_lo, j_hi, k_lo, k_hi = [], [], [], []
    for n in range(N):
        lo, hi = _prefix_range([d[m][n] for m in range(M)])
        # j[m][n] = j0 - prefix; need j >= 0 and (if capped) j <= cap
        j_lo.append(max(0, hi))
        j_hi.append(big + lo if jk_cap is not None else big)
    for m in range(M):
        lo, hi = _prefix_range([d[m][n] for n in range(N)])
        k_lo.append(max(0, -lo))
        k_hi.append(big - hi if jk_cap is not None else big)
    for jb in _bounded_vectors(N, j_lo, j_hi, shell):
        J = sum(jb)
        jf = [[0] * N for _ in range(M + 1)]
        for n in range(N):
            acc = jb[n]
            for m in range(M + 1):
                jf[m][n] = acc
                if m < M:
                    acc -= d[m][n]
        for kb in _bounded_vectors(M, k_lo, k_hi, shell):
            K = sum(kb)
            expo = mu * J * K + mu * sum(r * k0 for r, k0 in zip(rows, kb)) + \
                mu * sum(c * j0 for c, j0 in zip(cols, jb)) + M * J
            # log domain: interior spins may be large enough to overflow q**e
            lt = expo * lq
            for m in range(M):
                acc = kb[m]
                for n in range(N):
                    idx = (i[m * N + n], jf[m][n], acc, ip[m * N + n], jf[m + 1][n], acc + d[m][n])
                    acc += d[m][n]
                    lt += r_log(idx, q)
                    if lt == -math.inf:
                        break
                if lt == -math.inf:
                    break
            val = math.exp(lt) if lt > -math.inf else 0.0
            if val != 0.0:
                yield J, K, val


@dataclass
class TransferMatrix:
    M: int
    N: int
    sector: int
    basis: list[LayerState]
    matrix: np.ndarray
    tail_bound: float
    shells: int
    jk_cap: int | None = None

    def to_json(self) -> dict:
        return {"M": self.M, "N": self.N, "sector": self.sector, "basis": [list(b) for b in self.basis],
                "matrix": self.matrix.tolist(), "tail_bound": self.tail_bound, "shells": self.shells,
                "jk_cap": self.jk_cap}


def graded_blocks(M: int, N: int, sector: int, q: float, mu: float, *, cap: int | None = None,
                  jk_cap: int | None = None, shell: int) -> tuple[list[LayerState], dict[tuple[int, int], np.ndarray]]:
    """Coefficient matrices of ``v^J w^K`` with ``J, K <= shell``.

    Each coefficient is a finite sum, so these blocks are exact up to float
    rounding; the infinite transfer matrix is their generating series.
    """
    basis = layer_states(M, N, sector, cap)
    pos = {s: a for a, s in enumerate(basis)}
    blocks: dict[tuple[int, int], np.ndarray] = {}
    for i in basis:
        for ip in basis:
            for J, K, val in layer_terms(i, ip, M, N, q, mu, jk_cap, shell):
                blk = blocks.get((J, K))
                if blk is None:
                    blk = blocks[(J, K)] = np.zeros((len(basis), len(basis)))
                blk[pos[i], pos[ip]] += val
    return basis, blocks


def _assemble(blocks: dict, v: float, w: float, dim: int, shell: int | None = None) -> np.ndarray:
    out = np.zeros((dim, dim))
    for (J, K), blk in sorted(blocks.items()):
        if shell is None or max(J, K) <= shell:
            out += v ** J * w ** K * blk
    return out


def _shell_norms(blocks: dict, v: float, w: float, upto: int) -> list[float]:
    norms = [0.0] * (upto + 1)
    for (J, K), blk in blocks.items():
        c = max(J, K)
        if c <= upto:
            norms[c] += v ** J * w ** K * float(np.abs(blk).sum())
    return norms


def transfer_matrix(spec: LatticeSpec, sector: int, *, jk_cap: int | None = None,
                    max_shell: int = 40, min_shell: int = 6) -> TransferMatrix:
    """Layer-to-layer transfer matrix of one sector.

    With ``jk_cap`` every horizontal spin is bounded and the matrix is an
    exact finite sum.  Otherwise shells ``max(J, K) = c`` are added until the
    ratio-tested tail estimate drops below ``spec.tol``.
    """
    q, mu, v, w = spec.q, spec.mu, spec.v, spec.w
    if jk_cap is not None:
        basis, blocks = graded_blocks(spec.M, spec.N, sector, q, mu, cap=spec.cutoff,
                                      jk_cap=jk_cap, shell=jk_cap * max(spec.M, spec.N))
        return TransferMatrix(spec.M, spec.N, sector, basis, _assemble(blocks, v, w, len(basis)),
                              0.0, jk_cap * max(spec.M, spec.N), jk_cap)
    shell = min_shell
    while True:
        basis, blocks = graded_blocks(spec.M, spec.N, sector, q, mu, cap=spec.cutoff, shell=shell)
        norms = _shell_norms(blocks, v, w, shell)
        tail = _tail_estimate(norms)
        total = sum(norms)
        if tail <= spec.tol * max(total, 1e-300) or shell >= max_shell:
            break
        shell = min(max_shell, _shell_needed(norms, spec.tol * total, shell))
    if tail > spec.tol * max(total, 1e-300):
        if not math.isfinite(tail):
            raise Divergence("shell norms do not decay for v=%g, w=%g" % (v, w))
        warnings.warn("transfer-matrix tail %.3g above tolerance" % (tail / total), TruncationWarning)
    return TransferMatrix(spec.M, spec.N, sector, basis, _assemble(blocks, v, w, len(basis)),
                          tail / max(total, 1e-300), shell)


def _shell_needed(norms: Sequence[float], target: float, shell: int) -> int:
    """Smallest shell whose extrapolated tail falls below ``target``, plus a margin."""
    ratios = [b / a for a, b in zip(norms[-4:], norms[-3:]) if a > 0]
    rho = max(ratios) if ratios else 0.0
    if not 0.0 < rho < 1.0 or norms[-1] <= 0.0:
        return shell * 2
    extra = math.log(target * (1 - rho) / norms[-1]) / math.log(rho)
    return shell + max(2, int(math.ceil(extra)) + 2)


def _tail_estimate(norms: Sequence[float]) -> float:
    """Geometric extrapolation of the shell norms beyond the last one."""
    tail_terms = [x for x in norms[-4:]]
    ratios = [b / a for a, b in zip(tail_terms, tail_terms[1:]) if a > 0]
    if not ratios:
        return 0.0
    rho = max(ratios)
    if rho >= 1.0:
        return math.inf
    return norms[-1] * rho / (1.0 - rho)


def transfer_matrix_inhom(spec: LatticeSpec, sector: int, *, jk_cap: int | None = None,
                          max_j: int = 30, s_tol: float = 1e-14) -> TransferMatrix:
    """Transfer matrix assembled from composite weights, one per column ``m``.

    The horizontal multi-spins ``j_m`` on the vertical lines between columns
    are summed with total ``J`` up to ``max_j`` (or with every spin capped by
    ``jk_cap``); each column contributes ``S(q^{mu2 I_m + mu1 J} w / w_m)``.
    """
    M, N = spec.M, spec.N
    v_inh = spec.v_inh or (1.0,) * N
    w_inh = spec.w_inh or (1.0,) * M
    basis = layer_states(M, N, sector, spec.cutoff)
    mat = np.zeros((len(basis), len(basis)))
    j_top = max_j if jk_cap is None else min(max_j, jk_cap * N)
    shell_norm = [0.0] * (j_top + 1)
    for a, i in enumerate(basis):
        i_rows = [tuple(i[m * N:(m + 1) * N]) for m in range(M)]
        rows, cols = _line_sums(i, M, N)
        for b, ip in enumerate(basis):
            ip_rows = [tuple(ip[m * N:(m + 1) * N]) for m in range(M)]
            if any(rows[m] != sum(ip_rows[m]) for m in range(M)):
                continue
            for J in range(j_top + 1):
                contrib = _inhom_entry(i_rows, ip_rows, J, rows, cols, spec, v_inh, w_inh, jk_cap, s_tol)
                mat[a, b] += contrib
                shell_norm[J] += abs(contrib)
    total = float(np.abs(mat).sum())
    tail = 0.0 if jk_cap is not None else _tail_estimate(shell_norm)
    return TransferMatrix(M, N, sector, basis, mat, tail / max(total, 1e-300), j_top, jk_cap)


def _inhom_entry(i_rows, ip_rows, J, rows, cols, spec, v_inh, w_inh, jk_cap, s_tol) -> float:
    M, N, q = spec.M, spec.N, spec.q
    mu1, mu2, mu3 = spec.mus
    cap = J if jk_cap is None else min(J, jk_cap)
    total = []
    for j1 in (t for t in itertools.product(range(cap + 1), repeat=N) if sum(t) == J):
        # j_{m+1} is fixed by per-site conservation inside column m
        js = [j1]
        ok = True
        for m in range(M):
            nxt = tuple(i_rows[m][n] + js[-1][n] - ip_rows[m][n] for n in range(N))
            if min(nxt) < 0 or (jk_cap is not None and max(nxt) > jk_cap):
                ok = False
                break
            js.append(nxt)
        if not ok or js[M] != j1:
            continue
        pref = q ** (J * M)
        for n in range(N):
            pref *= (q ** (mu3 * cols[n]) * spec.v / v_inh[n]) ** j1[n]
        val = pref
        for m in range(M):
            arg = q ** (mu2 * rows[m] + mu1 * J) * spec.w / w_inh[m]
            val *= _s_capped(i_rows[m], js[m], ip_rows[m], js[m + 1], arg, q, jk_cap, s_tol)
            if val == 0.0:
                break
        total.append(val)
    return math.fsum(total)


def _s_capped(i, j, ip, jp, w, q, jk_cap, tol) -> float:
    if jk_cap is None:
        return s_weight(i, j, ip, jp, w, q, tol=tol)
    # finite chain sum with every k_n <= jk_cap
    N = len(i)
    offs = [0]
    for n in range(N):
        offs.append(offs[-1] + j[n] - jp[n])
    if offs[-1] != 0:
        return 0.0
    lo = -min(offs)
    hi = jk_cap - max(offs)
    total = []
    for k1 in range(lo, hi + 1):
        val = w ** k1
        for n in range(N):
            val *= r_value((i[n], j[n], k1 + offs[n], ip[n], jp[n], k1 + offs[n + 1]), q)
            if val == 0.0:
                break
        total.append(val)
    return math.fsum(total)


# --- partition functions via the transfer matrix ------------------------------------


def uniform_vector(dim: int) -> np.ndarray:
    return np.ones(dim)


def partition_transfer(spec: LatticeSpec, sector: int, *, jk_cap: int | None = None,
                       boundary: str = "trace") -> PartitionResult:
    """Restricted partition function from ``T^L``.

    ``boundary="trace"`` closes the vertical direction periodically;
    ``boundary="psi"`` sandwiches ``T^L`` between uniform sector vectors.
    """
    tm = transfer_matrix(spec, sector, jk_cap=jk_cap)
    power = np.linalg.matrix_power(tm.matrix, spec.L)
    if boundary == "trace":
        val = float(np.trace(power))
    elif boundary == "psi":
        psi = uniform_vector(len(tm.basis))
        val = float(psi @ power @ psi)
    else:
        raise ValueError("boundary must be 'trace' or 'psi'")
    # (1 + eps)^L - 1 bounds the relative error of the L-th power
    bound = (1.0 + tm.tail_bound) ** spec.L - 1.0
    if bound > spec.tol:
        warnings.warn("partition tail bound %.3g exceeds tolerance" % bound, TruncationWarning)
    return PartitionResult(val, bound, "transfer-%s" % boundary, len(tm.basis))


def partition_restricted(spec: LatticeSpec, sector: int, *, method: str = "transfer",
                         cap: int | None = None, boundary: str = "trace") -> PartitionResult:
    if method == "enumeration":
        if cap is None:
            raise ValueError("enumeration needs a spin cap")
        return partition_enumerated(spec, sector, cap)
    if method == "transfer":
        return partition_transfer(spec.with_(cutoff=cap) if cap is not None else spec, sector,
                                  jk_cap=cap, boundary=boundary)
    raise ValueError("unknown method %r" % method)


def partition_full(spec: LatticeSpec, max_sector: int, *, cap: int | None = None) -> PartitionResult:
    """Partial sum of ``u^I Z_I`` up to ``max_sector``; the tail estimate is heuristic."""
    terms, series, bound = [], [], 0.0
    for I in range(max_sector + 1):
        z = partition_restricted(spec, I, cap=cap)
        terms.append(spec.u ** I * z.value)
        bound += spec.u ** I * z.value * z.tail_bound
        series.append(math.fsum(terms))
    # geometric continuation of the last ratio; not a proof of convergence
    tail = 0.0
    if len(terms) >= 2 and terms[-2] > 0:
        rho = terms[-1] / terms[-2]
        tail = terms[-1] * rho / (1 - rho) if rho < 1 else math.inf
    return PartitionResult(series[-1], bound + tail, "full-heuristic", len(terms), series)


# --- commutativity ---------------------------------------------------------------------


def _rel_tail(spec: LatticeSpec, sector: int, cap: int) -> tuple[np.ndarray, float]:
    """Capped matrix and its relative distance to the next cap, extrapolated."""
    mats = [transfer_matrix(spec.with_(cutoff=None), sector, jk_cap=c).matrix for c in (cap, cap + 1, cap + 2)]
    d1 = np.linalg.norm(mats[1] - mats[0])
    d2 = np.linalg.norm(mats[2] - mats[1])
    rho = d2 / d1 if d1 > 0 else 0.0
    tail = d1 / (1 - rho) if rho < 1 else math.inf
    return mats[0], tail / np.linalg.norm(mats[0])


def verify_commutativity(spec: LatticeSpec, sector: int, pairs: Sequence[tuple[float, float]],
                         cutoffs: Sequence[int] = (1, 2, 3), noise: float = 1e-14) -> dict:
    """Commutator residual of two capped transfer matrices against the truncation bound.

    ``cutoff`` caps every horizontal spin of the layer.  The bound for each
    matrix is its extrapolated relative distance to the uncapped operator,
    and ``2 (e + e' + e e')`` then bounds the relative commutator.  A
    residual counts as decreasing when it does not exceed the previous one by
    more than ``noise``.
    """
    (v1, w1), (v2, w2) = pairs
    rows = []
    for c in cutoffs:
        t1, e1 = _rel_tail(spec.with_(v=v1, w=w1), sector, c)
        t2, e2 = _rel_tail(spec.with_(v=v2, w=w2), sector, c)
        comm = t1 @ t2 - t2 @ t1
        resid = float(np.linalg.norm(comm) / (np.linalg.norm(t1) * np.linalg.norm(t2)))
        bound = 2 * (e1 + e2 + e1 * e2)
        rows.append({"cutoff": c, "residual": resid, "tail_bound": float(bound), "dim": len(t1)})
    below = all(r["residual"] <= r["tail_bound"] for r in rows)
    decreasing = all(b["residual"] <= a["residual"] + noise for a, b in zip(rows, rows[1:]))
    return {"M": spec.M, "N": spec.N, "sector": sector, "q": spec.q, "mu": spec.mu,
            "pairs": [list(p) for p in pairs], "cutoff_series": rows,
            "below_bound": below, "decreasing": decreasing, "passed": below and decreasing}


def verify_graded_commutativity(M: int, N: int, sector: int, q: float, mu: float = 1.0,
                                shell: int = 2) -> dict:
    """Pairwise commutators of the exact coefficient blocks of ``v^J w^K``.

    Commutativity for all fugacities is equivalent to every pair of these
    blocks commuting, so this is an exact-within-rounding test of the
    untruncated claim, order by order.
    """
    basis, blocks = graded_blocks(M, N, sector, q, mu, shell=shell)
    worst, offdiag = 0.0, 0.0
    keys = sorted(blocks)
    for a, ka in enumerate(keys):
        ba = blocks[ka]
        offdiag = max(offdiag, float(np.abs(ba - np.diag(np.diag(ba))).max()))
        for kb in keys[a + 1:]:
            bb = blocks[kb]
            c = ba @ bb - bb @ ba
            worst = max(worst, float(np.abs(c).max() / (np.abs(ba).max() * np.abs(bb).max())))
    return {"M": M, "N": N, "sector": sector, "q": q, "mu": mu, "shell": shell, "dim": len(basis),
            "blocks": len(keys), "max_offdiag": offdiag, "max_rel_commutator": worst}


# --- rank-size duality -----------------------------------------------------------------


def transpose_state(state: LayerState, M: int, N: int) -> LayerState:
    """Relabel an ``M x N`` layer state as the ``N x M`` state with rows and columns swapped."""
    return tuple(state[m * N + n] for n in range(N) for m in range(M))


def sym2_gauge(state: LayerState, q: float) -> float:
    """Product over sites of ``1 / (q^{-n^2} (q^2;q^2)_n)``, the diagonal from the transpose symmetry."""
    out = 1.0
    for n in state:
        out /= q ** (-n * n) * math.prod(1.0 - q ** (2 * k) for k in range(1, n + 1))
    return out


def verify_rank_size_duality(spec: LatticeSpec, max_charge: int = 1, max_sector: int = 1,
                             tol: float = 1e-6) -> dict:
    """Compare graded blocks of the ``(M, N)`` layer with the transposed ``(N, M)`` ones.

    The coefficient of ``v^J w^K`` on the ``(M, N)`` layer, as a matrix
    ``i -> i'``, is compared with the coefficient of ``v^K w^J`` on the
    ``(N, M)`` layer taken ``i'^T -> i^T``, up to one scalar per block
    (``max_rel_dev``, the strict test behind ``passed``).  ``gauge_dev`` repeats
    the comparison after conjugating the dual block with the diagonal
    :func:`sym2_gauge`.  Coefficients are exact finite sums, so no numerical
    differentiation in the fugacities is needed.
    """
    M, N, q, mu = spec.M, spec.N, spec.q, spec.mu
    rows = []
    for sector in range(max_sector + 1):
        basis_a, blk_a = graded_blocks(M, N, sector, q, mu, shell=max_charge)
        basis_b, blk_b = graded_blocks(N, M, sector, q, mu, shell=max_charge)
        perm = [basis_b.index(transpose_state(s, M, N)) for s in basis_a]
        gauge = np.array([sym2_gauge(s, q) for s in basis_a])
        for J, K in itertools.product(range(max_charge + 1), repeat=2):
            a = blk_a.get((J, K), np.zeros((len(basis_a),) * 2))
            b = blk_b.get((K, J), np.zeros((len(basis_b),) * 2))
            b = b[np.ix_(perm, perm)].T
            strict = _prop(a, b)
            gauged = _prop(a, gauge[:, None] * b / gauge[None, :])
            rows.append({"sector": sector, "J": J, "K": K, **strict,
                         "gauge_dev": gauged["max_rel_dev"], "gauge_scalar": gauged["scalar"]})
    worst = max((r["max_rel_dev"] for r in rows), default=0.0)
    worst_g = max((r["gauge_dev"] for r in rows), default=0.0)
    ok = all(r["support_match"] and r["max_rel_dev"] <= tol for r in rows)
    return {"M": M, "N": N, "q": q, "mu": mu, "max_charge": max_charge, "max_sector": max_sector,
            "blocks": rows, "max_rel_dev": worst, "gauge_dev": worst_g, "passed": ok,
            "gauge_passed": worst_g <= tol}


def _prop(a: np.ndarray, b: np.ndarray) -> dict:
    from .sl2 import DegenerateBlock, compare_proportional

    try:
        return compare_proportional(a, b)
    except DegenerateBlock:
        return {"scalar": None, "max_rel_dev": math.inf, "support_match": False}


# --- spectra -----------------------------------------------------------------------------


def spectrum_csv(rows: Sequence[dict]) -> str:
    """CSV with one line per eigenvalue: parameters, index, real and imaginary parts."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["M", "N", "sector", "q", "mu", "v", "w", "index", "re", "im"])
    for r in rows:
        for a, ev in enumerate(r["eigenvalues"]):
            writer.writerow([r["M"], r["N"], r["sector"], r["q"], r["mu"], r["v"], r["w"], a,
                             repr(float(ev.real)), repr(float(ev.imag))])
    return buf.getvalue()


def spectrum(spec: LatticeSpec, sector: int, *, jk_cap: int | None = None) -> dict:
    tm = transfer_matrix(spec, sector, jk_cap=jk_cap)
    ev = np.linalg.eigvals(tm.matrix)
    order = np.lexsort((ev.imag, -np.abs(ev)))
    return {"M": spec.M, "N": spec.N, "sector": sector, "q": spec.q, "mu": spec.mu, "v": spec.v,
            "w": spec.w, "eigenvalues": ev[order], "tail_bound": tm.tail_bound}
