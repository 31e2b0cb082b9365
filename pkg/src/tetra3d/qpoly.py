"""Exact Laurent polynomials in ``q`` with rational coefficients.

Coefficients are kept as Python ``int`` whenever they are integral and as
``fractions.Fraction`` otherwise, so the common integer case stays fast while
arithmetic remains exact.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Union

Coeff = Union[int, Fraction]


class PoleError(ArithmeticError):
    """Exact division left a nonzero remainder."""


def _norm(c: Coeff) -> Coeff:
    if isinstance(c, Fraction) and c.denominator == 1:
        return c.numerator
    return c


def _parse_coeff(text: str) -> Coeff:
    return _norm(Fraction(text))


class LaurentPoly:
    """Immutable Laurent polynomial ``sum c_e q**e``.

    Zero coefficients are never stored, so equality is plain dict equality.

    >>> p = LaurentPoly({-2: 1, 0: -1})
    >>> p + 1
    LaurentPoly({-2: 1})
    >>> p.to_json()
    {'-2': '1', '0': '-1'}
    """

    __slots__ = ("_c", "_hash")

    def __init__(self, coeffs: Mapping[int, Coeff] | None = None):
        c = {}
        if coeffs:
            for e, v in coeffs.items():
                if v:
                    c[int(e)] = _norm(v)
        self._c = c
        self._hash = None

    @classmethod
    def _raw(cls, c: dict) -> "LaurentPoly":
        obj = object.__new__(cls)
        obj._c = c
        obj._hash = None
        return obj

    @classmethod
    def const(cls, c: Coeff) -> "LaurentPoly":
        return cls({0: c})

    @classmethod
    def monomial(cls, e: int, c: Coeff = 1) -> "LaurentPoly":
        return cls({e: c})

    @property
    def coeffs(self) -> dict[int, Coeff]:
        return dict(self._c)

    def items(self):
        return self._c.items()

    def is_zero(self) -> bool:
        return not self._c

    def __bool__(self) -> bool:
        return bool(self._c)

    def min_exp(self) -> int:
        return min(self._c) if self._c else 0

    def max_exp(self) -> int:
        return max(self._c) if self._c else 0

    def is_integral(self) -> bool:
        return all(isinstance(v, int) for v in self._c.values())

    # arithmetic -----------------------------------------------------------

    def __add__(self, other) -> "LaurentPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        c = dict(self._c)
        for e, v in other._c.items():
            s = _norm(c.get(e, 0) + v)
            if s:
                c[e] = s
            else:
                c.pop(e, None)
        return LaurentPoly._raw(c)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly._raw({e: -v for e, v in self._c.items()})

    def __sub__(self, other) -> "LaurentPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "LaurentPoly":
        return (-self) + other

    def __mul__(self, other) -> "LaurentPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._c, other._c
        if not a or not b:
            return ZERO
        if len(a) < len(b):
            a, b = b, a
        c: dict[int, Coeff] = {}
        get = c.get
        for eb, vb in b.items():
            for ea, va in a.items():
                e = ea + eb
                c[e] = get(e, 0) + va * vb
        return LaurentPoly._raw({e: _norm(v) for e, v in c.items() if v})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LaurentPoly":
        if n < 0:
            if len(self._c) != 1:
                raise PoleError("only monomials have Laurent inverses")
            (e, v), = self._c.items()
            return LaurentPoly({e * n: _norm(Fraction(1) / Fraction(v) ** (-n))})
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by ``q**k``."""
        if k == 0:
            return self
        return LaurentPoly._raw({e + k: v for e, v in self._c.items()})

    def scale(self, c: Coeff) -> "LaurentPoly":
        if not c:
            return ZERO
        return LaurentPoly._raw({e: _norm(v * c) for e, v in self._c.items()})

    def substitute_power(self, k: int) -> "LaurentPoly":
        """Return ``p(q**k)``; used to move between ``q`` and ``q**(1/2)``."""
        return LaurentPoly._raw({e * k: v for e, v in self._c.items()})

    def divexact(self, other: "LaurentPoly") -> "LaurentPoly":
        """Exact division; raises :class:`PoleError` on a nonzero remainder."""
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if self.is_zero():
            return ZERO
        if len(other._c) == 1:
            (e, v), = other._c.items()
            inv = Fraction(1, 1) / Fraction(v)
            return LaurentPoly({k - e: c * inv for k, c in self._c.items()})
        rem = dict(self._c)
        dtop = other.max_exp()
        dlow = other.min_exp()
        lead = Fraction(other._c[dtop])
        quot: dict[int, Coeff] = {}
        # long division from the top exponent down
        while rem:
            top = max(rem)
            if top - dtop < min(rem) - dlow:
                break
            f = _norm(Fraction(rem[top]) / lead)
            shift = top - dtop
            quot[shift] = f
            for e, v in other._c.items():
                k = e + shift
                s = _norm(rem.get(k, 0) - f * v)
                if s:
                    rem[k] = s
                else:
                    rem.pop(k, None)
        if rem:
            raise PoleError("inexact division: remainder %r" % LaurentPoly(rem))
        return LaurentPoly(quot)

    # comparisons ----------------------------------------------------------

    def __eq__(self, other) -> bool:
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self._c == other._c

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._c.items()))
        return self._hash

    # evaluation -----------------------------------------------------------

    def evaluate(self, q: float) -> float:
        return poly_eval(self, q)

    def evaluate_exact(self, q: Fraction) -> Fraction:
        q = Fraction(q)
        return sum((Fraction(v) * q ** e for e, v in self._c.items()), Fraction(0))

    # serialization --------------------------------------------------------

    def to_json(self) -> dict[str, str]:
        return {str(e): str(self._c[e]) for e in sorted(self._c)}

    @classmethod
    def from_json(cls, data: Mapping[str, str]) -> "LaurentPoly":
        return cls({int(e): _parse_coeff(str(v)) for e, v in data.items()})

    def __repr__(self) -> str:
        return "LaurentPoly(%r)" % {e: self._c[e] for e in sorted(self._c)}

    def __str__(self) -> str:
        if not self._c:
            return "0"
        parts = []
        for e in sorted(self._c):
            v = self._c[e]
            if e == 0:
                mono = str(v)
            else:
                mono = "q" if e == 1 else "q^%d" % e
                if v == -1:
                    mono = "-" + mono
                elif v != 1:
                    mono = "%s*%s" % (v, mono)
            parts.append(mono)
        return " + ".join(parts).replace("+ -", "- ")


def _coerce(x) -> LaurentPoly:
    if isinstance(x, LaurentPoly):
        return x
    if isinstance(x, (int, Fraction)):
        return LaurentPoly({0: x}) if x else ZERO
    return NotImplemented


ZERO = LaurentPoly()
ONE = LaurentPoly({0: 1})
Q = LaurentPoly({1: 1})


def poly_add(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    return a + b


def poly_mul(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    return a * b


def poly_sum(terms: Iterable[LaurentPoly]) -> LaurentPoly:
    c: dict[int, Coeff] = {}
    get = c.get
    for t in terms:
        for e, v in t._c.items():
            c[e] = get(e, 0) + v
    return LaurentPoly._raw({e: _norm(v) for e, v in c.items() if v})


@lru_cache(maxsize=None)
def q_pochhammer(m: int, n: int) -> LaurentPoly:
    """``(q**m; q**2)_n = prod_{k<n} (1 - q**(m + 2k))``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    out = ONE
    for k in range(n):
        out = out * LaurentPoly({0: 1, m + 2 * k: -1}) if m + 2 * k else ZERO
        if out.is_zero():
            return ZERO
    return out


class EvalOverflow(OverflowError):
    pass


_MAX_LOG = 700.0


def poly_eval(p: LaurentPoly, q: float) -> float:
    """Evaluate at ``0 < q < 1`` with exact-rounded summation (``math.fsum``)."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1), got %r" % (q,))
    if not p._c:
        return 0.0
    lq = math.log(q)
    lo, hi = p.min_exp(), p.max_exp()
    if max(abs(lo), abs(hi)) * abs(lq) > _MAX_LOG:
        raise EvalOverflow("q**%d out of float range at q=%g" % (lo if abs(lo) > abs(hi) else hi, q))
    return math.fsum(float(v) * q ** e for e, v in sorted(p._c.items()))


def poly_eval_scaled(p: LaurentPoly, q: float, log_scale: float) -> float:
    """Evaluate ``p(q) * exp(log_scale)`` without forming huge intermediates."""
    if not p._c:
        return 0.0
    lq = math.log(q)
    return math.fsum(float(v) * math.exp(e * lq + log_scale) for e, v in sorted(p._c.items()))
