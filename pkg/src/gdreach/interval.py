"""Closed real intervals with outward (directed) rounding.

Endpoints are IEEE doubles. Every operation returns an interval that contains
the exact real result: error-free transformations detect whether a rounded
endpoint is exact, and only inexact endpoints are pushed one step outward
with :func:`math.nextafter`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_INF = math.inf
_SPLIT = 134217729.0  # 2**27 + 1
# Beyond these magnitudes the Veltkamp split may overflow or underflow.
_SPLIT_MAX = 2.0**996
_TINY = 2.0**-960


def down(x: float) -> float:
    return math.nextafter(x, -_INF)


def up(x: float) -> float:
    return math.nextafter(x, _INF)


def two_sum(a: float, b: float) -> tuple[float, float]:
    """Return ``(s, e)`` with ``s = fl(a + b)`` and ``a + b = s + e`` exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def _split(a: float) -> tuple[float, float]:
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a: float, b: float) -> tuple[float, float] | None:
    """Dekker's exact product, or ``None`` when the split is unsafe."""
    p = a * b
    if p == 0.0 or not math.isfinite(p):
        return (p, 0.0) if p == 0.0 and (a == 0.0 or b == 0.0) else None
    if abs(a) > _SPLIT_MAX or abs(b) > _SPLIT_MAX or abs(p) < _TINY:
        return None
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def add_down(a: float, b: float) -> float:
    s, e = two_sum(a, b)
    if not math.isfinite(s):
        return s if s == _INF else -_INF
    return down(s) if e < 0.0 else s


def add_up(a: float, b: float) -> float:
    s, e = two_sum(a, b)
    if not math.isfinite(s):
        return s if s == -_INF else _INF
    return up(s) if e > 0.0 else s


def mul_down(a: float, b: float) -> float:
    r = two_prod(a, b)
    if r is None:
        return down(a * b)
    p, e = r
    return down(p) if e < 0.0 else p


def mul_up(a: float, b: float) -> float:
    r = two_prod(a, b)
    if r is None:
        return up(a * b)
    p, e = r
    return up(p) if e > 0.0 else p


def _div_residual_sign(q: float, a: float, b: float) -> float | None:
    # sign of q*b - a, computed exactly
    r = two_prod(q, b)
    if r is None:
        return None
    p, e = r
    return (p - a) + e


def div_down(a: float, b: float) -> float:
    q = a / b
    s = _div_residual_sign(q, a, b)
    if s is None:
        return down(q)
    # q*b - a > 0 with b > 0 means q overshoots a/b
    if (s > 0.0 and b > 0.0) or (s < 0.0 and b < 0.0):
        return down(q)
    return q


def div_up(a: float, b: float) -> float:
    q = a / b
    s = _div_residual_sign(q, a, b)
    if s is None:
        return up(q)
    if (s < 0.0 and b > 0.0) or (s > 0.0 and b < 0.0):
        return up(q)
    return q


def _fsum_exact(values: list[float]) -> tuple[float, bool]:
    s = math.fsum(values)
    return s, math.fsum(values + [-s]) == 0.0


def sum_up(values: list[float]) -> float:
    """Upper bound on the exact sum (``math.fsum`` is correctly rounded)."""
    s, exact = _fsum_exact(values)
    return s if exact else up(s)


def sum_down(values: list[float]) -> float:
    s, exact = _fsum_exact(values)
    return s if exact else down(s)


def libm_enclose(v: float) -> tuple[float, float]:
    """Enclosure of a libm result, assumed accurate to within two ulps."""
    return down(down(v)), up(up(v))


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: float) -> Interval:
        return cls(x, x)

    @classmethod
    def sym(cls, r: float) -> Interval:
        return cls(-r, r)

    @property
    def width(self) -> float:
        return add_up(self.hi, -self.lo)

    @property
    def mid(self) -> float:
        return 0.5 * self.lo + 0.5 * self.hi

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    def is_zero(self) -> bool:
        return self.lo == 0.0 and self.hi == 0.0

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: Interval) -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __add__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(float(other))
        return Interval(add_down(self.lo, other.lo), add_up(self.hi, other.hi))

    __radd__ = __add__

    def __neg__(self) -> Interval:
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        if not isinstance(other, Interval):
            other = Interval.point(float(other))
        return Interval(add_down(self.lo, -other.hi), add_up(self.hi, -other.lo))

    def __rsub__(self, other):
        return Interval.point(float(other)) - self

    def __mul__(self, other):
        if not isinstance(other, Interval):
            return self.scale(float(other))
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        pairs = ((a, c), (a, d), (b, c), (b, d))
        lo = min(mul_down(x, y) for x, y in pairs)
        hi = max(mul_up(x, y) for x, y in pairs)
        return Interval(lo, hi)

    __rmul__ = __mul__

    def scale(self, s: float) -> Interval:
        if s >= 0.0:
            return Interval(mul_down(self.lo, s), mul_up(self.hi, s))
        return Interval(mul_down(self.hi, s), mul_up(self.lo, s))

    def recip(self) -> Interval:
        if self.lo <= 0.0 <= self.hi:
            raise ZeroDivisionError(f"reciprocal of {self} which contains 0")
        return Interval(div_down(1.0, self.hi), div_up(1.0, self.lo))

    def __pow__(self, n: int) -> Interval:
        if n < 0:
            raise ValueError("negative powers are not supported")
        if n == 0:
            return Interval(1.0, 1.0)
        result = self
        for _ in range(n - 1):
            result = result * self
        if n % 2 == 0:
            # even powers never go below zero; the naive product can
            return Interval(max(result.lo, 0.0), result.hi)
        return result

    def hull(self, other: Interval) -> Interval:
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def inflate(self, r: float) -> Interval:
        return Interval(add_down(self.lo, -r), add_up(self.hi, r))

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"


ZERO = Interval(0.0, 0.0)
UNIT = Interval(-1.0, 1.0)


def _contains_angle(lo: float, hi: float, offset: float) -> bool:
    # does [lo, hi] contain offset + 2*k*pi for some integer k (conservative)?
    slop = 1e-12 * (1.0 + abs(lo) + abs(hi))
    k = math.ceil((lo - slop - offset) / (2.0 * math.pi))
    return offset + 2.0 * math.pi * k <= hi + slop


def sin_range(x: Interval) -> Interval:
    if x.hi - x.lo >= 2.0 * math.pi:
        return UNIT
    a = libm_enclose(math.sin(x.lo))
    b = libm_enclose(math.sin(x.hi))
    lo, hi = min(a[0], b[0]), max(a[1], b[1])
    if _contains_angle(x.lo, x.hi, 0.5 * math.pi):
        hi = 1.0
    if _contains_angle(x.lo, x.hi, -0.5 * math.pi):
        lo = -1.0
    return Interval(max(lo, -1.0), min(hi, 1.0))


def cos_range(x: Interval) -> Interval:
    if x.hi - x.lo >= 2.0 * math.pi:
        return UNIT
    a = libm_enclose(math.cos(x.lo))
    b = libm_enclose(math.cos(x.hi))
    lo, hi = min(a[0], b[0]), max(a[1], b[1])
    if _contains_angle(x.lo, x.hi, 0.0):
        hi = 1.0
    if _contains_angle(x.lo, x.hi, math.pi):
        lo = -1.0
    return Interval(max(lo, -1.0), min(hi, 1.0))


def tanh_range(x: Interval) -> Interval:
    lo = libm_enclose(math.tanh(x.lo))[0]
    hi = libm_enclose(math.tanh(x.hi))[1]
    return Interval(max(lo, -1.0), min(hi, 1.0))
