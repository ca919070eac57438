"""Taylor models: a polynomial over [-1, 1]^n plus a remainder interval.

All operations are sound: for every point of the domain, the exact value of
the represented function lies in ``poly(x) + remainder``. Polynomial rounding
errors and truncated higher-order terms are folded into the remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Sequence

from .interval import (
    ZERO,
    Interval,
    add_up,
    cos_range,
    div_down,
    div_up,
    libm_enclose,
    sin_range,
    tanh_range,
)
from .poly import Polynomial, PolySpace


class DomainError(ArithmeticError):
    """An elementary function was applied outside its domain (e.g. 1/x through 0)."""


class RegistryMismatch(ValueError):
    """Operands live in different variable spaces."""


@dataclass(frozen=True)
class TaylorModel:
    poly: Polynomial
    rem: Interval = ZERO

    @property
    def space(self) -> PolySpace:
        return self.poly.space

    @classmethod
    def const(cls, space: PolySpace, c: float) -> TaylorModel:
        return cls(Polynomial.constant(space, c), ZERO)

    @classmethod
    def var(cls, space: PolySpace, i: int, coeff: float = 1.0, offset: float = 0.0) -> TaylorModel:
        p = Polynomial.variable(space, i, coeff)
        p, err = p.add_const(offset)
        return cls(p, Interval.sym(err))

    @classmethod
    def interval(cls, space: PolySpace, iv: Interval) -> TaylorModel:
        return cls(Polynomial.constant(space, 0.0), iv)

    def hull(self) -> Interval:
        return self.poly.bound() + self.rem

    def range_at(self, x) -> Interval:
        """Float-evaluated ``poly(x) + rem``; for diagnostics, not rigorous."""
        v = self.poly(x)
        return Interval(self.rem.lo + v, self.rem.hi + v)

    def __add__(self, other):
        return tm_add(self, _lift(self, other))

    __radd__ = __add__

    def __sub__(self, other):
        return tm_sub(self, _lift(self, other))

    def __rsub__(self, other):
        return tm_sub(_lift(self, other), self)

    def __neg__(self):
        return tm_neg(self)

    def __mul__(self, other):
        if isinstance(other, TaylorModel):
            return tm_mul(self, other)
        return tm_scale(self, float(other))

    __rmul__ = __mul__

    def to_text(self) -> str:
        return f"{self.poly.to_text()}\nremainder {self.rem.lo!r} {self.rem.hi!r}"


def _lift(t: TaylorModel, other) -> TaylorModel:
    if isinstance(other, TaylorModel):
        return other
    return TaylorModel.const(t.space, float(other))


def _check(t1: TaylorModel, t2: TaylorModel):
    if t1.space != t2.space:
        raise RegistryMismatch(f"{t1.space} vs {t2.space}")


def _err(e: float) -> Interval:
    return Interval(-e, e) if e else ZERO


def tm_add(t1: TaylorModel, t2: TaylorModel) -> TaylorModel:
    _check(t1, t2)
    p, e = t1.poly.add(t2.poly)
    rem = t1.rem + t2.rem
    if e:
        rem = rem + _err(e)
    return TaylorModel(p, rem)


def tm_neg(t: TaylorModel) -> TaylorModel:
    return TaylorModel(t.poly.neg(), -t.rem)


def tm_sub(t1: TaylorModel, t2: TaylorModel) -> TaylorModel:
    return tm_add(t1, tm_neg(t2))


def tm_add_const(t: TaylorModel, c: float) -> TaylorModel:
    p, e = t.poly.add_const(c)
    return TaylorModel(p, t.rem + _err(e) if e else t.rem)


def tm_add_interval(t: TaylorModel, iv: Interval) -> TaylorModel:
    return TaylorModel(t.poly, t.rem + iv)


def tm_scale(t: TaylorModel, s: float) -> TaylorModel:
    p, e = t.poly.scale(s)
    rem = t.rem.scale(s)
    return TaylorModel(p, rem + _err(e) if e else rem)


def tm_mul(t1: TaylorModel, t2: TaylorModel) -> TaylorModel:
    """Product with remainder Int(p1)*I2 + Int(p2)*I1 + I1*I2, truncated at the cap."""
    _check(t1, t2)
    p1, p2 = t1.poly, t2.poly
    if p1.is_constant() and t1.rem.is_zero():
        return tm_scale(t2, p1.const)
    if p2.is_constant() and t2.rem.is_zero():
        return tm_scale(t1, p2.const)
    p, err, trunc = p1.mul(p2)
    rem = ZERO
    if not t2.rem.is_zero():
        rem = rem + p1.bound() * t2.rem
    if not t1.rem.is_zero():
        rem = rem + p2.bound() * t1.rem
        if not t2.rem.is_zero():
            rem = rem + t1.rem * t2.rem
    extra = add_up(err, trunc)
    if extra:
        rem = rem + Interval(-extra, extra)
    return TaylorModel(p, rem)


def tm_sqr(t: TaylorModel) -> TaylorModel:
    return tm_mul(t, t)


def tm_truncate(t: TaylorModel, j: int) -> TaylorModel:
    low, high = t.poly.truncate(j)
    if high.is_zero():
        return t
    return TaylorModel(low, t.rem + high.bound())


def tm_hull(t: TaylorModel) -> Interval:
    return t.hull()


def tm_pow(t: TaylorModel, n: int) -> TaylorModel:
    if n < 0:
        raise ValueError("only nonnegative integer powers are supported")
    if n == 0:
        return TaylorModel.const(t.space, 1.0)
    result = None
    base = t
    while n:
        if n & 1:
            result = base if result is None else tm_mul(result, base)
        n >>= 1
        if n:
            base = tm_mul(base, base)
    return result


# -- elementary functions ------------------------------------------------


@lru_cache(maxsize=None)
def _tanh_derivative_polys(n: int) -> tuple[tuple[int, ...], ...]:
    # d^k/dx^k tanh(x) = P_k(tanh(x)); P_0 = y, P_{k+1} = (1 - y^2) P_k'(y)
    polys = [(0, 1)]
    for _ in range(n):
        p = polys[-1]
        dp = [i * p[i] for i in range(1, len(p))] or [0]
        nxt = [0] * (len(dp) + 2)
        for i, c in enumerate(dp):
            nxt[i] += c
            nxt[i + 2] -= c
        polys.append(tuple(nxt))
    return tuple(polys)


def _ipoly(coeffs: Sequence[int], y: Interval) -> Interval:
    # naive interval Horner evaluation, conservative
    acc = Interval.point(0.0)
    for c in reversed(coeffs):
        acc = acc * y + float(c)
    return acc


def _enclose(v: float) -> Interval:
    return Interval(*libm_enclose(v))


def _factorial_div(iv: Interval, k: int) -> Interval:
    f = float(math.factorial(k))
    return Interval(div_down(iv.lo, f), div_up(iv.hi, f))


def _series(f: str, c: float, hull: Interval, n: int):
    """Interval Taylor coefficients a_0..a_n at c and the order-(n+1) derivative range over hull."""
    if f in ("sin", "cos"):
        s, co = _enclose(math.sin(c)), _enclose(math.cos(c))
        cyc = [s, co, -s, -co] if f == "sin" else [co, -s, -co, s]
        coeffs = [_factorial_div(cyc[k % 4], k) for k in range(n + 1)]
        srng, crng = sin_range(hull), cos_range(hull)
        rcyc = [srng, crng, -srng, -crng] if f == "sin" else [crng, -srng, -crng, srng]
        return coeffs, rcyc[(n + 1) % 4]
    if f == "tanh":
        polys = _tanh_derivative_polys(n + 1)
        y = _enclose(math.tanh(c))
        y = Interval(max(y.lo, -1.0), min(y.hi, 1.0))
        coeffs = [_factorial_div(_ipoly(polys[k], y), k) for k in range(n + 1)]
        return coeffs, _ipoly(polys[n + 1], tanh_range(hull))
    if f == "recip":
        inv = Interval.point(c).recip()
        coeffs = []
        acc = inv
        for k in range(n + 1):
            # a_k = (-1)^k / c^(k+1)
            coeffs.append(acc if k % 2 == 0 else -acc)
            acc = acc * inv
        hinv = hull.recip()
        d = hinv ** (n + 2) * float(math.factorial(n + 1))
        return coeffs, (d if (n + 1) % 2 == 0 else -d)
    raise ValueError(f"unknown elementary function {f!r}")


ELEMENTARY = ("sin", "cos", "tanh", "recip", "sqr")


def tm_elementary(f: str, t: TaylorModel, order: int | None = None) -> TaylorModel:
    """Taylor model of ``f(t)`` by expansion about the midpoint of ``t``'s hull.

    The Lagrange remainder is bounded with the range of the next derivative
    over the hull.
    """
    if f == "sqr":
        return tm_sqr(t)
    n = t.space.degree_cap if order is None else order
    hull = t.hull()
    if f == "recip" and hull.lo <= 0.0 <= hull.hi:
        raise DomainError(f"reciprocal of a Taylor model whose range {hull} contains 0")
    if f not in ELEMENTARY:
        raise ValueError(f"unknown elementary function {f!r}")
    c = hull.mid
    if f == "recip" and c == 0.0:
        c = hull.lo if hull.lo != 0.0 else hull.hi
    coeffs, dn1 = _series(f, c, hull, n)
    if t.poly.is_constant() and t.rem.is_zero() and t.poly.const == c:
        a0 = coeffs[0]
        return TaylorModel(Polynomial.constant(t.space, a0.mid), a0 - a0.mid)
    s = tm_add_const(t, -c)
    result = _coeff_tm(t.space, coeffs[n])
    for k in range(n - 1, -1, -1):
        result = tm_add(tm_mul(result, s), _coeff_tm(t.space, coeffs[k]))
    lagrange = _factorial_div(dn1, n + 1) * (hull - c) ** (n + 1)
    return tm_add_interval(result, lagrange)


def _coeff_tm(space: PolySpace, iv: Interval) -> TaylorModel:
    # midpoint into the polynomial, radius into the remainder
    m = iv.mid
    return TaylorModel(Polynomial.constant(space, m), iv - m)


def tm_sin(t, order=None):
    return tm_elementary("sin", t, order)


def tm_cos(t, order=None):
    return tm_elementary("cos", t, order)


def tm_tanh(t, order=None):
    return tm_elementary("tanh", t, order)


def tm_recip(t, order=None):
    return tm_elementary("recip", t, order)


# -- vectors and composition -----------------------------------------------


class TMVector:
    """A tuple of Taylor models sharing one variable space and registry."""

    __slots__ = ("elems", "registry")

    def __init__(self, elems, registry=None):
        self.elems = tuple(elems)
        self.registry = registry
        if self.elems:
            sp = self.elems[0].space
            for t in self.elems[1:]:
                if t.space != sp:
                    raise RegistryMismatch("TMVector elements live in different spaces")

    def __len__(self) -> int:
        return len(self.elems)

    def __iter__(self) -> Iterator[TaylorModel]:
        return iter(self.elems)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return TMVector(self.elems[i], self.registry)
        return self.elems[i]

    def replace(self, elems) -> TMVector:
        return TMVector(elems, self.registry)

    def hulls(self) -> list[Interval]:
        return [t.hull() for t in self.elems]

    def remainder_widths(self) -> list[float]:
        return [t.rem.width for t in self.elems]

    def __repr__(self) -> str:
        return f"TMVector({list(self.elems)!r})"


def tm_compose(f: TMVector | Sequence[TaylorModel], args: TMVector | Sequence[TaylorModel]) -> TMVector:
    """Substitute ``args`` for the variables of each model in ``f``.

    Each arg is used as given; the caller is responsible for its range lying
    in [-1, 1] when ``f`` is only valid there.
    """
    f_elems = list(f)
    args = list(args)
    if not f_elems:
        return TMVector([], getattr(f, "registry", None))
    m = f_elems[0].space.nvars
    if len(args) != m:
        raise ValueError(f"composition arity mismatch: f takes {m} inputs, got {len(args)}")
    space = args[0].space
    powers: dict[tuple[int, int], TaylorModel] = {}

    def power(i: int, q: int) -> TaylorModel:
        key = (i, q)
        if key not in powers:
            powers[key] = args[i] if q == 1 else tm_mul(power(i, q - 1), args[i])
        return powers[key]

    out = []
    for t in f_elems:
        acc = TaylorModel(Polynomial.constant(space, 0.0), t.rem)
        for c, exps in t.poly.monomials():
            term = None
            for i, q in enumerate(exps):
                if q:
                    pq = power(i, q)
                    term = pq if term is None else tm_mul(term, pq)
            if term is None:
                acc = tm_add_const(acc, c)
            else:
                acc = tm_add(acc, tm_scale(term, c))
        out.append(acc)
    return TMVector(out, getattr(args, "registry", None))
