"""Sparse multivariate polynomials over the box [-1, 1]^n.

A monomial is packed into a single Python int: each variable owns a field of
``bits`` bits holding its exponent, and the total degree sits above all
fields. Multiplying monomials is then integer addition, and sorting keys
gives graded-lexicographic order.

Arithmetic returns the float result together with a bound on its rounding
error; since every monomial is bounded by 1 in magnitude on the domain, a
coefficient error bound is also a bound on the error of the polynomial value.
The Taylor-model layer moves these bounds into remainders.
"""

from __future__ import annotations

import math
from functools import cached_property

import numpy as np

from .interval import Interval, add_up, mul_up, sum_down, sum_up, two_prod, two_sum, up

_EPS = 2.0**-52  # twice the unit roundoff
_ETA = 2.0**-1074  # underflow granularity
# up to this many coefficient products the rounding error is tracked exactly
_EXACT_PAIRS = 64


class PolySpace:
    """Variable count, degree cap and monomial packing for a family of polynomials."""

    def __init__(self, nvars: int, degree_cap: int):
        if nvars < 0 or degree_cap < 1:
            raise ValueError("need nvars >= 0 and degree_cap >= 1")
        self.nvars = nvars
        self.degree_cap = degree_cap
        # room for the exponent of a product of two in-cap monomials
        self.bits = max((2 * degree_cap).bit_length(), 1)
        self.shift = self.bits * nvars
        self.field_mask = (1 << self.bits) - 1
        self.odd_mask = sum(1 << self._offset(i) for i in range(nvars))
        self._decode_cache: dict[int, tuple[int, ...]] = {}

    def _offset(self, i: int) -> int:
        return self.bits * (self.nvars - 1 - i)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PolySpace)
            and self.nvars == other.nvars
            and self.degree_cap == other.degree_cap
        )

    def __hash__(self) -> int:
        return hash((self.nvars, self.degree_cap))

    def __repr__(self) -> str:
        return f"PolySpace(nvars={self.nvars}, degree_cap={self.degree_cap})"

    def key(self, powers) -> int:
        if len(powers) != self.nvars:
            raise ValueError(f"expected {self.nvars} exponents, got {len(powers)}")
        k = 0
        for i, q in enumerate(powers):
            if q < 0 or q > self.field_mask:
                raise ValueError(f"exponent {q} out of range")
            k |= q << self._offset(i)
        return k | (sum(powers) << self.shift)

    def var_key(self, i: int, power: int = 1) -> int:
        return (power << self._offset(i)) | (power << self.shift)

    def degree(self, k: int) -> int:
        return k >> self.shift

    def decode(self, k: int) -> tuple[int, ...]:
        powers = self._decode_cache.get(k)
        if powers is None:
            m = self.field_mask
            powers = tuple((k >> self._offset(i)) & m for i in range(self.nvars))
            self._decode_cache[k] = powers
        return powers

    def is_even(self, k: int) -> bool:
        """True when every exponent of monomial ``k`` is even."""
        return k & self.odd_mask == 0

    def slot_mask(self, slots) -> int:
        m = 0
        for i in slots:
            m |= self.field_mask << self._offset(i)
        return m


def _monomial_bound(space: PolySpace, k: int, c: float) -> tuple[float, float]:
    # bounds of c * x^k over the box, exact in floating point
    if k == 0:
        return c, c
    if space.is_even(k):
        return (0.0, c) if c >= 0.0 else (c, 0.0)
    a = abs(c)
    return -a, a


class Polynomial:
    """Immutable sparse polynomial; ``terms`` maps packed monomials to coefficients."""

    __slots__ = ("space", "terms", "__dict__")

    def __init__(self, space: PolySpace, terms: dict[int, float] | None = None):
        self.space = space
        self.terms = {k: c for k, c in (terms or {}).items() if c != 0.0}

    @classmethod
    def _raw(cls, space: PolySpace, terms: dict[int, float]) -> Polynomial:
        p = cls.__new__(cls)
        p.space = space
        p.terms = terms
        return p

    @classmethod
    def constant(cls, space: PolySpace, c: float) -> Polynomial:
        return cls._raw(space, {0: float(c)} if c != 0.0 else {})

    @classmethod
    def variable(cls, space: PolySpace, i: int, coeff: float = 1.0) -> Polynomial:
        return cls._raw(space, {space.var_key(i): float(coeff)} if coeff != 0.0 else {})

    @classmethod
    def from_powers(cls, space: PolySpace, items) -> Polynomial:
        """Build from ``(coeff, powers)`` pairs; repeated powers are summed."""
        terms: dict[int, float] = {}
        for c, powers in items:
            k = space.key(powers)
            terms[k] = terms.get(k, 0.0) + float(c)
        return cls(space, terms)

    # -- inspection ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and 0 in self.terms)

    @property
    def const(self) -> float:
        return self.terms.get(0, 0.0)

    @property
    def degree(self) -> int:
        return max((self.space.degree(k) for k in self.terms), default=0)

    def sorted_terms(self) -> list[tuple[int, float]]:
        return sorted(self.terms.items())

    def monomials(self) -> list[tuple[float, tuple[int, ...]]]:
        """``(coeff, powers)`` pairs in graded-lexicographic order."""
        return [(c, self.space.decode(k)) for k, c in self.sorted_terms()]

    def variables(self) -> set[int]:
        used: set[int] = set()
        for k in self.terms:
            used.update(i for i, q in enumerate(self.space.decode(k)) if q)
        return used

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polynomial)
            and self.space == other.space
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash(tuple(self.sorted_terms()))

    def __repr__(self) -> str:
        return f"Polynomial({self.to_text(sep=' + ') or '0'})"

    @cached_property
    def abs_sum(self) -> float:
        return sum_up([abs(c) for c in self.terms.values()])

    @cached_property
    def by_degree(self) -> list[tuple[int, list[tuple[int, float]], float]]:
        groups: dict[int, list[tuple[int, float]]] = {}
        deg = self.space.degree
        for k, c in self.terms.items():
            groups.setdefault(deg(k), []).append((k, c))
        return [
            (d, items, sum_up([abs(c) for _, c in items]))
            for d, items in sorted(groups.items())
        ]

    def bound(self) -> Interval:
        """Interval enclosure of the polynomial over [-1, 1]^n (per-monomial rule)."""
        return self._bound

    @cached_property
    def _bound(self) -> Interval:
        if not self.terms:
            return Interval(0.0, 0.0)
        los, his = [], []
        for k, c in self.terms.items():
            lo, hi = _monomial_bound(self.space, k, c)
            los.append(lo)
            his.append(hi)
        return Interval(sum_down(los), sum_up(his))

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: Polynomial):
        if self.space != other.space:
            raise ValueError(f"polynomial spaces differ: {self.space} vs {other.space}")

    def neg(self) -> Polynomial:
        return Polynomial._raw(self.space, {k: -c for k, c in self.terms.items()})

    def add(self, other: Polynomial) -> tuple[Polynomial, float]:
        """Sum and a bound on its rounding error."""
        self._check(other)
        if len(other.terms) > len(self.terms):
            big, small = other, self
        else:
            big, small = self, other
        out = dict(big.terms)
        errs = []
        for k, c in small.terms.items():
            b = out.get(k)
            if b is None:
                out[k] = c
                continue
            s, e = two_sum(b, c)
            if e != 0.0:
                errs.append(abs(e))
            if s == 0.0:
                del out[k]
            else:
                out[k] = s
        return Polynomial._raw(self.space, out), (sum_up(errs) if errs else 0.0)

    def sub(self, other: Polynomial) -> tuple[Polynomial, float]:
        return self.add(other.neg())

    def add_const(self, c: float) -> tuple[Polynomial, float]:
        if c == 0.0:
            return self, 0.0
        out = dict(self.terms)
        s, e = two_sum(out.get(0, 0.0), float(c))
        if s == 0.0:
            out.pop(0, None)
        else:
            out[0] = s
        return Polynomial._raw(self.space, out), abs(e)

    def scale(self, s: float) -> tuple[Polynomial, float]:
        if s == 0.0:
            return Polynomial._raw(self.space, {}), 0.0
        if s == 1.0:
            return self, 0.0
        out = {}
        errs = []
        for k, c in self.terms.items():
            r = two_prod(c, s)
            if r is None:
                p = c * s
                errs.append(up(abs(p) * _EPS) + _ETA)
            else:
                p, e = r
                if e != 0.0:
                    errs.append(abs(e))
            if p != 0.0:
                out[k] = p
        return Polynomial._raw(self.space, out), (sum_up(errs) if errs else 0.0)

    def mul(self, other: Polynomial) -> tuple[Polynomial, float, float]:
        """Product truncated at the degree cap.

        Returns ``(product, rounding_error, truncated)`` where ``truncated``
        bounds the magnitude of the discarded higher-degree part.
        """
        self._check(other)
        cap = self.space.degree_cap
        a_groups, b_groups = self.by_degree, other.by_degree
        npairs = 0
        truncated: list[float] = []
        for da, items_a, sa in a_groups:
            for db, items_b, sb in b_groups:
                if da + db > cap:
                    truncated.append(mul_up(sa, sb))
                else:
                    npairs += len(items_a) * len(items_b)
        out: dict[int, float] = {}
        if npairs <= _EXACT_PAIRS:
            errs = []
            for da, items_a, _ in a_groups:
                for db, items_b, _ in b_groups:
                    if da + db > cap:
                        continue
                    for ka, ca in items_a:
                        for kb, cb in items_b:
                            r = two_prod(ca, cb)
                            if r is None:
                                p = ca * cb
                                errs.append(up(abs(p) * _EPS) + _ETA)
                            else:
                                p, e = r
                                if e != 0.0:
                                    errs.append(abs(e))
                            k = ka + kb
                            prev = out.get(k)
                            if prev is None:
                                out[k] = p
                            else:
                                s, e = two_sum(prev, p)
                                if e != 0.0:
                                    errs.append(abs(e))
                                out[k] = s
            err = sum_up(errs) if errs else 0.0
        else:
            get = out.get
            for da, items_a, _ in a_groups:
                for db, items_b, _ in b_groups:
                    if da + db > cap:
                        continue
                    for ka, ca in items_a:
                        for kb, cb in items_b:
                            k = ka + kb
                            out[k] = get(k, 0.0) + ca * cb
            # each coefficient is a sum of at most m products, so the
            # classical recursive-summation bound gamma_m applies
            m = min(len(self.terms), len(other.terms)) + 1
            err = up(up(m * _EPS) * mul_up(self.abs_sum, other.abs_sum)) + npairs * _ETA
        out = {k: c for k, c in out.items() if c != 0.0}
        trunc = sum_up(truncated) if truncated else 0.0
        return Polynomial._raw(self.space, out), err, trunc

    def truncate(self, j: int) -> tuple[Polynomial, Polynomial]:
        """Split into the part of total degree <= j and the rest."""
        deg = self.space.degree
        low, high = {}, {}
        for k, c in self.terms.items():
            (low if deg(k) <= j else high)[k] = c
        return Polynomial._raw(self.space, low), Polynomial._raw(self.space, high)

    def split_slots(self, slots) -> tuple[Polynomial, Polynomial]:
        """Split into monomials free of ``slots`` and monomials touching them."""
        mask = self.space.slot_mask(slots)
        keep, moved = {}, {}
        for k, c in self.terms.items():
            (moved if k & mask else keep)[k] = c
        return Polynomial._raw(self.space, keep), Polynomial._raw(self.space, moved)

    def embed(self, space: PolySpace, mapping) -> Polynomial:
        """Re-express in ``space`` with variable ``i`` renamed to ``mapping[i]``."""
        items = []
        for c, powers in self.monomials():
            target = [0] * space.nvars
            for i, q in enumerate(powers):
                if q:
                    target[mapping[i]] += q
            items.append((c, target))
        return Polynomial.from_powers(space, items)

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x) -> float:
        total = 0.0
        for c, powers in self.monomials():
            t = c
            for xi, q in zip(x, powers):
                if q:
                    t *= xi**q
            total += t
        return total

    def eval_many(self, X: np.ndarray) -> np.ndarray:
        """Evaluate at each row of ``X`` (float64, vectorised)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0])
        for c, powers in self.monomials():
            t = np.full(X.shape[0], c)
            for i, q in enumerate(powers):
                if q:
                    t = t * X[:, i] ** q
            out += t
        return out

    def eval_exact(self, x):
        """Evaluate with ``fractions.Fraction`` inputs (or any exact number type)."""
        from fractions import Fraction

        total = Fraction(0)
        for c, powers in self.monomials():
            t = Fraction(c)
            for xi, q in zip(x, powers):
                if q:
                    t *= Fraction(xi) ** q
            total += t
        return total

    # -- text dump ----------------------------------------------------------

    def to_text(self, sep: str = "\n") -> str:
        lines = []
        for c, powers in self.monomials():
            factors = [f"x{i + 1}^{q}" for i, q in enumerate(powers) if q]
            lines.append(" * ".join([repr(c)] + factors))
        return sep.join(lines)

    @classmethod
    def from_text(cls, space: PolySpace, text: str) -> Polynomial:
        items = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split("*")]
            powers = [0] * space.nvars
            for f in parts[1:]:
                name, q = f.split("^")
                powers[int(name[1:]) - 1] += int(q)
            items.append((float(parts[0]), powers))
        return cls.from_powers(space, items)
