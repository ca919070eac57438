"""Refactoring operators for Taylor-model vectors and the variable-slot registry.

Variable slots are laid out as

    [ physical x_1..x_d | digital z_1..z_{cH} | predicted w_(1,1)..w_(H,d) ]

Digital and predicted slots are introduced by wrapping (remainder becomes a
fresh variable) and removed by unwrapping (monomials bounded back into the
remainder). The registry tracks which of them are currently live so that a
slot is never reused while some model still depends on its old meaning.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .interval import ZERO, Interval, add_up
from .poly import Polynomial, PolySpace
from .taylor import TaylorModel, TMVector


class Role(str, Enum):
    PHYSICAL = "physical"
    DIGITAL = "digital"
    PREDICTED = "predicted"


class SlotInUse(RuntimeError):
    """A wrap tried to claim a slot that is still live."""


class RegistryStateError(RuntimeError):
    """An operator was called while the registry was in the wrong state."""


class VariableRegistry:
    def __init__(self, d: int, c: int, H: int, degree_cap: int = 3, predicted: bool = True):
        if d < 1 or c < 1 or H < 1:
            raise ValueError("need d, c, H >= 1")
        self.d, self.c, self.H = d, c, H
        self.n_digital = c * H
        self.n_predicted = d * H if predicted else 0
        self.space = PolySpace(d + self.n_digital + self.n_predicted, degree_cap)
        self._live: set[int] = set()

    @property
    def nvars(self) -> int:
        return self.space.nvars

    @property
    def physical_slots(self) -> range:
        return range(self.d)

    @property
    def digital_slots(self) -> range:
        return range(self.d, self.d + self.n_digital)

    @property
    def predicted_slots(self) -> range:
        start = self.d + self.n_digital
        return range(start, start + self.n_predicted)

    def digital_slot(self, i: int) -> int:
        if not 0 <= i < self.n_digital:
            raise IndexError(f"digital index {i} out of range")
        return self.d + i

    def predicted_slot(self, step: int, dim: int) -> int:
        """Slot for predicted state ``x_{k+1+step}``, component ``dim``."""
        if not (0 <= step < self.H and 0 <= dim < self.d) or not self.n_predicted:
            raise IndexError(f"predicted slot ({step}, {dim}) out of range")
        return self.d + self.n_digital + step * self.d + dim

    def role(self, slot: int) -> Role:
        if slot < self.d:
            return Role.PHYSICAL
        if slot < self.d + self.n_digital:
            return Role.DIGITAL
        if slot < self.nvars:
            return Role.PREDICTED
        raise IndexError(f"slot {slot} out of range")

    def name(self, slot: int) -> str:
        role = self.role(slot)
        if role is Role.PHYSICAL:
            return f"x{slot + 1}"
        if role is Role.DIGITAL:
            return f"z{slot - self.d + 1}"
        off = slot - self.d - self.n_digital
        return f"w{off // self.d + 1}_{off % self.d + 1}"

    def is_live(self, slot: int) -> bool:
        return slot in self._live

    def live(self, role: Role | None = None) -> list[int]:
        return sorted(s for s in self._live if role is None or self.role(s) is role)

    def acquire(self, slot: int):
        if self.role(slot) is Role.PHYSICAL:
            raise ValueError("physical slots are permanent and cannot be acquired")
        if slot in self._live:
            raise SlotInUse(f"slot {self.name(slot)} is still live")
        self._live.add(slot)

    def release(self, slots: Iterable[int]):
        for s in slots:
            self._live.discard(s)

    def zero(self) -> TaylorModel:
        return TaylorModel.const(self.space, 0.0)

    def vector(self, elems) -> TMVector:
        return TMVector(elems, self)


@dataclass(frozen=True)
class RemainderThresholds:
    physical: float = 1e-3
    digital: float = 1e-4
    predicted: float = 1e-4

    def __post_init__(self):
        for name in ("physical", "digital", "predicted"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} threshold must be strictly positive")

    def for_role(self, role: Role | str) -> float:
        return getattr(self, Role(role).value)


def _centred(lo: float, hi: float) -> tuple[float, float]:
    """Midpoint and a half-width that, together, cover [lo, hi] exactly."""
    mid = 0.5 * lo + 0.5 * hi
    hw = max(add_up(hi, -mid), add_up(mid, -lo), 0.0)
    return mid, hw


def _absorb(poly: Polynomial, iv: Interval, slot: int) -> Polynomial:
    """``poly + mid + hw * v_slot`` with mid/hw chosen so the range covers poly + iv."""
    space = poly.space
    if iv.is_zero():
        return poly
    k = space.var_key(slot)
    if k in poly.terms or slot in poly.variables():
        raise SlotInUse(f"slot {slot} already appears in the polynomial")
    mid, hw = _centred(iv.lo, iv.hi)
    p, e = poly.add_const(mid)
    hw = add_up(hw, e) if e else hw
    if hw == 0.0:
        return p
    terms = dict(p.terms)
    terms[k] = hw
    return Polynomial(space, terms)


def box_shrink_wrap(v: TMVector, reg: VariableRegistry | None = None) -> TMVector:
    """Replace element i by the box ``mid_i + hw_i * x_i`` of its hull."""
    if reg is None:
        reg = v.registry
    if reg is not None and reg.live():
        names = ", ".join(reg.name(s) for s in reg.live())
        raise RegistryStateError(f"unwrap {names} before physical shrink wrapping")
    out = []
    for i, t in enumerate(v):
        h = t.hull()
        out.append(TaylorModel(_absorb(Polynomial.constant(t.space, 0.0), h, i), ZERO))
    return TMVector(out, reg)


def digital_box_shrink_wrap(v: TMVector, reg: VariableRegistry, slots=None) -> TMVector:
    """Move the remainder of element i into a fresh digital variable.

    The polynomial part is kept, so the range is unchanged.
    """
    if slots is None:
        slots = [reg.digital_slot(i) for i in range(len(v))]
    out = []
    for t, slot in zip(v, slots, strict=True):
        if t.rem.is_zero():
            out.append(t)
            continue
        reg.acquire(slot)
        out.append(TaylorModel(_absorb(t.poly, t.rem, slot), ZERO))
    return TMVector(out, reg)


def shrink_unwrap_tm(t: TaylorModel, remove) -> TaylorModel:
    keep, moved = t.poly.split_slots(remove)
    if moved.is_zero():
        return t
    return TaylorModel(keep, t.rem + moved.bound())


def box_shrink_unwrap(v: TMVector, reg: VariableRegistry, remove=None) -> TMVector:
    """Bound every monomial touching ``remove`` into the remainder and free those slots.

    ``remove`` defaults to all live digital and predicted slots.
    """
    remove = sorted(reg.live() if remove is None else remove)
    for s in remove:
        if reg.role(s) is Role.PHYSICAL:
            raise ValueError("physical slots cannot be unwrapped")
    out = [shrink_unwrap_tm(t, remove) for t in v] if remove else list(v)
    reg.release(remove)
    return TMVector(out, reg)


def symbolic_remainder_insert(t: TaylorModel, reg: VariableRegistry, slot: int) -> TaylorModel:
    """Replace the remainder by a placeholder variable in predicted slot ``slot``."""
    if reg.role(slot) is not Role.PREDICTED:
        raise ValueError(f"slot {slot} is not a predicted-state slot")
    if t.rem.is_zero():
        return t
    reg.acquire(slot)
    return TaylorModel(_absorb(t.poly, t.rem, slot), ZERO)


def large_remainder(v, th: RemainderThresholds | float, role: Role | str = Role.PHYSICAL) -> bool:
    """True iff some element's remainder is strictly wider than the role's threshold."""
    limit = th if isinstance(th, float) else th.for_role(role)
    return any(t.rem.width > limit for t in v)
