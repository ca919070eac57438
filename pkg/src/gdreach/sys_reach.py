"""Closed-loop reachability: alternate controller reachability, the plant
step, and (conditional) physical shrink wrapping over K control periods."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .config import Scenario
from .gd_reach import GDOptions, reach_gradient_descent
from .graph import TMEvaluator
from .interval import Interval
from .models import build_cost_graph, build_plant_graph
from .taylor import DomainError, TaylorModel, TMVector
from .wrapping import (
    RemainderThresholds,
    Role,
    VariableRegistry,
    _absorb,
    box_shrink_wrap,
    large_remainder,
)

COMPLETED = "completed"
DIVERGED = "diverged"


class ReachDomainError(DomainError):
    def __init__(self, step: int, phase: str, dim: int | None, cause: str):
        self.step, self.phase, self.dim, self.cause = step, phase, dim, cause
        where = f" (dimension {dim})" if dim is not None else ""
        super().__init__(f"step {step}, {phase}{where}: {cause}")

    def to_dict(self) -> dict:
        return {
            "error": "DomainError",
            "step": self.step,
            "phase": self.phase,
            "dim": self.dim,
            "message": self.cause,
        }


@dataclass
class ReachResult:
    tms: list[TMVector]
    hulls: list[list[Interval]]
    controls: list[list[Interval]]
    events: list[dict]
    status: str
    fingerprint: str
    wall: list[float]
    flags: dict
    traces: list[list[dict]] = field(default_factory=list)
    control_tms: list[TMVector] = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.hulls) - 1

    def widths(self, k: int) -> list[float]:
        return [h.width for h in self.hulls[k]]

    def hull_rows(self) -> list[tuple[int, int, float, float]]:
        return [
            (k, i, h.lo, h.hi) for k, hs in enumerate(self.hulls) for i, h in enumerate(hs)
        ]


def initial_tm(box, reg: VariableRegistry) -> TMVector:
    """``mid_i + halfwidth_i * x_i`` per dimension; point dimensions stay constant."""
    elems = []
    zero = reg.zero()
    for i, (lo, hi) in enumerate(box):
        if lo > hi:
            raise ValueError(f"inverted initial interval in dimension {i}: [{lo}, {hi}]")
        if lo == hi:
            elems.append(TaylorModel.const(reg.space, lo))
        else:
            elems.append(TaylorModel(_absorb(zero.poly, Interval(lo, hi), i)))
    return TMVector(elems, reg)


def plant_step(plant, tm_x: TMVector, tm_u: TMVector, reg: VariableRegistry, step: int) -> TMVector:
    ev = TMEvaluator(plant.graph, list(tm_x) + list(tm_u))
    out = []
    for dim, node in enumerate(plant.outputs):
        try:
            out.append(ev.value(node))
        except DomainError as e:
            raise ReachDomainError(step, "plant", dim, str(e)) from e
    return TMVector(out, reg)


def reach_system(
    scenario: Scenario,
    *,
    shrink_wrap: bool | None = None,
    symbolic_remainders: bool | None = None,
    K: int | None = None,
    trace: bool = False,
) -> ReachResult:
    sw = scenario.shrink_wrap if shrink_wrap is None else shrink_wrap
    sr = scenario.symbolic_remainders if symbolic_remainders is None else symbolic_remainders
    K = scenario.K if K is None else K
    th: RemainderThresholds = scenario.thresholds
    opts = GDOptions(th, shrink_wrap=sw, symbolic_remainders=sr)
    d, c = scenario.plant.dims
    reg = VariableRegistry(d, c, scenario.cost.H, scenario.degree)
    plant = build_plant_graph(scenario.plant, scenario.control_dt)
    cost = build_cost_graph(scenario.plant, scenario.cost)

    tm_x = initial_tm(scenario.initial, reg)
    init_width = max(hi - lo for lo, hi in scenario.initial)
    blowup = scenario.blowup_factor * init_width if init_width > 0 else float("inf")

    res = ReachResult(
        tms=[tm_x],
        hulls=[tm_x.hulls()],
        controls=[],
        events=[],
        status=COMPLETED,
        fingerprint=scenario.fingerprint(),
        wall=[],
        flags={"shrink_wrap": sw, "symbolic_remainders": sr},
    )
    for k in range(1, K + 1):
        t0 = time.perf_counter()
        tr: list[dict] | None = [] if trace else None
        try:
            tm_u = reach_gradient_descent(tm_x, cost, scenario.gd.alpha, reg, opts, tr)
        except DomainError as e:
            raise ReachDomainError(k, "controller", None, str(e)) from e
        tm_x = plant_step(plant, tm_x, tm_u, reg, k)
        widths = tm_x.remainder_widths()
        wrapped = False
        if sw and large_remainder(tm_x, th, Role.PHYSICAL):
            tm_x = box_shrink_wrap(tm_x, reg)
            wrapped = True
        hulls = tm_x.hulls()
        res.tms.append(tm_x)
        res.hulls.append(hulls)
        res.control_tms.append(tm_u)
        res.controls.append(tm_u.hulls())
        res.wall.append(time.perf_counter() - t0)
        if tr is not None:
            res.traces.append(tr)
        digital_wraps = sum(1 for r in tr if r["digital_wrap"]) if tr else None
        res.events.append({
            "k": k,
            "remainder_widths": widths,
            "shrink_wrap": wrapped,
            "threshold": th.physical,
            "max_hull_width": max(h.width for h in hulls),
            "digital_wraps": digital_wraps,
        })
        if max(h.width for h in hulls) > blowup:
            res.status = DIVERGED
            break
    return res


def ablation_variants(scenario: Scenario, no_sw: bool = False, no_symrem: bool = False, **kw) -> ReachResult:
    """Same pipeline with the named techniques switched off."""
    return reach_system(
        scenario,
        shrink_wrap=scenario.shrink_wrap and not no_sw,
        symbolic_remainders=scenario.symbolic_remainders and not no_symrem,
        **kw,
    )
