"""Reachability of a fixed-iteration gradient-descent controller.

The iterate ``z`` (all ``c * H`` future controls) is tracked as a vector of
Taylor models over the physical variables plus, transiently, digital and
predicted-state placeholder variables. After the last iterate every
non-physical variable is unwrapped, so the returned control models depend on
the physical variables only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import TMEvaluator
from .models import CostGraph
from .taylor import TMVector, tm_scale, tm_sub
from .wrapping import (
    RemainderThresholds,
    Role,
    VariableRegistry,
    box_shrink_unwrap,
    digital_box_shrink_wrap,
    large_remainder,
    symbolic_remainder_insert,
)


@dataclass(frozen=True)
class GDOptions:
    thresholds: RemainderThresholds = field(default_factory=RemainderThresholds)
    shrink_wrap: bool = True
    symbolic_remainders: bool = True


@dataclass
class GDState:
    tm_z: TMVector
    iterate: int = 0


def _record(tms) -> dict:
    hulls = [t.hull() for t in tms]
    return {
        "hulls": [[h.lo, h.hi] for h in hulls],
        "remainder_widths": [t.rem.width for t in tms],
    }


def tms_predicted(
    ev: TMEvaluator,
    cost: CostGraph,
    reg: VariableRegistry,
    thresholds: RemainderThresholds | None = None,
) -> tuple[list[list], list[tuple[int, int]]]:
    """Models of the predicted states ``x_{k+1} .. x_{k+H}``.

    With ``thresholds`` given, symbolic remainders are applied step by step,
    so later predicted states are computed from the placeholder form of the
    earlier ones. Returns the models and the ``(step, dim)`` pairs that
    received a placeholder.
    """
    out = []
    inserted = []
    for i, nodes in enumerate(cost.predicted):
        tms = ev.values(nodes)
        if thresholds is not None:
            tms, hits = apply_symbolic_remainders(tms, reg, thresholds, step=i)
            for dim in hits:
                ev.override(nodes[dim], tms[dim])
                inserted.append((i, dim))
        out.append(tms)
    return out, inserted


def apply_symbolic_remainders(tms, reg: VariableRegistry, th: RemainderThresholds, step: int):
    """Rewrite each model whose remainder is wider than the predicted threshold."""
    out = list(tms)
    hits = []
    if not large_remainder(tms, th, Role.PREDICTED):
        return out, hits
    for dim, t in enumerate(tms):
        if t.rem.width > th.predicted:
            out[dim] = symbolic_remainder_insert(t, reg, reg.predicted_slot(step, dim))
            hits.append(dim)
    return out, hits


def gd_step(
    st: GDState,
    tm_x: TMVector,
    cost: CostGraph,
    alpha: float,
    reg: VariableRegistry,
    opts: GDOptions,
    trace: list | None = None,
) -> GDState:
    """One update ``z <- z - alpha * grad J(z, x)`` followed by the wrap cycle."""
    ev = TMEvaluator(cost.graph, list(tm_x) + list(st.tm_z))
    th = opts.thresholds if opts.symbolic_remainders else None
    _, inserted = tms_predicted(ev, cost, reg, th)
    grads = ev.values(cost.grad)
    tm_z = [tm_sub(z, tm_scale(g, alpha)) for z, g in zip(st.tm_z, grads)]
    # placeholders live for exactly one iterate
    tm_z = box_shrink_unwrap(TMVector(tm_z, reg), reg, reg.live(Role.PREDICTED))
    wrapped = False
    if opts.shrink_wrap and large_remainder(tm_z, opts.thresholds, Role.DIGITAL):
        tm_z = box_shrink_unwrap(tm_z, reg, reg.live(Role.DIGITAL))
        tm_z = digital_box_shrink_wrap(tm_z, reg)
        wrapped = True
    if trace is not None:
        rec = {"iterate": st.iterate + 1, "alpha": alpha}
        rec.update(_record(tm_z))
        rec["symbolic_remainders"] = [list(p) for p in inserted]
        rec["digital_wrap"] = wrapped
        rec["tm_ops"] = ev.ops
        trace.append(rec)
    return GDState(tm_z, st.iterate + 1)


def reach_gradient_descent(
    tm_x: TMVector,
    cost: CostGraph,
    alphas,
    reg: VariableRegistry,
    opts: GDOptions = GDOptions(),
    trace: list | None = None,
) -> TMVector:
    """Control models ``u_k`` (first ``c`` entries of the final iterate) over physical variables."""
    if reg.live():
        raise RuntimeError("registry has live slots before gradient descent")
    zero = reg.zero()
    st = GDState(TMVector([zero] * (cost.c * cost.H), reg))
    for alpha in alphas:
        st = gd_step(st, tm_x, cost, alpha, reg, opts, trace)
    u = box_shrink_unwrap(st.tm_z[: cost.c], reg, reg.live())
    return u
