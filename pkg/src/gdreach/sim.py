"""Concrete closed-loop simulation, used as the under-approximation oracle for
the reach sets."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .config import Scenario
from .graph import compile_concrete
from .models import build_cost_graph, build_plant_graph


@dataclass
class Trajectory:
    states: list[list[float]]  # k = 0..K (fewer when truncated)
    controls: list[list[float]]  # one per completed step
    seed: int | None = None
    truncated: bool = False
    reason: str | None = None

    def __post_init__(self):
        if self.states and len(self.controls) != len(self.states) - 1:
            raise ValueError("a trajectory needs exactly one control per transition")


_COMPILED: dict[str, tuple] = {}


def _compiled(scenario: Scenario):
    key = scenario.fingerprint()
    if key not in _COMPILED:
        _COMPILED[key] = _compile(scenario)
    return _COMPILED[key]


def _compile(scenario: Scenario):
    plant = build_plant_graph(scenario.plant, scenario.control_dt)
    cost = build_cost_graph(scenario.plant, scenario.cost)
    return compile_concrete(plant.graph, plant.outputs), compile_concrete(cost.graph, cost.grad)


def controller(scenario: Scenario, x) -> list[float]:
    """Fixed-iteration gradient descent from ``z = 0``; returns the first ``c`` entries."""
    _, grad = _compiled(scenario)
    c, H = scenario.c, scenario.cost.H
    z = [0.0] * (c * H)
    for a in scenario.gd.alpha:
        g = grad(list(x) + z)
        z = [zi - a * gi for zi, gi in zip(z, g)]
    return z[:c]


def simulate(scenario: Scenario, x0, K: int | None = None, seed: int | None = None) -> Trajectory:
    K = scenario.K if K is None else K
    if len(x0) != scenario.d:
        raise ValueError(f"initial state needs {scenario.d} entries")
    for i, ((lo, hi), v) in enumerate(zip(scenario.initial, x0)):
        if not lo <= v <= hi:
            raise ValueError(f"x0[{i}] = {v} is outside the initial box [{lo}, {hi}]")
    step, _ = _compiled(scenario)
    x = [float(v) for v in x0]
    tr = Trajectory([x], [], seed)
    for k in range(K):
        try:
            u = controller(scenario, x)
            x = list(step(x + u))
        except ArithmeticError as e:  # division by zero, overflow in pow
            tr.truncated, tr.reason = True, f"step {k + 1}: {e}"
            break
        if not all(math.isfinite(v) for v in x):
            tr.truncated, tr.reason = True, f"step {k + 1}: non-finite state"
            break
        tr.controls.append(u)
        tr.states.append(x)
    return tr


def sample_initial(scenario: Scenario, n: int, seed: int | None = None) -> np.ndarray:
    """``n`` states drawn uniformly from the initial box."""
    rng = np.random.default_rng(scenario.seed if seed is None else seed)
    lo = np.array([b[0] for b in scenario.initial])
    hi = np.array([b[1] for b in scenario.initial])
    pts = rng.uniform(lo, hi, size=(n, len(lo)))
    return np.clip(pts, lo, hi)


def simulate_many(scenario: Scenario, n: int, K: int | None = None, seed: int | None = None) -> list[Trajectory]:
    seed = scenario.seed if seed is None else seed
    return [simulate(scenario, x0.tolist(), K, seed) for x0 in sample_initial(scenario, n, seed)]


class FingerprintMismatch(ValueError):
    pass


@dataclass
class ContainmentReport:
    passed: bool
    checked: int
    failures: list[dict] = field(default_factory=list)
    first_violation: dict | None = None
    tightness: list[list[float | None]] = field(default_factory=list)  # [k][dim]
    truncated: int = 0

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "trajectories": self.checked,
            "truncated": self.truncated,
            "violations": len(self.failures),
            "first_violation": self.first_violation,
            "failures": self.failures[:100],
            "tightness": self.tightness,
        }


def containment_check(trajs, result, fingerprint: str | None = None) -> ContainmentReport:
    """Check that every simulated state lies inside the hull of its step.

    ``fingerprint`` is the scenario fingerprint the trajectories came from;
    a mismatch with the reach result is an error, not a failed check.
    """
    if fingerprint is not None and fingerprint != result.fingerprint:
        raise FingerprintMismatch(
            f"trajectories from scenario {fingerprint}, reach result from {result.fingerprint}"
        )
    trajs = list(trajs)
    failures = []
    nk = len(result.hulls)
    lo_seen = [[math.inf] * len(h) for h in result.hulls]
    hi_seen = [[-math.inf] * len(h) for h in result.hulls]
    for t, tr in enumerate(trajs):
        for k, x in enumerate(tr.states[:nk]):
            for i, (v, h) in enumerate(zip(x, result.hulls[k])):
                lo_seen[k][i] = min(lo_seen[k][i], v)
                hi_seen[k][i] = max(hi_seen[k][i], v)
                if not h.lo <= v <= h.hi:
                    failures.append({"traj": t, "k": k, "dim": i, "value": v, "lo": h.lo, "hi": h.hi})
    failures.sort(key=lambda f: (f["k"], f["dim"], f["traj"]))
    tight = []
    for k, hs in enumerate(result.hulls):
        row = []
        for i, h in enumerate(hs):
            if lo_seen[k][i] > hi_seen[k][i] or h.width == 0:
                row.append(None)
            else:
                row.append((hi_seen[k][i] - lo_seen[k][i]) / h.width)
        tight.append(row)
    return ContainmentReport(
        passed=not failures,
        checked=len(trajs),
        failures=failures,
        first_violation=failures[0] if failures else None,
        tightness=tight,
        truncated=sum(tr.truncated for tr in trajs),
    )


def trajectories_csv(trajs) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["traj_id", "k", "dim", "value"])
    for t, tr in enumerate(trajs):
        for k, x in enumerate(tr.states):
            for i, v in enumerate(x):
                w.writerow([t, k, i, repr(float(v))])
    return buf.getvalue()
