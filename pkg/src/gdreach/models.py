"""Plant dynamics and the receding-horizon quadratic cost as expression graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .graph import Expr, ExprGraph, differentiate

PLANT_PARAMS = {
    "quadcopter": ("m", "F", "g", "I", "r"),
    "cartpole": ("m_c", "m_p", "l", "g", "F"),
    "integrator": (),
}
PLANT_DIMS = {"quadcopter": (6, 2), "cartpole": (4, 1), "integrator": (1, 1)}


@dataclass(frozen=True)
class PlantParams:
    kind: str
    values: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in PLANT_PARAMS:
            raise ValueError(f"unknown plant {self.kind!r}")
        missing = set(PLANT_PARAMS[self.kind]) - set(self.values)
        if missing:
            raise ValueError(f"{self.kind} is missing parameters {sorted(missing)}")
        for k, v in self.values.items():
            if not v > 0:
                raise ValueError(f"parameter {k} must be positive, got {v}")

    def __getitem__(self, k: str) -> float:
        return float(self.values[k])

    @property
    def dims(self) -> tuple[int, int]:
        return PLANT_DIMS[self.kind]


def _quadcopter_rates(g: ExprGraph, p: PlantParams, x: Sequence[Expr], u: Sequence[Expr]):
    m, F, grav, I, r = p["m"], p["F"], p["g"], p["I"], p["r"]
    _, _, th, vh, vv, om = x
    t1, t2 = g.tanh(u[0]), g.tanh(u[1])
    thrust = t1 + t2
    acc_h = -(F / m) * thrust * g.sin(th)
    acc_v = (F / m) * thrust * g.cos(th) - grav
    acc_th = (r * F / I) * (t1 - t2)
    return [vh, vv, om, acc_h, acc_v, acc_th]


def _cartpole_rates(g: ExprGraph, p: PlantParams, x: Sequence[Expr], u: Sequence[Expr]):
    mc, mp, l, grav, F = p["m_c"], p["m_p"], p["l"], p["g"], p["F"]
    total = mc + mp
    _, v, th, om = x
    s, c = g.sin(th), g.cos(th)
    beta = (F * u[0] + (mp * l) * g.sq(om) * s) * (1.0 / total)
    denom = l * (4.0 / 3.0 - (mp / total) * g.sq(c))
    acc_th = (grav * s - beta * c) / denom
    acc_p = (beta - (mp * l) * acc_th * c) * (1.0 / total)
    return [v, acc_p, om, acc_th]


def _integrator_rates(g, p, x, u):
    return [u[0]]


_RATES = {
    "quadcopter": _quadcopter_rates,
    "cartpole": _cartpole_rates,
    "integrator": _integrator_rates,
}


def euler_step(g: ExprGraph, params: PlantParams, x: Sequence[Expr], u: Sequence[Expr], dt: float) -> list[Expr]:
    rates = _RATES[params.kind](g, params, x, u)
    return [xi + dt * ri for xi, ri in zip(x, rates)]


@dataclass
class PlantGraph:
    graph: ExprGraph
    outputs: list[int]
    d: int
    c: int
    dt: float


def build_plant_graph(params: PlantParams, dt: float) -> PlantGraph:
    """One Euler step ``x+ = x + dt * f(x, u)``; inputs are x (d slots) then u (c slots)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    d, c = params.dims
    g = ExprGraph(d + c)
    x = [g.var(i) for i in range(d)]
    u = [g.var(d + j) for j in range(c)]
    nxt = euler_step(g, params, x, u, dt)
    return PlantGraph(g, [e.id for e in nxt], d, c, dt)


@dataclass(frozen=True)
class CostSpec:
    H: int
    Q: tuple  # H matrices, d x d
    R: tuple  # c x c, or H of them
    dt: float

    def __post_init__(self):
        if self.H < 1:
            raise ValueError("horizon H must be >= 1")
        if len(self.Q) != self.H:
            raise ValueError(f"need {self.H} state weight matrices, got {len(self.Q)}")
        for Qi in self.Q:
            q = np.asarray(Qi, dtype=float)
            if q.ndim != 2 or q.shape[0] != q.shape[1] or not np.allclose(q, q.T):
                raise ValueError("state weights must be symmetric square matrices")
            if np.linalg.eigvalsh(q).min() < -1e-12:
                raise ValueError("state weights must be positive semidefinite")
        for Ri in self.R_list:
            r = np.asarray(Ri, dtype=float)
            if r.ndim != 2 or r.shape[0] != r.shape[1] or not np.allclose(r, r.T):
                raise ValueError("control weights must be symmetric square matrices")
        if not self.dt > 0:
            raise ValueError("cost dt must be positive")

    @property
    def R_list(self) -> tuple:
        r = np.asarray(self.R, dtype=float)
        if r.ndim == 2:
            return (self.R,) * self.H
        return self.R


@dataclass(frozen=True)
class GDConfig:
    alpha: tuple[float, ...]

    def __post_init__(self):
        if any(not a > 0 for a in self.alpha):
            raise ValueError("learning rates must be positive")

    @property
    def T(self) -> int:
        return len(self.alpha)


def _quadratic(g: ExprGraph, M, v: Sequence[Expr]) -> Expr | None:
    total = None
    n = len(v)
    for a in range(n):
        for b in range(a, n):
            w = float(M[a][b]) if a == b else float(M[a][b]) + float(M[b][a])
            if w == 0.0:
                continue
            term = w * (g.sq(v[a]) if a == b else v[a] * v[b])
            total = term if total is None else total + term
    return total


@dataclass
class CostGraph:
    graph: ExprGraph
    J: int
    grad: list[int]
    predicted: list[list[int]]  # predicted[i][dim] is x_{k+1+i}
    d: int
    c: int
    H: int

    def z_index(self, step: int, j: int) -> int:
        return step * self.c + j


def build_cost_graph(params: PlantParams, cost: CostSpec) -> CostGraph:
    """Cost J(z, x_k) with the rollout unrolled; inputs x_k (d) then z (c*H)."""
    d, c = params.dims
    H = cost.H
    g = ExprGraph(d + c * H)
    x = [g.var(i) for i in range(d)]
    z = [g.var(d + i) for i in range(c * H)]
    J = g.const(0.0)
    predicted = []
    for i in range(H):
        u = z[i * c:(i + 1) * c]
        x = euler_step(g, params, x, u, cost.dt)
        predicted.append([e.id for e in x])
        for term in (_quadratic(g, cost.Q[i], x), _quadratic(g, cost.R_list[i], u)):
            if term is not None:
                J = J + term
    grad = differentiate(g, J.id, list(range(d, d + c * H)))
    return CostGraph(g, J.id, grad, predicted, d, c, H)
