import math

import mpmath
import numpy as np
import pytest

from gdreach.config import load_scenario
from gdreach.graph import ExprGraph, compile_concrete, differentiate, eval_graph_concrete, eval_graph_tm
from gdreach.models import build_cost_graph
from gdreach.poly import PolySpace
from gdreach.taylor import TaylorModel


def fd_gradient(g, out, x, wrt, h=mpmath.mpf("1e-12")):
    """Central differences in 40-digit arithmetic; truncation error ~h^2."""
    with mpmath.workdps(40):
        env = [mpmath.mpf(v) for v in x]
        grad = []
        for i in wrt:
            up, dn = list(env), list(env)
            up[i] += h
            dn[i] -= h
            f1 = eval_graph_concrete(g, up, [out], lib=mpmath.mp)[0]
            f0 = eval_graph_concrete(g, dn, [out], lib=mpmath.mp)[0]
            grad.append(float((f1 - f0) / (2 * h)))
    return np.array(grad)


def max_rel_error(a, b):
    scale = max(np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


def test_structural_hashing():
    g = ExprGraph(2)
    x, y = g.var(0), g.var(1)
    a = g.sin(x * y + 1.0)
    b = g.sin(y * x + 1.0)
    assert a.id == b.id
    n = len(g)
    g.sin(x * y + 1.0)
    assert len(g) == n


def test_constant_folding():
    g = ExprGraph(1)
    x = g.var(0)
    assert (x * 0.0).id == g.const(0.0).id
    assert (x * 1.0).id == x.id
    assert (x + 0.0).id == x.id
    assert (-(-x)).id == x.id
    assert g.nodes[(g.const(2.0) * 3.0).id] == ("const", (), 6.0)


def test_dump_lists_nodes():
    g = ExprGraph(1)
    e = g.tanh(g.var(0) * 2.0)
    lines = g.dump([e.id]).splitlines()
    assert lines[0] == "0 var 0"
    assert lines[-1].split()[1] == "tanh"


@pytest.mark.parametrize(
    "build, d",
    [
        (lambda g, x: x * x, lambda x: 2 * x),
        (lambda g, x: g.sin(x), math.cos),
        (lambda g, x: g.cos(x), lambda x: -math.sin(x)),
        (lambda g, x: g.tanh(x), lambda x: 1 - math.tanh(x) ** 2),
        (lambda g, x: 1.0 / x, lambda x: -1 / x**2),
        (lambda g, x: x**3, lambda x: 3 * x**2),
        (lambda g, x: g.sin(x) * g.cos(x), lambda x: math.cos(2 * x)),
    ],
)
def test_derivative_rules(build, d):
    g = ExprGraph(1)
    f = build(g, g.var(0))
    (df,) = differentiate(g, f.id, [0])
    for x in (0.7, -1.3, 2.1):
        assert eval_graph_concrete(g, [x], [df])[0] == pytest.approx(d(x), rel=1e-13)


def test_gradient_of_square_example():
    # J = (x + u)^2 at u = 0 has dJ/du = 2x
    g = ExprGraph(2)
    x, u = g.var(0), g.var(1)
    J = g.sq(x + u)
    (du,) = differentiate(g, J.id, [1])
    sp = PolySpace(1, 3)
    t = eval_graph_tm(g, [TaylorModel.var(sp, 0), TaylorModel.const(sp, 0.0)], [du])[0]
    assert t == TaylorModel.var(sp, 0, 2.0)


def test_independent_input_has_zero_gradient():
    g = ExprGraph(2)
    f = g.sin(g.var(0))
    (d1,) = differentiate(g, f.id, [1])
    assert g.nodes[d1] == ("const", (), 0.0)


@pytest.mark.parametrize("name", ["quadcopter", "cartpole"])
def test_gradient_matches_finite_differences(name):
    sc = load_scenario(name)
    cost = build_cost_graph(sc.plant, sc.cost)
    d, n = cost.d, cost.c * cost.H
    grad = compile_concrete(cost.graph, cost.grad)
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        x = rng.uniform(-1, 1, d) * 0.5
        z = rng.uniform(-1, 1, n)
        env = list(x) + list(z)
        sym = np.array(grad(env))
        fd = fd_gradient(cost.graph, cost.J, env, range(d, d + n))
        worst = max(worst, max_rel_error(sym, fd))
    assert worst <= 1e-5


@pytest.mark.parametrize("name", ["quadcopter", "cartpole"])
def test_compiled_matches_interpreter(name):
    sc = load_scenario(name)
    cost = build_cost_graph(sc.plant, sc.cost)
    f = compile_concrete(cost.graph, [cost.J] + cost.grad)
    rng = np.random.default_rng(3)
    for _ in range(20):
        env = list(rng.uniform(-1, 1, cost.graph.ninputs))
        assert f(env) == tuple(eval_graph_concrete(cost.graph, env, [cost.J] + cost.grad))


def test_tm_evaluation_encloses_samples():
    g = ExprGraph(2)
    x, y = g.var(0), g.var(1)
    f = g.tanh(x * 0.5 + y) * g.cos(y) + 1.0 / (3.0 + x * y)
    sp = PolySpace(2, 3)
    t = eval_graph_tm(g, [TaylorModel.var(sp, 0), TaylorModel.var(sp, 1)], [f.id])[0]
    X = np.random.default_rng(0).uniform(-1, 1, size=(10_000, 2))
    v = np.tanh(0.5 * X[:, 0] + X[:, 1]) * np.cos(X[:, 1]) + 1 / (3 + X[:, 0] * X[:, 1])
    p = t.poly.eval_many(X)
    assert np.all(v >= p + t.rem.lo - 1e-15) and np.all(v <= p + t.rem.hi + 1e-15)


def test_tm_overrides_pin_nodes():
    g = ExprGraph(1)
    a = g.sin(g.var(0))
    b = a * 2.0
    sp = PolySpace(1, 3)
    pinned = TaylorModel.const(sp, 0.25)
    out = eval_graph_tm(g, [TaylorModel.var(sp, 0)], [b.id], overrides={a.id: pinned})[0]
    assert out == TaylorModel.const(sp, 0.5)
