"""Expression DAGs with structural hashing, symbolic reverse-mode
differentiation, and concrete or Taylor-model evaluation."""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

from .taylor import (
    TaylorModel,
    tm_add,
    tm_cos,
    tm_mul,
    tm_neg,
    tm_pow,
    tm_recip,
    tm_sin,
    tm_tanh,
)

VAR, CONST, ADD, MUL, NEG, SIN, COS, TANH, RECIP, POW = (
    "var", "const", "add", "mul", "neg", "sin", "cos", "tanh", "recip", "pow",
)
_UNARY = (NEG, SIN, COS, TANH, RECIP)
MAX_POW = 8


class Expr:
    """Handle to a node; supports ``+ - *`` and ``/`` (through ``recip``)."""

    __slots__ = ("g", "id")

    def __init__(self, g: ExprGraph, id: int):
        self.g = g
        self.id = id

    def _other(self, o) -> int:
        return o.id if isinstance(o, Expr) else self.g._const(float(o))

    def __add__(self, o):
        return Expr(self.g, self.g._add(self.id, self._other(o)))

    __radd__ = __add__

    def __sub__(self, o):
        return Expr(self.g, self.g._add(self.id, self.g._neg(self._other(o))))

    def __rsub__(self, o):
        return Expr(self.g, self.g._add(self._other(o), self.g._neg(self.id)))

    def __mul__(self, o):
        return Expr(self.g, self.g._mul(self.id, self._other(o)))

    __rmul__ = __mul__

    def __neg__(self):
        return Expr(self.g, self.g._neg(self.id))

    def __truediv__(self, o):
        return Expr(self.g, self.g._mul(self.id, self.g._recip(self._other(o))))

    def __rtruediv__(self, o):
        return Expr(self.g, self.g._mul(self._other(o), self.g._recip(self.id)))

    def __pow__(self, n: int):
        return Expr(self.g, self.g._pow(self.id, n))

    def __repr__(self) -> str:
        return f"Expr(#{self.id} {self.g.nodes[self.id][0]})"


class ExprGraph:
    """Append-only DAG. Node ids are a topological order (children first)."""

    def __init__(self, ninputs: int):
        self.ninputs = ninputs
        self.nodes: list[tuple[str, tuple[int, ...], object]] = []
        self._index: dict[tuple, int] = {}
        self.inputs = [self._node(VAR, (), i) for i in range(ninputs)]

    # -- construction --------------------------------------------------------

    def _node(self, op: str, args: tuple[int, ...], param=None) -> int:
        key = (op, args, param)
        nid = self._index.get(key)
        if nid is None:
            nid = len(self.nodes)
            self.nodes.append(key)
            self._index[key] = nid
        return nid

    def _is_const(self, n: int, value: float | None = None) -> bool:
        op, _, p = self.nodes[n]
        return op == CONST and (value is None or p == value)

    def _cval(self, n: int) -> float:
        return self.nodes[n][2]

    def _const(self, c: float) -> int:
        c = float(c)
        if c == 0.0:
            c = 0.0  # fold -0.0
        return self._node(CONST, (), c)

    def _add(self, a: int, b: int) -> int:
        if self._is_const(a) and self._is_const(b):
            return self._const(self._cval(a) + self._cval(b))
        if self._is_const(a, 0.0):
            return b
        if self._is_const(b, 0.0):
            return a
        return self._node(ADD, (min(a, b), max(a, b)))

    def _mul(self, a: int, b: int) -> int:
        if self._is_const(a) and self._is_const(b):
            return self._const(self._cval(a) * self._cval(b))
        if self._is_const(a, 0.0) or self._is_const(b, 0.0):
            return self._const(0.0)
        if self._is_const(a, 1.0):
            return b
        if self._is_const(b, 1.0):
            return a
        if self._is_const(a, -1.0):
            return self._neg(b)
        if self._is_const(b, -1.0):
            return self._neg(a)
        return self._node(MUL, (min(a, b), max(a, b)))

    def _neg(self, a: int) -> int:
        op, args, p = self.nodes[a]
        if op == CONST:
            return self._const(-p)
        if op == NEG:
            return args[0]
        return self._node(NEG, (a,))

    def _unary(self, op: str, a: int) -> int:
        if self._is_const(a):
            v = self._cval(a)
            return self._const(_FLOAT_UNARY[op](v))
        return self._node(op, (a,))

    def _recip(self, a: int) -> int:
        if self._is_const(a, 0.0):
            raise ZeroDivisionError("reciprocal of constant zero")
        return self._unary(RECIP, a)

    def _pow(self, a: int, n: int) -> int:
        if not isinstance(n, int) or not 0 <= n <= MAX_POW:
            raise ValueError(f"pow exponent must be an int in [0, {MAX_POW}]")
        if n == 0:
            return self._const(1.0)
        if n == 1:
            return a
        if self._is_const(a):
            return self._const(self._cval(a) ** n)
        return self._node(POW, (a,), n)

    def var(self, i: int) -> Expr:
        return Expr(self, self.inputs[i])

    def const(self, c: float) -> Expr:
        return Expr(self, self._const(c))

    def sin(self, e: Expr) -> Expr:
        return Expr(self, self._unary(SIN, e.id))

    def cos(self, e: Expr) -> Expr:
        return Expr(self, self._unary(COS, e.id))

    def tanh(self, e: Expr) -> Expr:
        return Expr(self, self._unary(TANH, e.id))

    def recip(self, e: Expr) -> Expr:
        return Expr(self, self._recip(e.id))

    def sq(self, e: Expr) -> Expr:
        return Expr(self, self._pow(e.id, 2))

    def expr(self, nid: int) -> Expr:
        return Expr(self, nid)

    # -- queries ---------------------------------------------------------

    def __len__(self) -> int:
        return len(self.nodes)

    def closure(self, roots: Sequence[int]) -> list[int]:
        """All nodes the roots depend on, ascending (hence topological)."""
        seen: set[int] = set()
        stack = list(roots)
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            stack.extend(self.nodes[n][1])
        return sorted(seen)

    def dump(self, roots: Sequence[int] | None = None) -> str:
        ids = range(len(self.nodes)) if roots is None else self.closure(roots)
        lines = []
        for n in ids:
            op, args, p = self.nodes[n]
            parts = [str(n), op] + [str(a) for a in args]
            if p is not None:
                parts.append(repr(p))
            lines.append(" ".join(parts))
        return "\n".join(lines)


_FLOAT_UNARY: dict[str, Callable[[float], float]] = {
    NEG: lambda v: -v,
    SIN: math.sin,
    COS: math.cos,
    TANH: math.tanh,
    RECIP: lambda v: 1.0 / v,
}


def differentiate(g: ExprGraph, output: int, wrt: Sequence[int]) -> list[int]:
    """Reverse-mode symbolic gradient of node ``output`` w.r.t. input slots ``wrt``.

    New nodes are appended to ``g``; returns one node id per slot.
    """
    order = g.closure([output])
    wrt_nodes = {g.inputs[i] for i in wrt}
    depends: set[int] = set()
    for n in order:
        op, args, _ = g.nodes[n]
        if n in wrt_nodes or any(a in depends for a in args):
            depends.add(n)
    adj: dict[int, int] = {output: g._const(1.0)}

    def push(child: int, contrib: int):
        if child not in depends:
            return
        prev = adj.get(child)
        adj[child] = contrib if prev is None else g._add(prev, contrib)

    for n in reversed(order):
        a = adj.get(n)
        if a is None or n not in depends:
            continue
        op, args, p = g.nodes[n]
        if op == ADD:
            push(args[0], a)
            push(args[1], a)
        elif op == MUL:
            x, y = args
            push(x, g._mul(a, y))
            push(y, g._mul(a, x))
        elif op == NEG:
            push(args[0], g._neg(a))
        elif op == SIN:
            push(args[0], g._mul(a, g._unary(COS, args[0])))
        elif op == COS:
            push(args[0], g._neg(g._mul(a, g._unary(SIN, args[0]))))
        elif op == TANH:
            # d tanh = 1 - tanh^2
            local = g._add(g._const(1.0), g._neg(g._pow(n, 2)))
            push(args[0], g._mul(a, local))
        elif op == RECIP:
            # d recip(v) = -recip(v)^2
            push(args[0], g._neg(g._mul(a, g._pow(n, 2))))
        elif op == POW:
            local = g._mul(g._const(float(p)), g._pow(args[0], p - 1))
            push(args[0], g._mul(a, local))
    zero = g._const(0.0)
    return [adj.get(g.inputs[i], zero) for i in wrt]


# -- concrete evaluation ---------------------------------------------------


def eval_graph_concrete(
    g: ExprGraph,
    env: Sequence,
    outputs: Sequence[int],
    lib=math,
) -> list:
    """Evaluate ``outputs`` with plain numbers. ``lib`` supplies sin/cos/tanh
    (``math`` or ``mpmath.mp`` for high-precision oracles)."""
    vals: dict[int, object] = {}
    for n in g.closure(outputs):
        op, args, p = g.nodes[n]
        if op == VAR:
            v = env[p]
        elif op == CONST:
            v = p if lib is math else lib.mpf(p)
        elif op == ADD:
            v = vals[args[0]] + vals[args[1]]
        elif op == MUL:
            v = vals[args[0]] * vals[args[1]]
        elif op == NEG:
            v = -vals[args[0]]
        elif op == SIN:
            v = lib.sin(vals[args[0]])
        elif op == COS:
            v = lib.cos(vals[args[0]])
        elif op == TANH:
            v = lib.tanh(vals[args[0]])
        elif op == RECIP:
            x = vals[args[0]]
            if x == 0:
                raise ZeroDivisionError(f"reciprocal of zero at node {n}")
            v = 1 / x
        elif op == POW:
            v = vals[args[0]] ** p
        else:  # pragma: no cover
            raise ValueError(op)
        vals[n] = v
    return [vals[o] for o in outputs]


def compile_concrete(g: ExprGraph, outputs: Sequence[int]) -> Callable[[Sequence[float]], tuple]:
    """Generate a Python function equivalent to :func:`eval_graph_concrete` for floats."""
    lines = ["def _f(env):"]
    for n in g.closure(outputs):
        op, args, p = g.nodes[n]
        a = [f"v{i}" for i in args]
        if op == VAR:
            rhs = f"env[{p}]"
        elif op == CONST:
            rhs = repr(p)
        elif op == ADD:
            rhs = f"{a[0]} + {a[1]}"
        elif op == MUL:
            rhs = f"{a[0]} * {a[1]}"
        elif op == NEG:
            rhs = f"-{a[0]}"
        elif op in (SIN, COS, TANH):
            rhs = f"_m.{op}({a[0]})"
        elif op == RECIP:
            rhs = f"1.0 / {a[0]}"
        elif op == POW:
            rhs = f"{a[0]} ** {p}"
        lines.append(f"    v{n} = {rhs}")
    lines.append("    return (" + "".join(f"v{o}, " for o in outputs) + ")")
    ns = {"_m": math}
    exec("\n".join(lines), ns)
    return ns["_f"]


# -- Taylor-model evaluation -------------------------------------------------


class TMEvaluator:
    """Memoised Taylor-model evaluation of graph nodes for one environment.

    ``override`` pins the value of a node; later evaluations of anything
    downstream use the pinned model.
    """

    def __init__(self, g: ExprGraph, env: Sequence[TaylorModel]):
        if len(env) < g.ninputs:
            raise ValueError(f"environment has {len(env)} models, graph needs {g.ninputs}")
        self.g = g
        self.space = env[0].space
        self.memo: dict[int, TaylorModel] = {}
        self._env = env
        self.ops = 0

    def override(self, node: int, tm: TaylorModel):
        self.memo[node] = tm

    def value(self, node: int) -> TaylorModel:
        return self.values([node])[0]

    def values(self, nodes: Sequence[int]) -> list[TaylorModel]:
        memo = self.memo
        g = self.g
        pending: list[int] = []
        seen: set[int] = set()
        stack = [n for n in nodes if n not in memo]
        while stack:
            n = stack.pop()
            if n in seen or n in memo:
                continue
            seen.add(n)
            pending.append(n)
            stack.extend(a for a in g.nodes[n][1] if a not in memo)
        for n in sorted(pending):
            memo[n] = self._compute(n)
        return [memo[n] for n in nodes]

    def _compute(self, n: int) -> TaylorModel:
        op, args, p = self.g.nodes[n]
        memo = self.memo
        self.ops += 1
        if op == VAR:
            return self._env[p]
        if op == CONST:
            return TaylorModel.const(self.space, p)
        if op == ADD:
            return tm_add(memo[args[0]], memo[args[1]])
        if op == MUL:
            return tm_mul(memo[args[0]], memo[args[1]])
        if op == NEG:
            return tm_neg(memo[args[0]])
        if op == SIN:
            return tm_sin(memo[args[0]])
        if op == COS:
            return tm_cos(memo[args[0]])
        if op == TANH:
            return tm_tanh(memo[args[0]])
        if op == RECIP:
            return tm_recip(memo[args[0]])
        if op == POW:
            return tm_pow(memo[args[0]], p)
        raise ValueError(op)  # pragma: no cover


def eval_graph_tm(
    g: ExprGraph,
    env: Sequence[TaylorModel],
    outputs: Sequence[int],
    overrides: Mapping[int, TaylorModel] | None = None,
) -> list[TaylorModel]:
    ev = TMEvaluator(g, env)
    for n, tm in (overrides or {}).items():
        ev.override(n, tm)
    return ev.values(outputs)
