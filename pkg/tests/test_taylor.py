import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import _chains
from gdreach.interval import Interval
from gdreach.poly import Polynomial, PolySpace
from gdreach.taylor import (
    DomainError,
    RegistryMismatch,
    TaylorModel,
    TMVector,
    tm_add,
    tm_compose,
    tm_cos,
    tm_elementary,
    tm_hull,
    tm_mul,
    tm_recip,
    tm_sin,
    tm_sqr,
    tm_tanh,
    tm_truncate,
)

SP = PolySpace(2, 3)
X1 = TaylorModel.var(SP, 0)
X2 = TaylorModel.var(SP, 1)


def tm(items, rem=(0.0, 0.0), space=SP):
    return TaylorModel(Polynomial.from_powers(space, items), Interval(*rem))


def samples(n=10_000, nvars=2, seed=0):
    return np.random.default_rng(seed).uniform(-1, 1, size=(n, nvars))


def assert_encloses(t: TaylorModel, f, X, slack=0.0):
    p = t.poly.eval_many(X)
    v = f(X)
    lo = p + t.rem.lo - slack
    hi = p + t.rem.hi + slack
    bad = np.flatnonzero((v < lo) | (v > hi))
    assert bad.size == 0, f"{bad.size} samples escape, first at {X[bad[0]]}"


def test_add_examples():
    r = tm_add(X1, X2)
    assert r.poly == Polynomial.from_powers(SP, [(1, [1, 0]), (1, [0, 1])]) and r.rem.is_zero()
    r = tm_add(tm([(1, [1, 0])], (-0.1, 0.1)), tm([(-1, [1, 0])], (-0.1, 0.1)))
    assert r.poly.is_zero()
    assert r.rem.contains_interval(Interval(-0.2, 0.2)) and r.rem.width < 0.4 + 1e-15
    r = tm_add(tm([(1, [0, 0]), (1, [1, 0])], (0.0, 0.1)), tm([(2, [0, 0])], (-0.1, 0.0)))
    assert r.poly == Polynomial.from_powers(SP, [(3, [0, 0]), (1, [1, 0])])
    assert r.rem.contains_interval(Interval(-0.1, 0.1)) and r.rem.width < 0.2 + 1e-15


def test_mul_examples():
    r = tm_mul(X1, X1)
    assert r.poly == Polynomial.from_powers(SP, [(1, [2, 0])]) and r.rem.is_zero()
    r = tm_mul(TaylorModel.const(SP, 2.0), tm([(1, [1, 0])], (-0.1, 0.1)))
    assert r.poly == Polynomial.from_powers(SP, [(2, [1, 0])])
    assert r.rem.contains_interval(Interval(-0.2, 0.2)) and r.rem.width < 0.4 + 1e-15
    r = tm_mul(TaylorModel.const(SP, 0.0), tm([(1, [1, 1])], (-0.3, 0.5)))
    assert r.poly.is_zero() and r.rem.is_zero()


def test_mul_remainder_formula():
    # Int(p1) I2 + Int(p2) I1 + I1 I2 with p1 = x1 (Int [-1,1]), p2 = 1 + x2 (Int [0,2])
    t1 = tm([(1, [1, 0])], (-0.1, 0.1))
    t2 = tm([(1, [0, 0]), (1, [0, 1])], (0.0, 0.2))
    r = tm_mul(t1, t2)
    expected = Interval(-1, 1) * Interval(0, 0.2) + Interval(0, 2) * Interval(-0.1, 0.1) + Interval(-0.1, 0.1) * Interval(0, 0.2)
    assert r.rem.contains_interval(expected)
    assert r.rem.width <= expected.width * (1 + 1e-12)


def test_registry_mismatch():
    other = TaylorModel.var(PolySpace(3, 3), 0)
    with pytest.raises(RegistryMismatch):
        tm_add(X1, other)
    with pytest.raises(RegistryMismatch):
        tm_mul(X1, other)


def test_truncate_examples():
    r = tm_truncate(tm([(1, [3, 0])]), 2)
    assert r.poly.is_zero() and r.rem == Interval(-1, 1)
    assert tm_truncate(X1, 2) == X1
    r = tm_truncate(tm([(1, [2, 0]), (1, [4, 0])]), 3)
    assert r.poly == Polynomial.from_powers(SP, [(1, [2, 0])]) and r.rem == Interval(0, 1)


def test_mul_truncates_at_cap():
    r = tm_mul(tm_mul(X1, X1), tm_mul(X1, X2))
    assert r.poly.is_zero() and r.rem == Interval(-1, 1)


def test_cos_order_four():
    sp = PolySpace(1, 4)
    t = tm_cos(TaylorModel.var(sp, 0), order=4)
    expect = Polynomial.from_powers(sp, [(1, [0]), (-0.5, [2]), (1 / 24, [4])])
    for (c, pw), (e, pe) in zip(t.poly.monomials(), expect.monomials()):
        assert pw == pe and c == pytest.approx(e, rel=1e-15)
    assert Interval(-1 / 120, 1 / 120).contains_interval(Interval(t.rem.lo * 0.999, t.rem.hi * 0.999))
    assert t.rem.mag <= 1 / 120 * (1 + 1e-9)
    X = np.linspace(-1, 1, 20001)[:, None]
    assert_encloses(t, lambda X: np.cos(X[:, 0]), X, slack=1e-15)


def test_tanh_of_zero():
    t = tm_tanh(TaylorModel.const(SP, 0.0))
    assert t.hull().mag < 1e-300 or t.hull().contains(0.0)
    assert t.hull().mag < 1e-15


def test_recip_range():
    t = tm_recip(tm([(2.0, [0, 0]), (0.1, [1, 0])]))
    h = t.hull()
    assert h.lo <= 1 / 2.1 and 1 / 1.9 <= h.hi
    # the model's range (polynomial plus remainder) is tight; the hull adds
    # the per-monomial bounding slack on top
    X = np.linspace(-1, 1, 2001)[:, None]
    p = t.poly.eval_many(X)
    eps = 1e-4
    assert (p + t.rem.lo).min() >= 1 / 2.1 - eps and (p + t.rem.hi).max() <= 1 / 1.9 + eps
    assert_encloses(t, lambda X: 1 / (2.0 + 0.1 * X[:, 0]), X, slack=1e-16)


def test_recip_domain_error():
    with pytest.raises(DomainError):
        tm_recip(tm([(0.5, [0, 0]), (1.0, [1, 0])]))
    with pytest.raises(DomainError):
        tm_recip(tm([(1.0, [0, 0])], (-1.0, 0.0)))


def test_elementary_rejects_unknown():
    with pytest.raises(ValueError):
        tm_elementary("exp", X1)


def test_compose_examples():
    f = TMVector([tm_add(X1, X2)])
    r = tm_compose(f, [X1, TaylorModel.const(SP, 0.0)])
    assert r[0] == X1
    sp1 = PolySpace(1, 3)
    f = TMVector([tm([(1, [2])], space=sp1)])
    arg = tm([(0.5, [1])], (-0.1, 0.1), space=sp1)
    r = tm_compose(f, [arg])[0]
    h = r.hull()
    assert h.lo <= 0.0 and 0.36 <= h.hi
    f = TMVector([tm([(1, [1, 0])], (-0.01, 0.02))])
    r = tm_compose(f, [X1, X2])[0]
    assert r.rem.contains_interval(Interval(-0.01, 0.02))
    with pytest.raises(ValueError):
        tm_compose(f, [X1])


def test_hull_examples():
    assert tm_hull(tm([(0.5, [1, 0])], (-0.1, 0.1))).contains_interval(Interval(-0.6, 0.6))
    assert tm_hull(TaylorModel.const(SP, 0.0)) == Interval(0.0, 0.0)
    assert tm_hull(tm([(1, [2, 0])], (-0.1, 0.0))) == Interval(-0.1, 1.0)


def test_sampled_containment_nonpolynomial():
    t = tm_add(tm_mul(tm_sin(tm_mul(X1, TaylorModel.const(SP, 0.8))), tm_cos(X2)), tm_tanh(tm_add(X1, X2)))
    assert_encloses(t, lambda X: np.sin(0.8 * X[:, 0]) * np.cos(X[:, 1]) + np.tanh(X[:, 0] + X[:, 1]), samples(), 1e-15)


def test_sqr_matches_mul():
    t = tm([(0.3, [1, 0]), (0.2, [0, 1])], (-0.01, 0.02))
    assert tm_sqr(t) == tm_mul(t, t)


@given(st.integers(0, 2**32 - 1))
def test_random_chains_contain_exact_values(seed):
    checks, failures = _chains.check_chains(seed, n_chains=5, points_per_chain=3)
    assert not failures, failures[0]


def test_chain_oracle_detects_shrunk_remainder():
    # negative control: dropping the remainder of a chain with transcendental
    # steps must be caught by the oracle
    rng = np.random.default_rng(7)
    caught = 0
    for _ in range(200):
        t, f = _chains.random_chain(rng, SP, 8)
        if t.rem.width < 1e-6:
            continue
        bad = TaylorModel(t.poly, Interval(t.rem.hi, t.rem.hi))
        pts = _chains.sample_points(rng, 2, 20)
        if any(_chains.violation(bad, f, x) for x in pts):
            caught += 1
    assert caught > 10


@given(st.floats(-3, 3), st.floats(0.01, 2))
def test_elementary_containment_univariate(c, r):
    sp = PolySpace(1, 3)
    t = tm([(c, [0]), (r, [1])], space=sp)
    X = np.linspace(-1, 1, 401)[:, None]
    y = c + r * X[:, 0]
    for f, g in ((tm_sin, np.sin), (tm_cos, np.cos), (tm_tanh, np.tanh)):
        assert_encloses(f(t), lambda X: g(y), X, slack=4e-16 * (1 + abs(c) + r))
    if c - r > 0.05:
        assert_encloses(tm_recip(t), lambda X: 1 / y, X, slack=1e-15 / (c - r))


def test_exact_point_shortcut():
    t = tm_sin(TaylorModel.const(SP, 0.5))
    h = t.hull()
    assert h.contains(math.sin(0.5)) and h.width < 1e-15
    assert Fraction(h.lo) <= Fraction(math.sin(0.5)) <= Fraction(h.hi)
