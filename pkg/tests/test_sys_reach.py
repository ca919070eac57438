from fractions import Fraction

import pytest

from conftest import reach_cached
from gdreach.config import load_scenario
from gdreach.sys_reach import (
    COMPLETED,
    DIVERGED,
    ReachDomainError,
    ablation_variants,
    initial_tm,
    reach_system,
)
from gdreach.taylor import tm_hull
from gdreach.wrapping import RemainderThresholds, VariableRegistry

LIN = load_scenario("linear1d")


def coeffs(t):
    return {pw: c for c, pw in t.poly.monomials()}


def covers(t, lo, hi):
    h = t.hull()
    return Fraction(h.lo) <= Fraction(lo) and Fraction(hi) <= Fraction(h.hi)


def test_initial_tm_examples():
    reg = VariableRegistry(2, 1, 1)
    v = initial_tm([(-1.00001, -0.99999), (0.0, 0.0)], reg)
    c = coeffs(v[0])
    assert c[(0,) * reg.nvars] == pytest.approx(-1.0, abs=1e-15)
    assert c[(1,) + (0,) * (reg.nvars - 1)] == pytest.approx(1e-5, rel=1e-9)
    assert covers(v[0], -1.00001, -0.99999) and v[0].rem.is_zero()
    assert v[1].poly.is_zero() and v[1].rem.is_zero()
    v = initial_tm([(-0.0101, -0.01), (-0.001, -0.001)], reg)
    c = coeffs(v[0])
    assert c[(0,) * reg.nvars] == pytest.approx(-0.01005, rel=1e-12)
    assert c[(1,) + (0,) * (reg.nvars - 1)] == pytest.approx(5e-5, rel=1e-9)
    assert covers(v[0], -0.0101, -0.01)
    assert v[1].hull().lo == v[1].hull().hi == -0.001
    with pytest.raises(ValueError):
        initial_tm([(1.0, 0.0), (0.0, 0.0)], reg)


def test_zero_steps():
    r = reach_system(LIN, K=0)
    assert r.K == 0 and len(r.tms) == 1 and r.events == [] and r.status == COMPLETED


def test_linear_hull_halves():
    r = reach_system(LIN, K=20)
    h0 = r.hulls[0][0]
    for k, (h,) in enumerate(r.hulls):
        assert abs(h.lo - 0.5**k * h0.lo) <= 1e-9 and abs(h.hi - 0.5**k * h0.hi) <= 1e-9


def test_linear_ablations_identical():
    base = reach_system(LIN, K=8)
    for flags in ({"no_sw": True}, {"no_symrem": True}, {"no_sw": True, "no_symrem": True}):
        other = ablation_variants(LIN, K=8, **flags)
        assert other.hulls == base.hulls
        assert all(not e["shrink_wrap"] for e in other.events)


@pytest.mark.parametrize("name", ["quadcopter", "cartpole"])
def test_result_invariants(name):
    sc = load_scenario(name)
    r = reach_cached(name, 10)
    assert r.status == COMPLETED and r.K == 10 and len(r.hulls) == 11
    assert r.fingerprint == sc.fingerprint()
    for tms, hulls in zip(r.tms, r.hulls):
        assert [tm_hull(t) for t in tms] == hulls
    for e in r.events:
        exceeded = max(e["remainder_widths"]) > e["threshold"]
        assert e["shrink_wrap"] == exceeded
    # wrapped steps leave no remainder behind
    for e, tms in zip(r.events, r.tms[1:]):
        if e["shrink_wrap"]:
            assert all(t.rem.is_zero() for t in tms)
            assert all(t.poly.variables() <= set(range(sc.d)) for t in tms)


def test_no_shrink_wrap_never_wraps():
    r = reach_cached("quadcopter", 10, shrink_wrap=False)
    assert all(not e["shrink_wrap"] for e in r.events)


def test_cartpole_without_shrink_wrap_diverges():
    r = reach_cached("cartpole", 10, shrink_wrap=False)
    assert r.status == DIVERGED and r.K < 10
    assert r.events[-1]["max_hull_width"] > 1e3 * 1e-4


def test_trace_records_each_iterate():
    sc = load_scenario("quadcopter")
    r = reach_system(sc, K=2, trace=True)
    assert len(r.traces) == 2
    for tr in r.traces:
        assert [rec["iterate"] for rec in tr] == list(range(1, sc.gd.T + 1))
        assert all(len(rec["hulls"]) == sc.c * sc.cost.H for rec in tr)
    assert all(e["digital_wraps"] is not None for e in r.events)


def test_domain_error_is_diagnosed():
    sc = load_scenario("cartpole")
    wide = sc.with_(initial=((-0.5, 0.5), (-1, 1), (-1.0, 1.0), (-1, 1)))
    with pytest.raises(ReachDomainError) as ei:
        reach_system(wide, K=3)
    e = ei.value
    assert e.step == 1 and e.phase in ("controller", "plant")
    d = e.to_dict()
    assert d["error"] == "DomainError" and d["step"] == 1 and "contains 0" in d["message"]


def test_default_thresholds_hit_the_cartpole_singularity():
    # with the coarse default thresholds the cartpole remainders grow until a
    # reciprocal straddles zero; this is reported with its step, never hidden
    sc = load_scenario("cartpole").with_(thresholds=RemainderThresholds())
    with pytest.raises(ReachDomainError) as ei:
        reach_system(sc, K=10)
    assert 1 < ei.value.step <= 10
