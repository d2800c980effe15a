import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tradepos.model import (AdmissibilityError, ExtremePath, MarketBounds, Path,
                            TradingParams, decode_extreme, distinguished_path,
                            first_nonpositive_stage, simulate)
from tradepos.thresholds import alpha_singular

B = MarketBounds(-0.8, 0.9)


@st.composite
def instances(draw, max_n=30):
    vmin = -draw(st.floats(0.01, 0.99))
    vmax = draw(st.floats(0.01, 5.0))
    b = MarketBounds(vmin, vmax)
    alpha = draw(st.floats(0.0, 5.0))
    x0 = draw(st.floats(0.1, 100.0))
    path = draw(st.lists(st.floats(vmin, vmax), max_size=max_n))
    return TradingParams(alpha, x0, b), path


def test_zero_gain_freezes_state():
    traj = simulate(TradingParams(0.0, 1.0, B), [0.1, -0.5, 0.9, -0.8, 0.0])
    assert traj.states == (1.0,) * 6
    assert traj.first_nonpositive is None


def test_single_step_by_hand():
    traj = simulate(TradingParams(0.5, 1.0, B), [0.9, -0.8])
    assert traj.states[2] == pytest.approx(1 + 0.5 * 1.9 * -0.8, abs=1e-15)
    assert traj.states[2] == pytest.approx(0.24, abs=1e-15)


def test_distinguished_two_steps_matches_singular_formula():
    b = MarketBounds(-0.5, 0.2)
    assert alpha_singular(b) == 1.0
    traj = simulate(TradingParams(1.0, 1.0, b), distinguished_path(b, 2))
    # 2^-2 * ((1 - 0.2 - 1) * 2 + 1.2) / 0.5
    assert traj.states[2] == pytest.approx(0.4, abs=1e-15)


@pytest.mark.parametrize("path", [[0.95], [0.1, -0.85], [float("nan")], [float("inf")]])
def test_rejects_inadmissible(path):
    with pytest.raises(AdmissibilityError):
        simulate(TradingParams(0.5, 1.0, B), path)


@pytest.mark.parametrize("vmin,vmax", [(0.1, 0.9), (-1.0, 0.5), (-0.5, 0.0), (-0.5, math.inf)])
def test_bounds_validation(vmin, vmax):
    with pytest.raises(AdmissibilityError):
        MarketBounds(vmin, vmax)


def test_params_validation():
    with pytest.raises(AdmissibilityError):
        TradingParams(-0.1, 1.0, B)
    with pytest.raises(AdmissibilityError):
        TradingParams(0.1, 0.0, B)


def test_empty_and_unit_paths():
    p = TradingParams(0.7, 2.0, B)
    t0 = simulate(p, [])
    assert t0.states == (2.0,) and t0.controls == () and t0.all_positive
    t1 = simulate(p, [0.9])
    assert t1.states == (2.0, 2.0) and t1.controls == (0.0,)


def test_distinguished_path():
    assert tuple(distinguished_path(B, 3)) == (0.9, -0.8, -0.8)
    assert tuple(distinguished_path(B, 1)) == (0.9,)
    assert tuple(distinguished_path(MarketBounds(-0.3, 0.2), 4)) == (0.2, -0.3, -0.3, -0.3)
    assert len(distinguished_path(B, 0)) == 0


def test_decode_extreme():
    assert tuple(decode_extreme(ExtremePath(0b101, 3), B)) == (0.9, -0.8, 0.9)
    assert tuple(decode_extreme(ExtremePath(0, 2), B)) == (-0.8, -0.8)
    assert tuple(decode_extreme(ExtremePath(0b1111, 4), B)) == (0.9,) * 4
    with pytest.raises(ValueError):
        ExtremePath(0b100, 2)


@given(st.integers(0, 12).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2 ** n - 1))))
def test_extreme_roundtrip(nm):
    n, mask = nm
    ep = ExtremePath(mask, n)
    assert ExtremePath.from_path(ep.decode(B), B) == ep


@given(instances())
def test_trajectory_invariants(inst):
    p, path = inst
    tr = simulate(p, path)
    assert len(tr.states) == len(path) + 1
    assert tr.states[0] == p.x0
    if path:
        assert tr.states[1] == p.x0 and tr.controls[0] == 0
    for k in range(1, len(path)):
        assert tr.controls[k] == p.alpha * (1 + path[k - 1]) * tr.states[k - 1]
        assert tr.states[k + 1] == tr.states[k] + tr.controls[k] * path[k]
    assert (tr.first_nonpositive is None) == all(x > 0 for x in tr.states)
    if tr.first_nonpositive is not None:
        assert tr.states[tr.first_nonpositive] <= 0
        assert all(x > 0 for x in tr.states[:tr.first_nonpositive])


@given(instances())
def test_recursion_consistency(inst):
    p, path = inst
    x = simulate(p, path).states
    for k in range(1, len(path)):
        step = p.alpha * (1 + path[k - 1]) * path[k] * x[k - 1]
        assert x[k + 1] - x[k] == pytest.approx(step, rel=1e-12, abs=1e-12 * max(map(abs, x)))


@given(instances(max_n=15), st.floats(0.01, 100))
def test_scale_equivariance(inst, c):
    p, path = inst
    base = simulate(TradingParams(p.alpha, 1.0, p.bounds), path).states
    scaled = simulate(TradingParams(p.alpha, c, p.bounds), path).states
    scale = max(map(abs, base))
    for a, b in zip(base, scaled):
        assert b == pytest.approx(c * a, rel=1e-9, abs=1e-12 * c * scale)


@settings(max_examples=50)
@given(st.lists(st.fractions(Fraction(-4, 5), Fraction(9, 10), max_denominator=20), max_size=8),
       st.fractions(0, 3, max_denominator=20), st.fractions(Fraction(1, 10), 10, max_denominator=20))
def test_scale_equivariance_exact(path, alpha, c):
    b = MarketBounds(Fraction(-4, 5), Fraction(9, 10))
    base = simulate(TradingParams(alpha, Fraction(1), b), path).states
    scaled = simulate(TradingParams(alpha, c, b), path).states
    assert list(scaled) == [c * x for x in base]


@given(instances())
def test_nonnegative_controls_while_positive(inst):
    p, path = inst
    tr = simulate(p, path)
    for k, u in enumerate(tr.controls):
        if all(x > 0 for x in tr.states[:k + 1]):
            assert u >= 0


def test_exact_mode_stays_rational():
    tr = simulate(TradingParams(Fraction(1, 2), Fraction(1), MarketBounds(Fraction(-4, 5), Fraction(9, 10))),
                  [Fraction(9, 10), Fraction(-4, 5)])
    assert tr.states[2] == Fraction(6, 25)
    assert not tr.indeterminate


def test_leverage_diagnostic():
    tr = simulate(TradingParams(0.5, 2.0, B), [0.9, 0.5, -0.8])
    assert tr.leverage[0] == 0
    assert tr.leverage[2] == pytest.approx(tr.controls[2] / tr.states[2])


def test_indeterminate_flag():
    # alpha = alpha_max(2) puts X(2) at zero up to rounding
    b = MarketBounds(-0.5, 1.0)
    tr = simulate(TradingParams(1.0, 1.0, b), [1.0, -0.5])
    assert tr.indeterminate


@given(instances(max_n=40))
def test_rescaled_stage_matches_simulate(inst):
    p, path = inst
    tr = simulate(p, path)
    if tr.indeterminate:
        return
    assert first_nonpositive_stage(p, path) == tr.first_nonpositive


def test_rescaled_stage_survives_underflow():
    # just below alpha_s both eigenvalues are close to 1/2: plain floats underflow to 0
    b = MarketBounds(-0.3, 0.2)
    p = TradingParams(1.19, 1.0, b)
    path = distinguished_path(b, 3000)
    assert simulate(p, path).first_nonpositive is not None
    assert first_nonpositive_stage(p, path) is None
