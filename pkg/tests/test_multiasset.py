import numpy as np
import pytest
from hypothesis import given, strategies as st

from tradepos.closed_form import Form, spectral_data
from tradepos.model import AdmissibilityError, MarketBounds, TradingParams, distinguished_path, simulate
from tradepos.multiasset import (MultiAssetParams, distinguished_paths, oscillation_condition,
                                 oscillation_evidence, simulate_multi, verify_multi)
from tradepos.search import HorizonCapError, Mode


def flat_multi(alphas, paths, x0):
    n = len(paths[0])
    x = [x0, x0]
    for k in range(1, n):
        x.append(x[k] + sum(a * (1 + p[k - 1]) * p[k] * x[k - 1] for a, p in zip(alphas, paths)))
    return x[:n + 1] if n else [x0]


@given(st.floats(-0.99, -0.01), st.floats(0.01, 3), st.floats(0, 4), st.floats(0.1, 10),
       st.lists(st.floats(0, 1), max_size=25))
def test_single_asset_reduces_to_scalar(vmin, vmax, a, x0, us):
    b = MarketBounds(vmin, vmax)
    path = [vmin + u * (vmax - vmin) for u in us]
    multi = simulate_multi(MultiAssetParams((a,), (b,), x0), [path])
    single = simulate(TradingParams(a, x0, b), path)
    assert multi.states == single.states
    assert multi.controls == single.controls


def test_zero_gains_constant():
    mp = MultiAssetParams((0.0, 0.0), (MarketBounds(-0.5, 0.3), MarketBounds(-0.2, 0.4)), 2.0)
    tr = simulate_multi(mp, [[0.3, -0.5, 0.1], [0.4, 0.4, -0.2]])
    assert set(tr.states) == {2.0}


def test_two_assets_against_flat_loop():
    bs = (MarketBounds(-0.8, 0.9), MarketBounds(-0.3, 0.2))
    mp = MultiAssetParams((0.3, 0.2), bs, 1.0)
    paths = distinguished_paths(mp, 10)
    got = simulate_multi(mp, paths).states
    ref = flat_multi((0.3, 0.2), [list(p) for p in paths], 1.0)
    assert len(got) == 11
    assert got == pytest.approx(ref, rel=1e-14)


def test_validation():
    b = MarketBounds(-0.5, 0.5)
    mp = MultiAssetParams((0.1, 0.2), (b, b), 1.0)
    with pytest.raises(AdmissibilityError):
        simulate_multi(mp, [[0.1, 0.2], [0.1]])
    with pytest.raises(AdmissibilityError):
        simulate_multi(mp, [[0.1, 0.7], [0.1, 0.1]])
    with pytest.raises(AdmissibilityError):
        simulate_multi(mp, [[0.1]])
    with pytest.raises(AdmissibilityError):
        MultiAssetParams((-0.1,), (b,), 1.0)
    with pytest.raises(AdmissibilityError):
        MultiAssetParams((), (), 1.0)


def test_oscillation_condition_examples():
    b = MarketBounds(-0.5, 0.5)
    c = oscillation_condition(MultiAssetParams((1.0, 1.0), (b, b), 1.0))
    assert c.lhs == pytest.approx(2.0) and c.holds
    c = oscillation_condition(MultiAssetParams((0.0, 0.0), (b, b), 1.0))
    assert c.lhs == 0 and not c.holds


@given(st.floats(-0.99, -0.01), st.floats(0.01, 3), st.floats(0, 10))
def test_scalar_condition_matches_oscillatory_form(vmin, vmax, a):
    b = MarketBounds(vmin, vmax)
    cond = oscillation_condition(MultiAssetParams((a,), (b,), 1.0))
    sd = spectral_data(TradingParams(a, 1.0, b))
    if abs(cond.lhs - 1) > 1e-9:
        assert cond.holds == (sd.form is Form.OSCILLATORY)


def test_oscillation_evidence_reported():
    rng = np.random.default_rng(4)
    found = 0
    for _ in range(50):
        m = int(rng.integers(1, 4))
        bs = tuple(MarketBounds(-rng.uniform(0.05, 0.95), rng.uniform(0.05, 2)) for _ in range(m))
        alphas = tuple(rng.uniform(0, 3) for _ in range(m))
        mp = MultiAssetParams(alphas, bs, 1.0)
        if oscillation_condition(mp).holds:
            k = oscillation_evidence(mp)
            found += k is not None
            if k is not None and k <= 60:
                tr = simulate_multi(mp, distinguished_paths(mp, k))
                assert tr.first_nonpositive == k
    assert found > 0


def test_verify_multi_modes():
    bs = (MarketBounds(-0.8, 0.9), MarketBounds(-0.3, 0.2))
    mp = MultiAssetParams((0.2, 0.2), bs, 1.0)
    ex = verify_multi(mp, 6, Mode.EXHAUSTIVE)
    assert ex.paths_examined == 1 << 12
    sa = verify_multi(mp, 6, Mode.SAMPLED, count=3000, seed=2)
    assert sa == verify_multi(mp, 6, Mode.SAMPLED, count=3000, seed=2)
    assert sa.min_value >= ex.min_value
    with pytest.raises(HorizonCapError):
        verify_multi(mp, 13, Mode.EXHAUSTIVE)
    bad = verify_multi(MultiAssetParams((0.9, 0.9), bs, 1.0), 6, Mode.EXHAUSTIVE)
    assert not bad.all_positive
    masks, k, val = bad.witness
    paths = [[b.v_max if (mk >> j) & 1 else b.v_min for j in range(6)] for mk, b in zip(masks, bs)]
    assert simulate_multi(MultiAssetParams((0.9, 0.9), bs, 1.0), paths).states[k] == pytest.approx(val)
