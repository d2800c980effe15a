import random
from fractions import Fraction as F

import pytest

from tradepos.exact import RationalParams, simulate_exact, verify_exhaustive_exact
from tradepos.model import AdmissibilityError, distinguished_path, simulate
from tradepos.search import HorizonCapError, verify_exhaustive


def singular_formula(x0, vmin, vmax, k):
    return F(1, 2 ** k) * x0 * ((1 - vmax + 2 * vmin) * k + 1 + vmax) / (1 + vmin)


def test_hand_rational_step():
    p = RationalParams(F(1, 2), 1, F(-4, 5), F(9, 10))
    tr = simulate_exact(p, [F(9, 10), F(-4, 5)])
    assert tr.states[2] == F(6, 25)
    fl = simulate(p.to_float(), [0.9, -0.8])
    assert fl.states[2] == pytest.approx(float(F(6, 25)), abs=1e-15)


def test_zero_gain_exact():
    p = RationalParams(0, F(3, 7), F(-1, 3), F(1, 2))
    assert set(simulate_exact(p, [F(1, 2), F(-1, 3)] * 5).states) == {F(3, 7)}
    assert verify_exhaustive_exact(p, 16).all_positive


def test_rejects_inadmissible():
    p = RationalParams(F(1, 2), 1, F(-4, 5), F(9, 10))
    with pytest.raises(AdmissibilityError):
        simulate_exact(p, [F(1)])
    with pytest.raises(AdmissibilityError):
        RationalParams(F(1, 2), 1, F(1, 5), F(9, 10))


@pytest.mark.parametrize("vmax", [F(9, 10), F(1, 10), F(3, 5), F(2)])
def test_singular_identity_exact(vmax):
    vmin = F(-4, 5)
    a_s = 1 / (4 * -vmin * (1 + vmin))
    assert a_s == F(25, 16)
    p = RationalParams(a_s, F(3), vmin, vmax)
    x = simulate_exact(p, distinguished_path(p.bounds, 30)).states
    for k in range(2, 31):
        assert x[k] == singular_formula(F(3), vmin, vmax, k)


def test_generic_closed_form_with_rational_root():
    # theta = 1 - 4 a (1+vmin)|vmin| is a perfect square: vmin=-1/2, a=3/4 gives theta=1/4
    vmin, vmax, a = F(-1, 2), F(1, 3), F(3, 4)
    theta = 4 * a * vmin * (1 + vmin) + 1
    assert theta == F(1, 4)
    root = F(1, 2)
    q = 2 * a * (vmax + 1) * vmin + 1
    lp, lm = (1 + root) / 2, (1 - root) / 2
    p = RationalParams(a, 1, vmin, vmax)
    x = simulate_exact(p, distinguished_path(p.bounds, 25)).states
    for k in range(2, 26):
        assert x[k] == (lp ** (k - 1) * (root + q) + lm ** (k - 1) * (root - q)) / (2 * root)


def test_exact_first_experiment():
    res = verify_exhaustive_exact(RationalParams(F(27, 50), 1, F(-4, 5), F(9, 10)), 10)
    assert res.all_positive and res.paths_examined == 1024
    assert verify_exhaustive(RationalParams(F(27, 50), 1, F(-4, 5), F(9, 10)).to_float(), 10).all_positive


def test_exact_cap():
    with pytest.raises(HorizonCapError):
        verify_exhaustive_exact(RationalParams(F(1, 2), 1, F(-4, 5), F(9, 10)), 17)


def test_cross_mode_agreement():
    rng = random.Random(3)
    for _ in range(30):
        vmin = F(-rng.randint(1, 19), 20)
        vmax = F(rng.randint(1, 40), 20)
        rp = RationalParams(F(rng.randint(1, 60), 40), 1, vmin, vmax)
        n = rng.randint(2, 11)
        ex = verify_exhaustive_exact(rp, n)
        fl = verify_exhaustive(rp.to_float(), n)
        if fl.min_abs_state < 1e-9:
            continue
        assert ex.all_positive == fl.all_positive
        if ex.witness:
            assert ex.witness.path == fl.witness.path and ex.witness.stage == fl.witness.stage


def test_adjudication_defers_to_exact():
    # alpha = alpha_max(2) exactly: X(2) = 0 with dyadic data, so float and exact agree on <= 0
    rp = RationalParams(F(1), 1, F(-1, 2), F(1))
    res = verify_exhaustive(rp.to_float(), 4, adjudicate=True)
    assert isinstance(res.min_state.value, F)
    assert not res.all_positive and res.witness.stage == 2
