import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from tailcalc.gls import make_psi_family
from tailcalc.gridfn import GridFunction
from tailcalc.tail_moment import (
    BoundsWarning,
    ConditionError,
    PowerLogTailParams,
    RegimeError,
    TailEnvelope,
    log_moment_bound,
    moments_to_tail,
    powerlog_moments_to_tail,
    powerlog_tail_to_moments,
    roundtrip_equivalence,
    tail_envelope,
    tail_to_moments,
)


def exp_tail(hi=400.0, n=4000):
    return tail_envelope(lambda x: x, np.geomspace(1e-3, hi, n))


def test_psi_one_gives_linear_zeta():
    y = np.array([3.0, 10.0, 50.0])
    env = moments_to_tail(make_psi_family("psi_one"), 1.0, y)
    assert np.allclose(env.zeta.values, y / np.e, rtol=1e-4)


def test_sqrt_psi_gives_gaussian_zeta():
    y = np.array([3.0, 6.0, 12.0])
    env = moments_to_tail(make_psi_family("psi_m_r", m=2, r=0), 1.0, y)
    assert np.allclose(env.zeta.values, y**2 / (2 * np.e), rtol=1e-4)


def test_norm_rescales_argument():
    y = np.array([10.0, 20.0])
    a = moments_to_tail(make_psi_family("psi_one"), 2.0, y)
    b = moments_to_tail(make_psi_family("psi_one"), 1.0, y / 2)
    assert np.allclose(a.zeta.values, b.zeta.values)


def test_regime_enforced():
    with pytest.raises(RegimeError):
        moments_to_tail(make_psi_family("psi_one"), 1.0, [2.0, 10.0])
    env = moments_to_tail(make_psi_family("psi_one"), 1.0, [2.0, 10.0], enforce_regime=False)
    assert env.zeta.values[0] >= 0


def test_finite_support_warns():
    with pytest.warns(BoundsWarning):
        moments_to_tail(make_psi_family("powerlog", beta=3.0), 1.0, [5.0, 10.0])


def test_linear_log_tail_fails_curvature_condition():
    env = tail_envelope(lambda x: 4 * np.log(np.maximum(x, 1.0)), np.geomspace(1.0, 1e6, 400))
    with pytest.raises(ConditionError, match=r"\(2\.6\)"):
        tail_to_moments(env, [1.0, 2.0])


def test_exponential_tail_moment_envelope_dominates_truth():
    p = np.linspace(1, 30, 30)
    mom = tail_to_moments(exp_tail(), p)
    truth = special.gamma(p + 1) ** (1 / p)
    assert np.all(mom.moment_bound() >= truth * (1 - 1e-9))
    assert np.all(mom.psi(p) >= mom.moment_bound() * (1 - 1e-12))
    # Z*(p) = p ln p - p, so the shape is p/e
    assert np.allclose(mom.Zstar, p * np.log(p) - p, atol=1e-3 * p)
    assert 1.0 <= mom.C3 < 10.0


def test_log_moment_bound_matches_envelope():
    p = np.array([2.0, 5.0])
    t = exp_tail()
    assert np.allclose(log_moment_bound(t, p), tail_to_moments(t, p).log_J)


def test_short_tail_grid_rejected():
    with pytest.raises(RegimeError):
        tail_to_moments(exp_tail(hi=5.0, n=200), [1.0, 20.0])


def test_envelope_validation():
    with pytest.raises(ValueError):
        TailEnvelope(GridFunction(np.array([1.0, 2.0]), np.array([0.0, -1.0])))
    with pytest.raises(ValueError):
        TailEnvelope(GridFunction(np.array([1.0, 2.0]), np.zeros(2)), sides="three")


def test_roundtrip_gaussian_psi():
    rep = roundtrip_equivalence(
        make_psi_family("psi_m_r", m=2, r=0), np.linspace(1, 20, 20), np.geomspace(0.5, 60, 3000)
    )
    assert rep.spread <= 10.0
    assert rep.ratio_min > 0


def test_powerlog_moments_closed_form():
    p = np.linspace(1.0, 2.9, 20)
    res = powerlog_tail_to_moments(PowerLogTailParams(beta=3.0), p)
    assert np.allclose(res.moment_bound, (3 / (3 - p)) ** (1 / p), rtol=1e-10)
    assert res.exponent == pytest.approx(1 / 3)
    assert np.all(res.psi(p) >= res.moment_bound * (1 - 1e-12))


def test_powerlog_validation():
    with pytest.raises(ValueError):
        PowerLogTailParams(beta=1.0)
    with pytest.raises(ValueError):
        powerlog_tail_to_moments(PowerLogTailParams(beta=3.0), [1.0, 3.0])


def test_powerlog_log_exponent_drift():
    psi = powerlog_tail_to_moments(PowerLogTailParams(beta=3.0), np.linspace(1, 2.99, 50)).psi
    rep = powerlog_moments_to_tail(psi, np.geomspace(10, 1e8, 60))
    assert rep.beta == 3.0 and rep.drift == 1.0 and rep.log_exponent == 1.0
    assert rep.fitted_log_exponent == pytest.approx(1.0, abs=0.2)


@given(st.floats(0.2, 5.0))
def test_moments_to_tail_scales_with_psi(c):
    # ||xi|| <= n in G(c psi) is the same statement as ||xi|| <= c n in G(psi)
    y = np.array([20.0, 40.0, 80.0])
    psi = make_psi_family("psi_one")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a = moments_to_tail(psi.scaled(c), 1.0, y, enforce_regime=False)
        b = moments_to_tail(psi, c, y, enforce_regime=False)
    assert np.allclose(a.zeta.values, b.zeta.values, rtol=1e-9, atol=1e-12)


@given(st.floats(1.0, 25.0))
def test_tail_bound_is_decreasing_in_y(y0):
    y = y0 * np.array([3.0, 4.0, 8.0])
    env = moments_to_tail(make_psi_family("psi_one"), 1.0, y)
    assert np.all(np.diff(env.zeta.values) >= 0)
