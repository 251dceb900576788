import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tailcalc.mgf_moment import (
    DeltaConditionError,
    DeltaFunction,
    beta_of_phi,
    beta_star,
    check_delta_condition,
    delta1_star,
    log_series_bound,
    mgf_to_moments,
    moments_to_mgf,
    norm_equivalence_44,
    sigma_delta,
)
from tailcalc.gls import MomentOracle, gls_norm, make_psi_family
from tailcalc.oracle import DistributionModel
from tailcalc.tail_mgf import DivergenceError, YoungFunction

GAUSS_PHI = YoungFunction.from_callable(lambda l: l * l / 2, 60.0, 6001)
HALF_PLOGP = DeltaFunction.from_callable(lambda p: (p / 2) * np.log(p))


def test_beta_values():
    b = beta_of_phi(GAUSS_PHI, [0.0, 1.0])
    assert np.allclose(b.values, [0.5, np.e**2 / 2])
    # beta*(p) = (p ln p - p) / 2
    p = np.array([1.0, 2.0, 4.0])
    assert np.allclose(beta_star(GAUSS_PHI, p), (p * np.log(p) - p) / 2, atol=1e-4)


def test_mgf_to_moments_gaussian():
    p = np.array([1.0, 2.0, 4.0, 9.0])
    psi = mgf_to_moments(GAUSS_PHI, 1.0, p)
    assert np.allclose(psi(p), np.sqrt(p) / np.sqrt(np.e), rtol=1e-4)
    assert psi.params["scale"] == pytest.approx(1 / np.e)
    # literal comparison value recorded for the equivalence check
    val = gls_norm(MomentOracle.from_model(DistributionModel.gaussian()), psi, p)
    assert val == pytest.approx(np.sqrt(2 / np.pi) * np.sqrt(np.e), rel=1e-4)
    unit = gls_norm(MomentOracle.from_model(DistributionModel.gaussian()), psi.scaled(np.e), p)
    assert unit == pytest.approx(np.sqrt(2 / np.pi) / np.sqrt(np.e), rel=1e-4)
    assert unit == pytest.approx(0.4839, abs=1e-4)


def test_mgf_to_moments_power_exponent():
    # phi = |lam|^3 / 3 gives psi of order p^(2/3), i.e. exponent 1 - 1/3
    phi = YoungFunction.from_callable(lambda l: np.abs(l) ** 3 / 3)
    p = np.geomspace(10, 1000, 30)
    psi = mgf_to_moments(phi, 1.0, p)
    slope = np.polyfit(np.log(p), np.log(psi(p)), 1)[0]
    assert slope == pytest.approx(2 / 3, abs=1e-3)


def test_delta_function_psi_and_conjugate():
    assert HALF_PLOGP.psi(np.array([4.0]))[0] == pytest.approx(2.0, rel=1e-5)
    # Delta*(mu) = exp(2 mu - 1) / 2
    assert float(HALF_PLOGP.conjugate(2.0)) == pytest.approx(np.exp(3) / 2, rel=1e-4)
    lam = np.array([3.0, 10.0])
    assert np.allclose(HALF_PLOGP.conjugate(np.log(lam)), lam**2 / (2 * np.e), rtol=1e-4)


def test_sigma_delta_values():
    k = np.arange(2, 2001, 2, dtype=float)
    ref = np.sum(np.exp((k / 4) * np.log(k / 2) - (k / 2) * np.log(k)))
    assert sigma_delta(HALF_PLOGP, 0.5) == pytest.approx(ref, rel=1e-5)
    assert ref == pytest.approx(0.6536, abs=1e-4)
    plogp = DeltaFunction.from_callable(lambda p: p * np.log(p))
    assert sigma_delta(plogp, 0.5) == pytest.approx(0.2662, abs=1e-4)
    zero = DeltaFunction.from_callable(lambda p: np.zeros_like(p))
    with pytest.raises(DivergenceError):
        sigma_delta(zero, 0.5)


def test_delta1_star_bounds():
    d1 = float(delta1_star(HALF_PLOGP, 2.0)[0])
    assert d1 >= float(HALF_PLOGP.conjugate(2.0))
    assert d1 <= np.log(sigma_delta(HALF_PLOGP, 0.5)) + float(HALF_PLOGP.conjugate(4.0))


def test_delta_condition():
    chk = check_delta_condition(HALF_PLOGP, np.geomspace(3, 50, 20))
    holds, C4 = chk
    assert holds and 1.0 <= C4 < 2.0
    zero = DeltaFunction.from_callable(lambda p: np.zeros_like(p))
    with pytest.raises(DeltaConditionError, match="Δ"):
        moments_to_mgf(zero, 1.0, [3.0, 5.0])


def test_moments_to_mgf_dominates_gaussian():
    lam = np.array([0.5, 1.0, 3.0, 6.0, 12.0])
    norm = gls_norm(MomentOracle.from_model(DistributionModel.gaussian()), make_psi_family("psi_m_r", m=2, r=0))
    env = moments_to_mgf(HALF_PLOGP, norm, lam)
    assert np.all(env.log_bound(lam) >= lam**2 / 2 - 1e-9)
    assert env.C > 0
    with pytest.raises(ValueError):
        moments_to_mgf(HALF_PLOGP, 1.0, [0.5, 1.0])


def test_log_series_bound_at_zero_order():
    assert np.all(np.isfinite(log_series_bound(HALF_PLOGP, 1.0, np.array([0.1, 1.0]))))


def test_norm_equivalence_reports_laplace_divergence():
    rep = norm_equivalence_44(GAUSS_PHI, [DistributionModel.laplace()], np.geomspace(0.1, 20, 40))
    row = rep.rows[0]
    assert row.bphi == np.inf and row.gls == np.inf


@given(st.floats(0.3, 4.0))
def test_mgf_to_moments_homogeneous_in_norm(c):
    p = np.array([1.0, 3.0, 7.0])
    a = mgf_to_moments(GAUSS_PHI, c, p)
    b = mgf_to_moments(GAUSS_PHI, 1.0, p)
    assert np.allclose(a(p), c * b(p), rtol=1e-12)


@given(st.floats(0.25, 0.95))
def test_sigma_increasing_in_eps(eps):
    # Delta increases past 1/e, so each term exp(Delta(eps k) - Delta(k)) grows with eps
    lo = sigma_delta(HALF_PLOGP, eps * 0.9)
    hi = sigma_delta(HALF_PLOGP, eps)
    assert lo <= hi * (1 + 1e-12)
