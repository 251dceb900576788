import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from tailcalc.oracle import (
    DistributionModel,
    IndependentVector,
    KramerViolation,
    OracleError,
    empirical_mgf,
    empirical_moment,
    empirical_tail,
    lyapunov_ok,
)

PARETO = DistributionModel.pareto_unit(0.25)
LAPLACE = DistributionModel.laplace()


def test_quantiles():
    assert PARETO.quantile(1 / 16) == pytest.approx(2.0)
    assert LAPLACE.quantile(0.5) == pytest.approx(0.0)


def test_sampling_is_deterministic_per_seed():
    a = LAPLACE.sample(1000, 7)
    assert np.array_equal(a, LAPLACE.sample(1000, 7))
    assert not np.array_equal(a, LAPLACE.sample(1000, 8))


def test_tails():
    assert LAPLACE.tail(0.0) == 1.0
    assert PARETO.tail(2.0) == pytest.approx(1 / 16)
    assert LAPLACE.tail(1.0) == pytest.approx(2 * LAPLACE.tail_one_sided(1.0))
    assert LAPLACE.tail(1.0) == pytest.approx(np.exp(-1.0))


def test_moments_and_mgf():
    assert np.allclose(LAPLACE.moments([1, 2]), [1.0, np.sqrt(2.0)])
    assert DistributionModel.gaussian().moment(2) == pytest.approx(1.0)
    assert LAPLACE.mgf(0.5) == pytest.approx(4 / 3)
    assert PARETO.moment(4.0) == np.inf
    with pytest.raises(KramerViolation):
        LAPLACE.mgf(1.0)
    with pytest.raises(KramerViolation):
        PARETO.mgf(0.1)
    with pytest.raises(KramerViolation):
        DistributionModel.log_weibull(2.0).mgf(0.1)


def test_stretched_exp_mgf_against_density_integral():
    # density: flat on [0, e), then 2y exp(-y^2) for m=2, r=0
    m = DistributionModel.stretched_exp(2.0, 0.0)
    te = np.exp(-np.e**2)
    lam = 1.0
    near = (1 - te) / np.e * np.sinh(np.e) / lam
    far = integrate.quad(lambda y: y * (np.exp(lam * y - y**2) + np.exp(-lam * y - y**2)), np.e, np.inf)[0]
    assert m.mgf(lam) == pytest.approx(near + far, rel=1e-8)


def test_stretched_exp_large_order_moment_is_finite():
    m = DistributionModel.stretched_exp(2.0, 0.0)
    assert np.isfinite(m.log_abs_moment(400.0))


def test_independent_vector():
    v = IndependentVector((LAPLACE, LAPLACE))
    assert v.u_tail([1.0, 1.0]) == pytest.approx((np.exp(-1) / 2) ** 2)
    assert v.min_coordinate_tail(1.0) == pytest.approx(np.exp(-2.0))
    assert v.mgf([0.5, 0.5]) == pytest.approx(16 / 9)
    assert v.sample(50, 1).shape == (50, 2)


def test_json_round_trip():
    assert DistributionModel.from_json(PARETO.to_json()) == PARETO


def test_empirical_estimators(rng):
    s = LAPLACE.sample(200_000, 11)
    est, hw = empirical_tail(s, 1.0)
    assert abs(est - np.exp(-1)) <= hw
    m, mhw = empirical_moment(s, 2.0)
    assert abs(m - np.sqrt(2)) <= mhw + 1e-3
    g, ghw = empirical_mgf(s, 0.3)
    assert abs(g - 1 / (1 - 0.09)) <= ghw
    with pytest.raises(KramerViolation):
        empirical_mgf(s, 0.3, model=DistributionModel.log_weibull(2.0))
    with pytest.raises(OracleError):
        empirical_moment(PARETO.sample(1000, 2), 50.0)


@given(st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_tail_monotone(a, b):
    lo, hi = sorted((a, b))
    for m in (LAPLACE, PARETO, DistributionModel.gaussian(), DistributionModel.stretched_exp()):
        assert m.tail(hi) <= m.tail(lo) + 1e-15


@given(st.sampled_from(["gaussian", "laplace", "stretched_exp", "log_weibull"]))
def test_lyapunov_for_fixtures(family):
    m = DistributionModel(family, {})
    p = np.geomspace(1, 30, 25)
    assert lyapunov_ok(m.moments(p))
