import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from tailcalc.gls import (
    MomentOracle,
    PsiError,
    PsiFunction,
    default_p_grid,
    gls_norm,
    make_psi_family,
    natural_psi,
    nu_of_psi,
    tauberian_check,
)
from tailcalc.oracle import DistributionModel


def laplace_oracle():
    return MomentOracle.closed_form(lambda p: special.gamma(p + 1) ** (1 / p), label="laplace")


def gaussian_oracle(sigma=1.0):
    return MomentOracle.from_model(DistributionModel.gaussian(sigma))


def test_family_values():
    assert make_psi_family("psi_m_r", m=2, r=0)(4.0) == pytest.approx(2.0)
    assert make_psi_family("psi_one")(3.0) == 3.0
    assert make_psi_family("psi_exp_Cbeta", C=1, beta=1)(2.0) == pytest.approx(np.e**2)


@pytest.mark.parametrize("kw", [dict(family="psi_m_r", m=1.0), dict(family="psi_exp_Cbeta", C=0.0), dict(family="psi_exp_Cbeta", beta=-1.0)])
def test_family_validation(kw):
    fam = kw.pop("family")
    with pytest.raises(PsiError):
        make_psi_family(fam, **kw)


def test_nu_values():
    nu = nu_of_psi(make_psi_family("psi_m_r", m=2, r=0), [2.0, np.e**2])
    assert nu.values[1] == pytest.approx(np.e**2)
    nu1 = nu_of_psi(make_psi_family("psi_one"), [1.0, np.e])
    assert nu1.values[1] == pytest.approx(np.e)


def test_nu_outside_support():
    with pytest.raises(PsiError):
        nu_of_psi(make_psi_family("psi_one"), [0.5, 2.0])


def test_pareto_nu_tracks_log_distance_to_support_end():
    model = DistributionModel.pareto_unit(0.25)
    psi = natural_psi(MomentOracle.from_model(model), 4.0)
    p = psi.table.grid
    nu = p * np.log(psi(p))
    gap = nu + np.log(4.0 - p)
    # bounded additive error: ln 4 exactly for the closed form
    assert np.allclose(gap, np.log(4.0), rtol=1e-9)


def test_gls_norm_examples():
    val, arg = gls_norm(laplace_oracle(), make_psi_family("psi_one"), return_argmax=True)
    assert val == pytest.approx(1.0) and arg == pytest.approx(1.0)
    val, arg = gls_norm(gaussian_oracle(), make_psi_family("psi_m_r", m=2, r=0), return_argmax=True)
    assert val == pytest.approx(np.sqrt(2 / np.pi), rel=1e-12) and arg == pytest.approx(1.0)
    model = DistributionModel.pareto_unit(0.25)
    oracle = MomentOracle.from_model(model)
    psi = natural_psi(oracle, model.moment_limit)
    assert gls_norm(oracle, psi, psi.table.grid) == 1.0


def test_natural_psi_examples():
    model = DistributionModel.pareto_unit(0.25)
    psi = natural_psi(MomentOracle.from_model(model), 4.0)
    p = psi.table.grid
    assert np.allclose(psi(p), (1 - p / 4) ** (-1 / p), rtol=1e-10)
    assert p[-1] <= 4.0 * 0.99 + 1e-12
    lap = natural_psi(laplace_oracle())
    q = lap.table.grid
    r = lap(q) / q
    # psi_xi(p) is of order p: ratio confined to [1/e, 1]
    assert r.min() >= 1 / np.e and r.max() <= 1.0 + 1e-12


def test_natural_psi_rejects_zero_variable():
    with pytest.raises(PsiError):
        natural_psi(MomentOracle.closed_form(lambda p: 0.0))


def test_tauberian_examples():
    model = DistributionModel.log_weibull(2.0)
    oracle = MomentOracle.from_model(model)
    rep = tauberian_check(oracle, model.tail, 2.0, [10.0, 1e3, 1e5], [10.0])
    assert np.allclose(rep.tail_ratios, 1.0)
    with pytest.raises(ValueError):
        tauberian_check(oracle, model.tail, 1.0, [10.0], [10.0])
    with pytest.raises(ValueError):
        tauberian_check(oracle, model.tail, 2.0, [1.0], [10.0])


def test_psi_json_round_trip():
    psi = make_psi_family("psi_m_r", m=3, r=1)
    back = PsiFunction.from_json(psi.to_json())
    assert back(5.0) == psi(5.0)
    grid_psi = natural_psi(gaussian_oracle())
    assert np.array_equal(PsiFunction.from_json(grid_psi.to_json())(grid_psi.table.grid), grid_psi(grid_psi.table.grid))


def test_sample_oracle_caps_max_p():
    s = DistributionModel.pareto_unit(0.25).sample(10**5, 3)
    oracle = MomentOracle.from_samples(s)
    assert 1.0 <= oracle.max_p < 200.0
    assert MomentOracle.from_samples(s, noise_cap=0.01).max_p <= oracle.max_p
    with pytest.raises(ValueError):
        oracle(oracle.max_p * 2)


@given(st.floats(0.1, 10.0))
def test_gls_norm_homogeneity(c):
    psi = make_psi_family("psi_m_r", m=2, r=0)
    base = gls_norm(gaussian_oracle(), psi, default_p_grid())
    assert gls_norm(gaussian_oracle(c), psi, default_p_grid()) == pytest.approx(c * base, rel=1e-9)


@given(st.floats(1.0, 5.0))
def test_gls_norm_monotone_in_psi(k):
    g = default_p_grid()
    psi = make_psi_family("psi_one")
    assert gls_norm(laplace_oracle(), psi.scaled(k), g) <= gls_norm(laplace_oracle(), psi, g) + 1e-15


@given(st.sampled_from(["gaussian", "laplace", "pareto_unit", "stretched_exp"]))
def test_natural_norm_is_one_and_lyapunov(family):
    model = DistributionModel(family, {})
    oracle = MomentOracle.from_model(model)
    psi = natural_psi(oracle, model.moment_limit)
    assert gls_norm(oracle, psi, psi.table.grid) == 1.0
    assert oracle.lyapunov_ok(psi.table.grid)
