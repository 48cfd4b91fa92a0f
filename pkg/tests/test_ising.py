import math
import warnings

import numpy as np
import pytest

from rtdiffraction import ValidationError
from rtdiffraction.ising import (
    CriticalPointWarning,
    IsingModel,
    IsingParams,
    critical_coupling,
    disordered_form,
    fit_asymptotic_correlation,
    ising_pp,
    magnetization,
    ordered_form,
    sample_ising_mcmc,
    sample_ising_spins,
    spin_correlation,
)
from rtdiffraction.spectral import KGrid, periodogram

from oracles import ising_magnetization


def test_regimes_and_modulus():
    assert IsingParams.isotropic(0.5).regime == "ordered"
    assert IsingParams.isotropic(0.2).regime == "disordered"
    assert IsingParams.isotropic(critical_coupling()).regime == "critical"
    assert IsingParams(0.0, 0.3).k == math.inf
    with pytest.raises(ValidationError):
        IsingParams(-1.0, 0.2)


@pytest.mark.parametrize("K", [0.45, 0.5, 0.8])
def test_magnetization_matches_sinh_form(K):
    m, rho = magnetization(IsingParams.isotropic(K))
    assert m == pytest.approx(ising_magnetization(K), rel=1e-13)
    assert rho == pytest.approx((1 + m) / 2)


def test_bragg_values():
    pp = ising_pp(IsingParams.isotropic(0.5))
    rho = (1 + 0.911319377877496) / 2
    assert pp.intensity_at([[0, 0], [1, 0], [3, -2]]) == pytest.approx([rho**2] * 3)
    assert ising_pp(IsingParams.isotropic(0.2)).intensities[0] == pytest.approx(0.25)
    assert ising_pp(IsingParams.isotropic(0.2), weights=(1, -1)).intensities[0] == 0.0
    assert ising_pp(IsingParams.isotropic(0.5), weights=(1, -1)).intensities[0] == pytest.approx(0.911319377877496**2)


def test_critical_point_warns():
    with pytest.warns(CriticalPointWarning):
        pp = ising_pp(IsingParams.isotropic(critical_coupling()))
    assert pp.intensities[0] == pytest.approx(0.25)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ising_pp(IsingParams.isotropic(0.5))


def test_correlation_fits_recover_parameters():
    R = np.arange(1, 30, dtype=float)
    f = fit_asymptotic_correlation(R, ordered_form(R, 0.8, 1.5, 0.3), "ordered")
    assert f.params[0] == pytest.approx(0.8, rel=1e-6) and f.decay_length == pytest.approx(1.5, rel=1e-4)
    f = fit_asymptotic_correlation(R, disordered_form(R, 1.2, 3.0), "disordered")
    assert f.params == pytest.approx((1.2, 3.0), rel=1e-6) and f.r_squared > 0.999999
    with pytest.raises(ValidationError):
        fit_asymptotic_correlation(R, R, "other")


def test_sampler_seeded_and_ordered():
    p = IsingParams.isotropic(0.6)
    a = sample_ising_spins(p, 32, 300, seed=8)
    assert np.array_equal(a, sample_ising_spins(p, 32, 300, seed=8))
    m_ref = magnetization(p)[0]
    assert abs(a.mean() - m_ref) < 0.05
    corr = spin_correlation(a, [10])
    assert corr[0] == pytest.approx(m_ref**2, abs=0.08)


def test_disordered_periodogram_bragg_quarter():
    p = IsingParams.isotropic(0.2)
    g = KGrid.span([0, 0], [1, 1], [1 / 64, 1 / 64])
    vals = [periodogram(sample_ising_mcmc(p, 64, 200, seed=s, all_up=False), g).values[0, 0] for s in range(16)]
    # lattice gas: Bragg weight 1/4 times the volume dominates at k = 0
    assert np.mean(vals) / 4096 == pytest.approx(0.25, rel=0.05)


def test_estimator_wrapper():
    m = IsingModel(K1=0.5, K2=0.5).fit()
    assert m.magnetization_ == pytest.approx(0.911319377877496)
    assert m.predict([[1, 1], [0.5, 0]]).tolist()[1] == 0.0
