from fractions import Fraction

import numpy as np
import pytest

from rtdiffraction import ValidationError
from rtdiffraction.tiling1d import (
    RandomTilingModel,
    RandomTilingSpec1D,
    mean_bridge_identity,
    rt_ac_density,
    rt_autocorr_coeff,
    rt_autocorrelation_at,
    rt_density,
    rt_partial_sum,
    rt_partial_sum_bound,
    rt_pp_part,
    sample_rt,
)

from oracles import bridge_by_words, rt_coefficient_by_words

TAU = (1 + 5**0.5) / 2

# frozen from tests/oracles.py::rt_g_by_series (direct series in r(k))
G21_AT_03 = 0.17711974145160841
GSQRT2_AT_021 = 0.03082916781554035


def test_rational_tags():
    s = RandomTilingSpec1D([2, 1], [0.5, 0.5])
    assert s.commensurate and s.xi == 1.0 and s.a == (2, 1)
    s = RandomTilingSpec1D(["3/2", Fraction(1, 2)], [0.5, 0.5])
    assert s.xi == 0.5 and s.a == (3, 1)
    assert not RandomTilingSpec1D([TAU, 1.0], [0.5, 0.5]).commensurate
    assert RandomTilingSpec1D([1.5, 1.5], [0.5, 0.5]).is_lattice
    with pytest.raises(ValidationError):
        RandomTilingSpec1D([1, -1], [0.5, 0.5])
    with pytest.raises(ValidationError):
        RandomTilingSpec1D([1, 2], [0.5, 0.6])
    with pytest.raises(ValidationError):
        RandomTilingSpec1D([1.0, 2.0], [0.5, 0.5], xi=1.0, a=(2, 4))


def test_values_for_2_1():
    s = RandomTilingSpec1D([2, 1], [0.5, 0.5])
    assert rt_density(s) == pytest.approx(2 / 3)
    pp = rt_pp_part(s)
    assert pp.intensity_at([[0.0], [3.0]]) == pytest.approx([4 / 9, 4 / 9])
    g = rt_ac_density(s)
    assert g.singular_value == pytest.approx(2 / 27)
    assert g(np.array([0.3]))[0] == pytest.approx(G21_AT_03, rel=1e-12)
    # continuation limit at the singular points
    assert g(np.array([1e-7, 1 - 1e-7])) == pytest.approx([2 / 27, 2 / 27], rel=1e-6)


def test_incommensurate_density_matches_series():
    s = RandomTilingSpec1D([2**0.5, 1.0], [0.3, 0.7])
    assert rt_ac_density(s)(np.array([0.21]))[0] == pytest.approx(GSQRT2_AT_021, rel=1e-10)
    assert rt_pp_part(s).period is None


def test_tau_singular_value():
    s = RandomTilingSpec1D([TAU, 1.0], [0.5, 0.5])
    g = rt_ac_density(s)
    assert g(np.array([0.0]))[0] == pytest.approx(0.0425724725, abs=1e-10)
    assert g(np.array([1e-6]))[0] == pytest.approx(0.0425724725, abs=1e-6)


def test_coefficients_match_word_enumeration():
    s = RandomTilingSpec1D([2, 1], [0.4, 0.6])
    for z in range(7):
        ref = rt_coefficient_by_words([2, 1], [0.4, 0.6], z)
        assert rt_autocorrelation_at(s, float(z)) == pytest.approx(ref, rel=1e-12)
        assert rt_autocorrelation_at(s, -float(z)) == pytest.approx(ref, rel=1e-12)
    assert rt_autocorrelation_at(s, 0.5) == 0.0
    s3 = RandomTilingSpec1D([3, 2], [0.5, 0.5])
    assert rt_autocorr_coeff(s3, (2, 0)) == pytest.approx(rt_coefficient_by_words([3, 2], [0.5, 0.5], 6))


def test_incommensurate_coefficient_is_single_term():
    s = RandomTilingSpec1D([TAU, 1.0], [0.5, 0.5])
    # multinomial(2, 1) = 3, p^m = 1/8
    assert rt_autocorr_coeff(s, (2, 1)) == pytest.approx(rt_density(s) * 3 / 8)
    with pytest.raises(ValidationError):
        rt_autocorr_coeff(s, (1, -1))


def test_partial_sums_converge_and_are_bounded():
    s = RandomTilingSpec1D([2, 1], [0.5, 0.5])
    k = np.array([0.1, 0.3, 0.45])
    gN = rt_partial_sum(s, k, 400)
    assert np.allclose(gN, rt_ac_density(s)(k), atol=1e-12)
    for N in (1, 5, 50):
        assert np.all(np.abs(rt_partial_sum(s, k, N)) <= rt_partial_sum_bound(s, k))


def test_bridge_identity_against_words():
    u, p = [1.3, 0.4, 2.0], [0.2, 0.5, 0.3]
    s = RandomTilingSpec1D(u, p)
    for N in (0, 1, 4, 7):
        lhs, rhs = mean_bridge_identity(s, N)
        wl, wr = bridge_by_words(u, p, N)
        assert lhs == pytest.approx(wl, rel=1e-12, abs=1e-14)
        assert rhs == pytest.approx(wr, rel=1e-12)
    with pytest.raises(ValidationError):
        mean_bridge_identity(s, 100)


def test_sampler_exact_positions():
    s = RandomTilingSpec1D([2, 1], [0.5, 0.5])
    c = sample_rt(s, 1000, 3)
    x = c.points[:, 0]
    assert x[0] == 0.0 and np.all(np.diff(x) > 0)
    assert set(np.diff(x).tolist()) <= {1.0, 2.0}
    assert np.array_equal(x, sample_rt(s, 1000, 3).points[:, 0])
    w = sample_rt(s, 1000, 3, window_length=500)
    assert w.volume == 500.0 and np.all(w.points < 500)


def test_estimator_wrapper():
    m = RandomTilingModel(lengths=(2, 1), probabilities=(0.5, 0.5)).fit()
    assert m.density_ == pytest.approx(2 / 3)
    assert m.predict([0.3])[0] == pytest.approx(G21_AT_03)
