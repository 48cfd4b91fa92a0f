import json

import numpy as np
import pytest

from rtdiffraction import ValidationError
from rtdiffraction.product import (
    ProductSpec,
    ProductTilingModel,
    product_autocorr,
    product_sample,
    product_spectrum,
)
from rtdiffraction.tiling1d import RandomTilingSpec1D, rt_ac_density

from oracles import rt_coefficient_by_words

RT21 = RandomTilingSpec1D([2, 1], [0.5, 0.5])
RT31 = RandomTilingSpec1D([3, 1], [0.25, 0.75])


def test_terms_and_exponents():
    desc = product_spectrum(ProductSpec([RT21, RT21]))
    assert len(desc.terms) == 4
    assert desc.term(("pp", "pp")).kind == "pp" and desc.term(("pp", "pp")).beta == 1.0
    for mixed in (("pp", "ac"), ("ac", "pp")):
        t = desc.term(mixed)
        assert t.kind == "sc" and t.beta == 0.75 and t.m == 1
    assert desc.term(("ac", "ac")).kind == "ac" and desc.term(("ac", "ac")).beta == 0.5
    assert json.loads(desc.to_json())["D"] == 2


def test_three_factor_exponents():
    desc = product_spectrum(ProductSpec([RT21, RT21, RT21]))
    assert sorted({t.beta for t in desc.terms}) == pytest.approx([0.5, 2 / 3, 5 / 6, 1.0])


def test_lattice_factor_removes_terms():
    lat = RandomTilingSpec1D([1, 1], [0.5, 0.5])
    desc = product_spectrum(ProductSpec([RT21, lat]))
    assert not desc.term(("pp", "ac")).present
    assert desc.term(("ac", "pp")).present


def test_pp_intensities_are_products():
    desc = product_spectrum(ProductSpec([RT21, RT31]))
    d1, d2 = 2 / 3, 1 / (0.25 * 3 + 0.75)
    assert desc.pp_intensity([[0.0, 0.0], [2.0, 5.0]]) == pytest.approx([(d1 * d2) ** 2] * 2)
    assert desc.pp_intensity([[0.5, 0.0]])[0] == 0.0
    pos, inten = desc.pp_peaks_in_box([0, 0], [1, 1])
    assert len(pos) == 4 and np.allclose(inten, (d1 * d2) ** 2)
    k = np.array([[0.3, 0.2]])
    assert desc.ac_density(k)[0] == pytest.approx(rt_ac_density(RT21)([0.3])[0] * rt_ac_density(RT31)([0.2])[0])


def test_autocorrelation_factorises():
    spec = ProductSpec([RT21, RT31])
    ref = rt_coefficient_by_words([2, 1], [0.5, 0.5], 3) * rt_coefficient_by_words([3, 1], [0.25, 0.75], 4)
    assert product_autocorr(spec, (3.0, 4.0)) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(ValidationError):
        product_autocorr(spec, (1.0,))


def test_sample_is_grid_of_factor_samples():
    c = product_sample(ProductSpec([RT21, RT31]), [50, 40], seed=9, window=[60, 60])
    xs = np.unique(c.points[:, 0])
    ys = np.unique(c.points[:, 1])
    assert len(c) == xs.size * ys.size
    assert c.volume == 3600.0
    again = product_sample(ProductSpec([RT21, RT31]), [50, 40], seed=9, window=[60, 60])
    assert np.array_equal(c.points, again.points)


def test_estimator_wrapper():
    m = ProductTilingModel().fit()
    assert m.predict([[0.0, 1.0]])[0] == pytest.approx((4 / 9) ** 2)
