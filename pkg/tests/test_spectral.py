import numpy as np
import pytest

from rtdiffraction import ValidationError
from rtdiffraction.spectral import (
    AcDensity,
    IntensityGrid,
    KGrid,
    PeakClassifier,
    PeriodogramEstimator,
    PurePointSpectrum,
    WeightedDiracComb,
    _direct_structure_factor,
    average_grids,
    classify_peaks,
    compare_density,
    empirical_autocorrelation,
    periodogram,
    prefix_periodograms,
    structure_factor,
)


def test_kgrid_span_and_points():
    g = KGrid.span(0.0, 1.0, 0.25)
    assert g.counts == (4,)
    assert np.allclose(g.axes()[0], [0, 0.25, 0.5, 0.75])
    g2 = KGrid.span([0, 0], [1, 2], [0.5, 0.5])
    assert g2.shape == (2, 4)
    assert g2.points().shape == (8, 2)
    with pytest.raises(ValidationError):
        KGrid((0.0,), (-1.0,), (3,))


def test_comb_validation():
    with pytest.raises(ValidationError):
        WeightedDiracComb([0.0, 0.0], window=(0, 2))
    with pytest.raises(ValidationError):
        WeightedDiracComb([0.0, 3.0], window=(0, 2))
    with pytest.raises(ValidationError):
        WeightedDiracComb([0.0, 1.0], [1.0], window=(0, 2))
    c = WeightedDiracComb([0.0, 1.0, 2.5], window=(0, 3))
    assert c.volume == 3.0
    assert len(c.crop(0, 2)) == 2


def test_fft_path_matches_direct_sum():
    rng = np.random.default_rng(1)
    x = np.sort(rng.choice(200, 80, replace=False)) / 2.0
    w = rng.normal(size=80) + 1j * rng.normal(size=80)
    comb = WeightedDiracComb(x, w, window=(0, 100))
    g = KGrid.span(-1.0, 1.0, 1 / 64)
    fft = structure_factor(comb, g)
    direct = _direct_structure_factor(comb.points, comb.weights, g)
    assert np.max(np.abs(fft - direct)) < 1e-9


def test_fft_path_2d_matches_direct_sum():
    rng = np.random.default_rng(2)
    pts = np.array([(i, j) for i in range(12) for j in range(10)], float)
    pts = pts[rng.random(len(pts)) < 0.5]
    w = rng.normal(size=len(pts))
    comb = WeightedDiracComb(pts, w, window=([0, 0], [12, 10]))
    g = KGrid.span([0, -0.5], [1, 0.5], [1 / 12, 1 / 10])
    assert np.max(np.abs(structure_factor(comb, g) - _direct_structure_factor(comb.points, comb.weights, g))) < 1e-9


def test_periodogram_of_lattice_is_bragg():
    comb = WeightedDiracComb(np.arange(64.0), window=(0, 64))
    g = KGrid.span(0, 1, 1 / 64)
    I = periodogram(comb, g).values
    assert I[0] == pytest.approx(64.0)
    assert np.max(I[1:]) < 1e-20


def test_prefix_periodograms_match_separate_windows():
    rng = np.random.default_rng(3)
    x = np.cumsum(rng.choice([1.0, (1 + 5**0.5) / 2], 3000))
    x = x[x < 3000]
    comb = WeightedDiracComb(x, window=(0, 3000))
    g = KGrid.span(0, 2, 1 / 300)
    lengths = [500, 1000, 3000]
    fast = prefix_periodograms(comb, g, lengths)
    for L, pg in zip(lengths, fast):
        ref = periodogram(comb.crop(0, L), g)
        assert pg.volume == L
        assert np.max(np.abs(pg.values - ref.values)) < 1e-8 * max(1.0, ref.values.max())


def test_autocorrelation_hermitian_and_lattice_value():
    comb = WeightedDiracComb(np.arange(100.0), np.exp(0.3j * np.arange(100)), window=(0, 100))
    t = empirical_autocorrelation(comb, 40.0, [1.0, -1.0, 3.0])
    assert t.is_hermitian(atol=0)
    # the box [10, 90] holds 81 points with 80 pairs at distance 1 and 78 at distance 3
    assert t[1.0] == pytest.approx(np.exp(0.3j))
    assert t[3.0] == pytest.approx(78 / 80 * np.exp(0.9j))


def test_pure_point_spectrum_periodic_lookup_and_json():
    s = PurePointSpectrum([[0.0]], [0.25], period=[[1.0]])
    assert s.intensity_at([[0.0], [3.0], [0.5]]).tolist() == [0.25, 0.25, 0.0]
    pos, inten = s.peaks_in_box(-1.1, 2.1)
    assert pos[:, 0].tolist() == [-1.0, 0.0, 1.0, 2.0]
    back = PurePointSpectrum.from_json(s.to_json(0, 2))
    assert back.positions[:, 0].tolist() == [0.0, 1.0, 2.0]
    with pytest.raises(ValidationError):
        PurePointSpectrum([[0.0]], [-1.0])


def test_ac_density_periodicity_and_cache():
    d = AcDensity(lambda k: 1 + np.cos(2 * np.pi * k), period=[[1.0]])
    assert d.periodicity_residual(np.linspace(0, 1, 11)) < 1e-14
    g = KGrid.span(0, 1, 0.5)
    assert np.allclose(d.on_grid(g), [2.0, 0.0])


def _synthetic(vols, bragg_at=0, sc_at=2):
    g = KGrid.span(0, 1, 0.125)
    out = []
    for v in vols:
        vals = np.full(8, 0.3)
        vals[bragg_at] = 0.25 * v + 0.3
        vals[sc_at] = 0.3 * v**0.5
        out.append(IntensityGrid(g, vals, v))
    return out


def test_classify_peaks_labels_and_intensity():
    spec, resid = classify_peaks(_synthetic([100.0, 200.0, 400.0]))
    assert spec.positions[:, 0].tolist() == [0.0]
    assert spec.intensities[0] == pytest.approx(0.25)
    assert resid.labels[0] == "pp" and resid.labels[2] == "sc" and resid.labels[1] == "ac"
    assert resid.values[0] == pytest.approx(0.3)
    assert resid.slopes[2] == pytest.approx(0.5)


def test_classify_peaks_needs_three_increasing_volumes():
    with pytest.raises(ValidationError):
        classify_peaks(_synthetic([100.0, 200.0]))
    with pytest.raises(ValidationError):
        classify_peaks(_synthetic([100.0, 100.0, 200.0]))


def test_peak_classifier_estimator():
    clf = PeakClassifier().fit(_synthetic([10.0, 20.0, 40.0]))
    assert clf.predict()[0] == "pp"
    assert clf.get_params()["bragg_slope"] == 0.9


def test_average_grids_and_estimator():
    g = KGrid.span(0, 1, 0.5)
    a = average_grids([IntensityGrid(g, [1.0, 2.0], 4.0), IntensityGrid(g, [3.0, 2.0], 4.0)])
    assert np.allclose(a.values, [2.0, 2.0])
    assert np.allclose(a.stderr, [1.0, 0.0])
    combs = [WeightedDiracComb(np.arange(8.0), window=(0, 8)) for _ in range(2)]
    est = PeriodogramEstimator(g).fit(combs)
    assert est.n_replicas_ == 2
    assert est.transform(combs).shape == (2, 2)


def test_compare_density_masks_peaks_and_bins():
    g = KGrid.span(0, 1, 0.01)
    analytic = AcDensity(lambda k: np.full(np.shape(k), 0.5), period=[[1.0]])
    vals = np.full(100, 0.5)
    vals[0] = 50.0
    emp = IntensityGrid(g, vals, 100.0)
    peaks = PurePointSpectrum([[0.0]], [1.0], period=[[1.0]])
    rep = compare_density(emp, analytic, mask_radius=0.015, peaks=peaks)
    assert rep.max_rel < 1e-12 and rep.n_points == 97
    rep = compare_density(emp, analytic, mask_radius=0.015, peaks=peaks, n_bins=10)
    assert rep.max_rel < 1e-12 and rep.n_points == 10
