import numpy as np
import pytest

from rtdiffraction import ValidationError
from rtdiffraction.chains import (
    MarkovChainModel,
    NotPrimitiveError,
    NotReversibleError,
    analyze_chain,
    bernoulli_chain,
    bernoulli_diffraction,
    is_primitive,
    markov_ac_density,
    markov_autocorrelation,
    markov_diffraction,
    sample_chain,
    sample_chain_states,
)
from rtdiffraction.spectral import KGrid, average_grids, periodogram

M2 = [[0.8, 0.2], [0.2, 0.8]]
M3 = [[0.5, 0.3, 0.2], [0.3, 0.4, 0.3], [0.2, 0.3, 0.5]]

# frozen from tests/oracles.py::markov_f_by_series (direct autocorrelation sums)
F2_AT_03 = 0.09244171181711804
F3_AT_017 = 1.7206064438800213


def test_two_state_values():
    _, data = analyze_chain([1, 0], M2)
    assert data.eigenvalues[1] == pytest.approx(0.6, abs=1e-14)
    f = markov_ac_density(data)
    assert f(np.array([0.0, 0.5, 0.3])) == pytest.approx([1.0, 0.0625, F2_AT_03], abs=1e-12)


def test_three_state_complex_weights_match_series():
    _, data = analyze_chain([1, 2j, -1], M3)
    for form in ("eigen", "operator"):
        assert markov_ac_density(data, form)(np.array([0.17]))[0] == pytest.approx(F3_AT_017, rel=1e-10)


def test_eigen_and_operator_forms_agree():
    _, data = analyze_chain([1, 2j, -1], M3)
    k = np.linspace(0, 1, 17)
    assert np.allclose(markov_ac_density(data, "eigen")(k), markov_ac_density(data, "operator")(k), atol=1e-12)


def test_parseval_closure():
    spec, data = analyze_chain([1, 2j, -1], M3)
    pp, ac = markov_diffraction(data)
    k = (np.arange(4096) + 0.5) / 4096
    lhs = ac(k).mean() + pp.intensities[0]
    assert lhs == pytest.approx(float(spec.p @ np.abs(spec.h) ** 2), abs=1e-10)


def test_autocorrelation_limit():
    spec, data = analyze_chain([1, 0], M2)
    assert markov_autocorrelation(spec, 0) == pytest.approx(0.5)
    assert markov_autocorrelation(spec, 200) == pytest.approx(abs(data.beta[0]) ** 2, abs=1e-12)


def test_primitivity_uses_positive_power():
    assert is_primitive(M2)
    assert not is_primitive([[0, 1], [1, 0]])
    assert is_primitive([[0, 1], [0.5, 0.5]])
    with pytest.raises(NotPrimitiveError):
        analyze_chain([1, 0], [[0, 1], [1, 0]])


def test_rejects_irreversible_and_bad_input():
    cyc = [[0.1, 0.8, 0.1], [0.1, 0.1, 0.8], [0.8, 0.1, 0.1]]
    with pytest.raises(NotReversibleError):
        analyze_chain([1, 2, 3], cyc)
    with pytest.raises(ValidationError):
        analyze_chain([1, 1], M2)
    with pytest.raises(ValidationError):
        analyze_chain([1, 0], [[0.5, 0.6], [0.2, 0.8]])
    with pytest.raises(ValidationError):
        bernoulli_diffraction([1, 0], [0.6, 0.6])


def test_bernoulli():
    pp, ac = bernoulli_diffraction([1, 0], [0.5, 0.5])
    assert pp.intensity_at([[0.0], [7.0]]).tolist() == [0.25, 0.25]
    assert ac(np.array([0.1, 0.4])) == pytest.approx([0.25, 0.25])
    _, data = bernoulli_chain([1, 0], [0.5, 0.5])
    assert np.allclose(markov_ac_density(data)(np.array([0.1, 0.4])), 0.25)


def test_sampler_is_seeded_and_stationary():
    spec, _ = analyze_chain([1, 0], M2)
    a = sample_chain_states(spec, 20000, 5)
    assert np.array_equal(a, sample_chain_states(spec, 20000, 5))
    assert not np.array_equal(a, sample_chain_states(spec, 20000, 6))
    assert abs(a.mean() - 0.5) < 0.03
    stay = np.mean(a[1:] == a[:-1])
    assert abs(stay - 0.8) < 0.02


def test_sampled_background_matches_small():
    spec, data = analyze_chain([1, 0], M2)
    g = KGrid.span(0, 1, 1 / 1024)
    avg = average_grids([periodogram(sample_chain(spec, 1024, s), g) for s in range(32)])
    f = markov_ac_density(data)(g.axes()[0])
    mid = slice(64, 960)
    assert np.mean(avg.values[mid]) == pytest.approx(np.mean(f[mid]), rel=0.05)


def test_estimator_wrapper():
    m = MarkovChainModel(h=(1, 0), M=M2).fit()
    assert m.predict([0.5])[0] == pytest.approx(0.0625)
    assert m.autocorrelation(0) == pytest.approx(0.5)
    assert "M" in m.get_params()
