import numpy as np
import pytest

from rtdiffraction import ValidationError
from rtdiffraction.dimer import (
    LOZENGE_SYMMETRIES,
    CouplingTable,
    DominoModel,
    LozengeModel,
    check_triangle,
    coupling_domino,
    coupling_lozenge,
    domino_activities_for_density,
    domino_coupling_grid,
    domino_coupling_table,
    domino_densities,
    domino_joint_occupation,
    domino_pp,
    domino_torus,
    empirical_joint_occupation,
    enumerate_domino_matchings,
    ledermann_check,
    lozenge_activities_for_density,
    lozenge_coupling_table,
    lozenge_densities,
    lozenge_phi0,
    lozenge_pp,
    lozenge_single_integral,
    lozenge_torus,
    sample_domino_mcmc,
    sample_lozenge_mcmc,
)
from rtdiffraction.spectral import KGrid

from oracles import (
    domino_coupling_quad,
    domino_matchings_count,
    domino_rho1,
    lozenge_peak,
    lozenge_rho,
)

# frozen from tests/oracles.py::domino_coupling_quad (residue inner integral + adaptive quadrature)
DOMINO_COUPLING_REF = {
    (1.0, 1.0, 1, 0): -0.25,
    (1.0, 1.0, 2, 1): 0.06830988618379068j,
    (1.0, 1.0, 5, 0): -0.06690113816209328,
    (1.0, 1.0, -3, 2): 0.06830988618379066,
    (2.0, 1.0, 1, 0): -0.17620819117478337,
    (2.0, 1.0, 0, 1): 0.14758361765043324j,
    (2.0, 1.0, 4, -7): -0.02095240120712544j,
    (0.7, 1.3, 5, 0): -0.04974942978761775,
}


# --------------------------------------------------------------------------
# domino couplings


@pytest.mark.parametrize("key", sorted(DOMINO_COUPLING_REF, key=str))
def test_domino_coupling_frozen_reference(key):
    z1, z2, x, y = key
    # unequal activities carry an M^-2 grid error that the Richardson step removes
    value = coupling_domino(x, y, z1, z2, extrapolate=z1 != z2)
    assert abs(value - DOMINO_COUPLING_REF[key]) < 1e-9


def test_domino_coupling_live_oracle():
    ref = domino_coupling_quad(3, -2, 1.5, 1.0)
    assert abs(coupling_domino(3, -2, 1.5, 1.0, extrapolate=True) - ref) < 1e-9


def test_domino_coupling_structure():
    T = domino_coupling_grid(1.3, 0.9, radius=10)
    R = 10
    r = np.arange(-R, R + 1)
    X, Y = np.meshgrid(r, r, indexing="ij")
    assert np.all(T[(X - Y) % 2 == 0] == 0)
    assert np.array_equal(T, -T[::-1, ::-1])
    odd_x = (X % 2 == 1) & ((X - Y) % 2 == 1)
    assert np.all(T[odd_x].imag == 0) and np.all(T[~odd_x & ((X - Y) % 2 == 1)].real == 0)


def test_domino_coupling_validation():
    with pytest.raises(ValidationError):
        coupling_domino(1, 0, 1, 1, resolution=1000)
    with pytest.raises(ValidationError):
        coupling_domino(1, 0, -1, 1)
    with pytest.raises(ValidationError):
        domino_coupling_grid(1, 1, radius=200, resolution=256)


def test_coupling_table_roundtrip(tmp_path):
    t = domino_coupling_table(2.0, 1.0, radius=4, resolution=256)
    assert t.extrapolated
    t.save(tmp_path / "t.cplt")
    back = CouplingTable.load(tmp_path / "t.cplt")
    assert np.array_equal(back.values, t.values) and back.activities == (2.0, 1.0)
    calls = []

    def builder(*a, **kw):
        calls.append(1)
        return domino_coupling_table(*a, **kw)

    for _ in range(2):
        CouplingTable.cached(builder, tmp_path, "domino", (1.0, 1.0), 3, 256)
    assert len(calls) == 1
    with pytest.raises(ValidationError):
        t(5, 0)


# --------------------------------------------------------------------------
# domino spectra


@pytest.mark.parametrize("z", [(1.0, 1.0), (2.0, 1.0), (0.6, 1.7)])
def test_domino_densities_closed_form(z):
    rho = domino_densities(*z)
    assert rho[0] == pytest.approx(domino_rho1(*z), abs=1e-9)


def test_domino_inverse_activity():
    z1, z2 = domino_activities_for_density(0.7)
    assert z2 == 1.0
    assert z1 == pytest.approx(np.tan(0.35 * np.pi), rel=1e-8)


def test_domino_pp_peaks():
    pp = domino_pp(0.7, 0.3)
    assert pp.intensity_at([[0, 0], [1, 1], [1, 0], [0, 3]]) == pytest.approx([0.25, 0.25, 0.04, 0.04])
    assert pp.intensity_at([[0.5, 0]])[0] == 0.0
    degenerate = domino_pp(1.0, 0.0)
    assert degenerate.intensity_at([[2.0, 0.0], [1.0, 0.0]]) == pytest.approx([0.25, 0.25])
    assert domino_pp(0.5, 0.5).intensity_at([[1.0, 0.0]])[0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValidationError):
        domino_pp(0.7, 0.7)


def test_domino_joint_occupation_limits():
    m = DominoModel(2.0, 1.0, radius=34).fit()
    P, c = domino_joint_occupation(m, 1, 1, [[0, 0], [30, 0]])
    assert P[0] == pytest.approx(m.rho_[0] / 2)
    assert abs(c[1]) < 1e-3
    # overlapping horizontal dominoes exclude each other
    P, _ = domino_joint_occupation(m, 1, 1, [[1, 0]])
    assert abs(P[0]) < 1e-12
    with pytest.raises(ValidationError):
        domino_joint_occupation(m, 1, 2, [[0.0, 0.0]])


def test_domino_diffuse_density_mean_is_parseval():
    m = DominoModel(2.0, 1.0, radius=34).fit()
    dd = m.diffuse_density(cutoff=30)
    # one fundamental cell of the period lattice spanned by (1, 1), (1, -1) has area 2
    g = KGrid.span([0, 0], [2, 1], [1 / 64, 1 / 64])
    mean = dd.on_grid(g).mean()
    bragg = m.pp().intensities.sum() / 2
    # scatterer density 1/2 with unit weights
    assert mean + bragg == pytest.approx(0.5, abs=1e-10)
    k = g.points()[::97]
    assert np.allclose(dd(k), dd.on_grid(g).ravel()[::97], atol=1e-10)
    assert dd.tail_bound > 0


# --------------------------------------------------------------------------
# lozenge


def test_lozenge_nearest_neighbour_third():
    for d, z in (((-1, 0), 1.0), ((0, -1), 1.0), ((0, 0), 1.0)):
        assert z * coupling_lozenge(*d, 1.0, 1.0, 1.0) == pytest.approx(1 / 3, abs=1e-12)


@pytest.mark.parametrize("z", [(1.0, 1.0, 1.0), (1.0, 1.3, 0.8), (0.5, 0.6, 0.9)])
def test_lozenge_densities_are_triangle_angles(z):
    assert lozenge_densities(*z) == pytest.approx(lozenge_rho(z), abs=1e-10)


def test_lozenge_inverse_activity_roundtrip():
    rho = np.array([0.2, 0.5, 0.3])
    assert lozenge_densities(*lozenge_activities_for_density(rho)) == pytest.approx(rho, abs=1e-10)


def test_lozenge_symmetries():
    rng = np.random.default_rng(11)
    for _ in range(6):
        z = 1 + rng.random(3) * 0.5
        x, y = (int(v) for v in rng.integers(-4, 5, 2))
        base = coupling_lozenge(x, y, *z)
        for sym in LOZENGE_SYMMETRIES:
            x2, y2, z2 = sym(x, y, tuple(z))
            assert coupling_lozenge(x2, y2, *z2) == pytest.approx(base, abs=1e-10)


def test_lozenge_single_integral():
    z = (1.0, 1.4, 0.9)
    for x, y in ((-1, 0), (-2, 1), (-3, -2)):
        assert lozenge_single_integral(x, y, *z) == pytest.approx(coupling_lozenge(x, y, *z), abs=1e-10)
    # at y = 0 the two variants differ unless z2 == z3
    lit = lozenge_single_integral(-3, 0, *z, literal=True)
    assert abs(lit - coupling_lozenge(-3, 0, *z)) > 1e-4
    with pytest.raises(ValidationError):
        lozenge_single_integral(0, 0, *z)


def test_lozenge_triangle_condition():
    with pytest.raises(ValidationError):
        check_triangle(1.0, 1.0, 2.0)
    assert lozenge_phi0(1.0, 1.0, 1.0) == pytest.approx(2 * np.pi / 3)


def test_lozenge_pp_values():
    pp = lozenge_pp([1 / 3] * 3)
    ref = [lozenge_peak([1 / 3] * 3, h, k) for h, k in ((0, 0), (1, 0), (0, 1), (1, 1))]
    assert pp.intensity_at([[0, 0], [1, 0], [0, 1], [1, 1]]) == pytest.approx(ref)
    assert ref[0] == pytest.approx(4 / 3) and ref[1] == pytest.approx(4 / 27)


def test_lozenge_table_matches_pointwise():
    t = lozenge_coupling_table(1.0, 1.3, 0.8, radius=3)
    for x, y in ((2, -1), (-3, 3), (0, 0)):
        assert t[x, y].real == pytest.approx(coupling_lozenge(x, y, 1.0, 1.3, 0.8), abs=1e-12)


def test_lozenge_model_joint_occupation():
    m = LozengeModel(radius=6).fit()
    P, c = m.joint_occupation(1, 1, [[0, 0]])
    assert P[0] == pytest.approx(1 / 3)
    P, _ = m.joint_occupation(1, 2, [[0, 0]])
    assert abs(P[0]) < 1e-12


# --------------------------------------------------------------------------
# finite tori


@pytest.mark.parametrize("m,n", [(2, 2), (2, 4), (4, 2), (4, 4), (2, 6)])
def test_domino_torus_counts(m, n):
    assert domino_torus(1.0, 1.0, m, n).partition == pytest.approx(domino_matchings_count(m, n))


def test_domino_torus_matches_enumeration_weighted():
    w, h, v = enumerate_domino_matchings(4, 4, 2.0, 1.0)
    t = domino_torus(2.0, 1.0, 4, 4)
    assert t.partition == pytest.approx(w.sum())
    assert t.bond_probabilities == pytest.approx([w[h].sum() / w.sum(), w[v].sum() / w.sum()])


def test_torus_drift_towards_quadrature():
    ref = domino_rho1(2.0, 1.0)
    drift = [abs(domino_torus(2.0, 1.0, m, m).densities[0] - ref) for m in (4, 6, 8)]
    assert drift[0] > drift[1] > drift[2]
    t = lozenge_torus(1.0, 1.0, 1.0, 6, 6)
    assert t.densities.sum() == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        domino_torus(1, 1, 10, 10)


def test_ledermann_bound():
    out = ledermann_check(1.0, 1.0, 6, 6)
    assert out["within_rank"] and out["N"] == 36


# --------------------------------------------------------------------------
# samplers


def test_domino_sampler_valid_and_seeded():
    a = sample_domino_mcmc(1.0, 1.0, 8, 8, 200, seed=4)
    b = sample_domino_mcmc(1.0, 1.0, 8, 8, 200, seed=4)
    assert a.is_valid() and np.array_equal(a.state, b.state)
    c = sample_domino_mcmc(1.5, 1.0, 8, 8, 200, seed=4, worms_per_sweep=2)
    assert c.is_valid()
    comb = a.scatterers((1, 1))
    assert len(comb) == 32 and comb.volume == 64.0
    with pytest.raises(ValidationError):
        sample_domino_mcmc(1.0, 1.0, 7, 8, 200, seed=1)


def test_domino_sampler_fraction_and_pairs():
    snaps = []
    sample_domino_mcmc(1.0, 1.0, 16, 16, 3000, seed=2, snapshot_every=50,
                       callback=lambda cfg, s: snaps.append(cfg))
    fr = np.mean([s.fractions()[0] for s in snaps])
    assert abs(fr - 0.5) < 0.05
    mean, _ = empirical_joint_occupation(snaps, 1, 1, [[0, 0], [1, 0]])
    assert mean[0] == pytest.approx(np.mean([np.mean(s.state == 0) for s in snaps]))
    assert mean[1] == 0.0


def test_lozenge_sampler_fractions():
    snaps = []
    sample_lozenge_mcmc(1.0, 1.3, 0.8, 12, 12, 3000, seed=3, snapshot_every=20,
                        callback=lambda cfg, s: snaps.append(cfg))
    assert all(s.is_valid() for s in snaps[::20])
    fr = np.mean([s.fractions() for s in snaps], axis=0)
    assert fr == pytest.approx(lozenge_rho((1.0, 1.3, 0.8)), abs=0.03)
