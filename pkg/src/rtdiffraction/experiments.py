"""Model families behind the command line: predict, simulate and compare.

Each family reads its parameters from a :class:`~rtdiffraction.config.RunConfig`
and produces

* ``predict``: exact Bragg peaks in the k-window, a diffuse density sampled on
  the k-grid (when the family has one) and a dictionary of named quantities;
* ``simulate``: replica-averaged periodograms for a ladder of window volumes
  plus a summary of sample statistics;
* ``compare``: a list of :class:`Check` results combining both.

Named quantities can be pinned in the ``[expect]`` section of a config as
``name = value tolerance``; every such line becomes one more check.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ._validation import ValidationError
from .chains import analyze_chain, bernoulli_chain, markov_diffraction, sample_chain
from .config import RunConfig
from .dimer.coupling import (
    LOZENGE_SYMMETRIES,
    coupling_domino,
    coupling_lozenge,
    domino_coupling_grid,
    lozenge_phi0,
)
from .dimer.domino import DominoModel, domino_activities_for_density, domino_pp
from .dimer.lozenge import CELL_AREA, LozengeModel, lozenge_activities_for_density, lozenge_pp
from .dimer.mcmc import sample_domino_mcmc, sample_lozenge_mcmc
from .dimer.torus import domino_torus, enumerate_domino_matchings, ledermann_check
from .ising import IsingParams, ising_pp, magnetization, sample_ising_spins, spins_to_comb
from .product import ProductSpec, product_sample, product_spectrum
from .spectral import (
    IntensityGrid,
    KGrid,
    PurePointSpectrum,
    average_grids,
    classify_peaks,
    compare_density,
    periodogram,
    prefix_periodograms,
)
from .tiling1d import (
    RandomTilingSpec1D,
    mean_bridge_identity,
    rt_ac_density,
    rt_density,
    rt_pp_part,
    sample_rt,
)

__all__ = ["Check", "Prediction", "Simulation", "FAMILIES", "run_predict", "run_simulate",
           "run_compare", "replica_seed"]


@dataclass
class Check:
    """One pass/fail comparison."""

    name: str
    value: float
    expected: float
    tolerance: float
    passed: bool
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "value": _num(self.value),
            "expected": _num(self.expected),
            "tolerance": _num(self.tolerance),
            "passed": bool(self.passed),
            "note": self.note,
        }

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"{flag}  {self.name}: value={_fmt(self.value)} expected={_fmt(self.expected)} "
                f"tol={_fmt(self.tolerance)}" + (f"  ({self.note})" if self.note else ""))


def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    try:
        f = float(v)
    except (TypeError, ValueError):
        return str(v)
    return f if math.isfinite(f) else str(f)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    try:
        return f"{float(v):.6g}"
    except (TypeError, ValueError):
        return str(v)


def rel_check(name, value, expected, tol, note="") -> Check:
    scale = abs(expected) if expected != 0 else 1.0
    return Check(name, value, expected, tol, abs(value - expected) <= tol * scale, note)


def abs_check(name, value, expected, tol, note="") -> Check:
    return Check(name, value, expected, tol, abs(value - expected) <= tol, note)


def bool_check(name, ok, note="") -> Check:
    return Check(name, bool(ok), True, 0.0, bool(ok), note)


@dataclass
class Prediction:
    peaks: PurePointSpectrum | None
    grid: KGrid | None
    density: np.ndarray | None
    quantities: dict = field(default_factory=dict)
    ac: object = None


@dataclass
class Simulation:
    grids: list
    summary: dict = field(default_factory=dict)
    comb: object = None
    image_grid: IntensityGrid | None = None


def replica_seed(base: int, r: int) -> int:
    """Seed of replica ``r`` derived from the base seed."""
    return int(np.random.SeedSequence([int(base), int(r)]).generate_state(1)[0])


# --------------------------------------------------------------------------
# shared pieces


def _grid(cfg: RunConfig, dim: int) -> KGrid:
    w = cfg.section("window")
    lo = cfg.floats(w["lo"])
    hi = cfg.floats(w["hi"])
    step = cfg.floats(w["step"])
    if len(lo) != dim or len(hi) != dim:
        raise ValidationError(f"window needs {dim}-dimensional lo/hi")
    return KGrid.span(lo, hi, step if len(step) == dim else step * dim)


def _on_lattice(points, period) -> np.ndarray:
    """Rows of ``points`` lying on the lattice spanned by ``period`` rows."""
    f = np.linalg.solve(np.asarray(period, float).T, np.asarray(points, float).T).T
    return np.all(np.abs(f - np.round(f)) < 1e-9, axis=1)


def _bragg_checks(grid, detected, residual, predicted, tol, floor=1e-9, prefix="bragg",
                  max_listed=8):
    """Compare detected peaks on ``grid`` with ``predicted``.

    Every grid point carrying a predicted intensity above ``floor`` must be
    labelled Bragg with relative error at most ``tol``; stray Bragg labels
    elsewhere are reported in one combined check.
    """
    pts = grid.points()
    pred = predicted.intensity_at(pts)
    labels = residual.labels.ravel()
    found = detected.intensity_at(pts) if len(detected.intensities) else np.zeros(len(pts))
    checks = []
    # group predicted peaks by class (value) so the report stays short
    idx = np.nonzero(pred > floor)[0]
    shown = 0
    worst = 0.0
    for i in idx:
        err = abs(found[i] - pred[i]) / pred[i] if labels[i] == "pp" else math.inf
        worst = max(worst, err)
        if shown < max_listed:
            k = ", ".join(f"{c:g}" for c in pts[i])
            checks.append(Check(f"{prefix} I({k})", found[i] if labels[i] == "pp" else "not detected",
                                pred[i], tol, err <= tol, "relative"))
            shown += 1
    if len(idx) > max_listed:
        checks.append(Check(f"{prefix} worst relative error over {len(idx)} peaks", worst, 0.0,
                            tol, worst <= tol))
    stray = np.nonzero((labels == "pp") & (pred <= floor))[0]
    note = ""
    if stray.size:
        note = "at " + "; ".join("(" + ", ".join(f"{c:g}" for c in pts[i]) + ")" for i in stray[:5])
    checks.append(Check(f"{prefix} unexpected peaks", int(stray.size), 0, 0, stray.size == 0, note))
    return checks


def _sc_check(grid, residual, period, name="sc-candidates off the Bragg lattice"):
    pts = grid.points()
    labels = residual.labels.ravel()
    off = ~_on_lattice(pts, period)
    bad = np.nonzero(off & (labels == "sc"))[0]
    note = f"{off.sum()} off-lattice points tested"
    if bad.size:
        sl = residual.slopes.ravel()
        note += "; e.g. " + "; ".join(
            "(" + ", ".join(f"{c:g}" for c in pts[i]) + f") slope {sl[i]:.3f}" for i in bad[:6])
    return Check(name, int(bad.size), 0, 0, bad.size == 0, note)


def _expect_checks(cfg: RunConfig, quantities: dict):
    out = []
    for key, raw in cfg.section("expect").items():
        vals = raw.split()
        if key not in quantities:
            out.append(Check(f"expect {key}", "missing", vals[0], 0, False, "unknown quantity"))
            continue
        exp = float(vals[0])
        tol = float(vals[1]) if len(vals) > 1 else 0.0
        mode = vals[2] if len(vals) > 2 else "abs"
        fn = rel_check if mode == "rel" else abs_check
        out.append(fn(f"expect {key}", float(quantities[key]), exp, tol, mode))
    return out


def _volume_ladder(make_comb, crops, grid, replicas, seed):
    """Replica-averaged periodograms for each crop window."""
    acc = [[] for _ in crops]
    last = None
    for r in range(replicas):
        comb = make_comb(replica_seed(seed, r))
        last = comb
        for i, (lo, hi) in enumerate(crops):
            acc[i].append(periodogram(comb.crop(lo, hi), grid))
    return [average_grids(a) for a in acc], last


# --------------------------------------------------------------------------
# Bernoulli and Markov chains


def _chain(cfg: RunConfig, perturbed=False):
    """``(spec, data)``; ``[compare] rho_offset`` shifts weight to Bernoulli state 1."""
    m = cfg.section("model")
    h = cfg.complexes(m["h"])
    if cfg.family == "bernoulli":
        p = np.array(cfg.floats(m["p"]))
        off = cfg.getfloat("compare", "rho_offset", 0.0) if perturbed else 0.0
        if off:
            p = p.copy()
            p[0] += off
            p[1:] -= off / (len(p) - 1)
        return bernoulli_chain(h, p)
    return analyze_chain(h, cfg.matrix(m["M"]))


def _chain_predict(cfg: RunConfig, perturbed=False) -> Prediction:
    grid = _grid(cfg, 1)
    spec, data = _chain(cfg, perturbed)
    pp, ac = markov_diffraction(data)
    # midpoint rule is exact to rounding for this smooth periodic integrand
    kk = (np.arange(4096) + 0.5) / 4096
    integral = float(np.mean(ac(kk)))
    q = {
        "f(0)": float(ac(np.array([0.0]))[0]),
        "f(0.5)": float(ac(np.array([0.5]))[0]),
        "bragg": float(abs(data.beta[0]) ** 2),
        "integral_f": integral,
        "closure": integral + float(abs(data.beta[0]) ** 2),
        "mean_abs_h2": float(np.sum(spec.p * np.abs(spec.h) ** 2)),
        "lambda2": float(data.eigenvalues[1]) if len(data.eigenvalues) > 1 else 0.0,
    }
    return Prediction(pp, grid, ac.on_grid(grid), q, ac)


def _chain_simulate(cfg: RunConfig) -> Simulation:
    spec, _ = _chain(cfg)
    N = cfg.getint("simulate", "length", 1 << 16)
    R = cfg.getint("simulate", "replicas", 16)
    grid = _grid(cfg, 1)
    w = cfg.section("window")
    coarse = KGrid.span(cfg.floats(w["lo"]), cfg.floats(w["hi"]),
                        [cfg.getfloat("simulate", "classify_step", 4.0 / N)])
    crops = [(0.0, N / 4), (0.0, N / 2), (0.0, float(N))]
    acc = [[] for _ in crops]
    fine = []
    comb = None
    for r in range(R):
        comb = sample_chain(spec, N, replica_seed(cfg.seed, r))
        fine.append(periodogram(comb, grid))
        for i, (lo, hi) in enumerate(crops):
            acc[i].append(periodogram(comb.crop(lo, hi), coarse))
    return Simulation([average_grids(a) for a in acc], {"length": N, "replicas": R}, comb,
                      average_grids(fine))


def _chain_compare(cfg: RunConfig):
    t0 = time.time()
    pred = _chain_predict(cfg, perturbed=True)
    sim = _chain_simulate(cfg)
    tol_b = cfg.getfloat("compare", "bragg_tol", 0.02)
    tol_d = cfg.getfloat("compare", "density_tol", 0.05)
    bins = cfg.getint("compare", "bins", 64)
    spec, resid = classify_peaks(sim.grids)
    checks = _bragg_checks(sim.grids[0].grid, spec, resid, pred.peaks, tol_b)
    rep = compare_density(sim.image_grid, pred.ac, mask_radius=0.5 / sim.summary["length"],
                          peaks=pred.peaks, n_bins=bins)
    checks.append(Check(f"background max relative deviation over {bins} bins", rep.max_rel, 0.0,
                        tol_d, rep.max_rel <= tol_d, f"mean {rep.mean_rel:.4f}"))
    q = pred.quantities
    checks.append(abs_check("closure: integral of f + |<h>|^2 vs <|h|^2>", q["closure"],
                            q["mean_abs_h2"], 1e-8))
    checks += _expect_checks(cfg, q)
    return checks, pred, sim, time.time() - t0


# --------------------------------------------------------------------------
# 1D random tilings


def _rt_spec(section) -> RandomTilingSpec1D:
    """Lengths as integers or fractions (exact tags), floats, or the token ``tau``."""
    tau = (1 + math.sqrt(5)) / 2
    lengths = []
    for tok in section["lengths"].split():
        if tok == "tau":
            lengths.append(tau)
        elif "/" in tok or tok.isdigit():
            lengths.append(tok)
        else:
            lengths.append(float(tok))
    probs = [float(v) for v in section["probabilities"].split()]
    return RandomTilingSpec1D(lengths, probs)


def _rt_predict(cfg: RunConfig) -> Prediction:
    spec = _rt_spec(cfg.section("model"))
    grid = _grid(cfg, 1)
    g = rt_ac_density(spec)
    d = rt_density(spec)
    # approach the first exceptional point on a refining mesh
    k0 = 0.0 if not spec.commensurate else 1.0 / spec.xi
    mesh = g(k0 + np.array([1e-3, 1e-4, 1e-5, 1e-6]))
    q = {
        "density": d,
        "bragg": d * d,
        "g_continuation": float(g.singular_value),
        "g_mesh_limit": float(mesh[-1]),
        "g_mesh_gap": float(abs(mesh[-1] - g.singular_value)),
    }
    return Prediction(rt_pp_part(spec), grid, g.on_grid(grid), q, g)


def _rt_simulate(cfg: RunConfig) -> Simulation:
    spec = _rt_spec(cfg.section("model"))
    grid = _grid(cfg, 1)
    vols = [float(v) for v in cfg.get("simulate", "volumes", "4096 8192 16384 32768 65536").split()]
    R = cfg.getint("simulate", "replicas", 8)
    n_tiles = int(max(vols) / float(spec.p @ spec.u) * 1.05 + 64)
    acc = [[] for _ in vols]
    comb = None
    for r in range(R):
        comb = sample_rt(spec, n_tiles, replica_seed(cfg.seed, r), max(vols))
        if spec.commensurate:
            gs = [periodogram(comb.crop(0.0, v), grid) for v in vols]
        else:
            gs = prefix_periodograms(comb, grid, vols)
        for a, g in zip(acc, gs):
            a.append(g)
    grids = [average_grids(a) for a in acc]
    return Simulation(grids, {"volumes": vols, "replicas": R, "tiles": n_tiles}, comb, grids[-1])


def _rt_compare(cfg: RunConfig):
    t0 = time.time()
    pred = _rt_predict(cfg)
    sim = _rt_simulate(cfg)
    tol_b = cfg.getfloat("compare", "bragg_tol", 0.05)
    tol_d = cfg.getfloat("compare", "density_tol", 0.05)
    spec, resid = classify_peaks(sim.grids)
    grid = sim.grids[0].grid
    checks = _bragg_checks(grid, spec, resid, pred.peaks, tol_b)
    q = dict(pred.quantities)
    hw = cfg.getfloat("compare", "singular_halfwidth", 0.0)
    rt = _rt_spec(cfg.section("model"))
    if hw > 0 and rt.commensurate:
        # exceptional points of a rational tiling sit on (1/xi) Z
        k = grid.axes()[0]
        dist = np.abs(k * rt.xi - np.round(k * rt.xi)) / rt.xi
        near = (dist <= hw + 1e-12) & (dist > 1e-12)
        emp = float(np.mean([g.values.ravel()[near].mean() for g in sim.grids]))
        model = float(pred.ac.on_grid(grid).ravel()[near].mean())
        q["background_near_singular"] = emp
        checks.append(rel_check("binned background next to the exceptional points", emp,
                                q["g_continuation"], tol_d,
                                f"{near.sum()} grid points within {hw:g}, model average {model:.6f}"))
    if cfg.getbool("compare", "mesh_limit", False):
        checks.append(abs_check("mesh limit of g toward the exceptional point", q["g_mesh_limit"],
                                q["g_continuation"], 1e-6))
    checks += _expect_checks(cfg, q)
    return checks, pred, sim, time.time() - t0


# --------------------------------------------------------------------------
# product tilings


def _product_spec(cfg: RunConfig) -> ProductSpec:
    names = sorted(s for s in cfg.sections() if s.startswith("factor"))
    if not names:
        raise ValidationError("product family needs [factor1], [factor2], ... sections")
    return ProductSpec([_rt_spec(cfg.section(n)) for n in names])


def _product_predict(cfg: RunConfig) -> Prediction:
    spec = _product_spec(cfg)
    desc = product_spectrum(spec)
    grid = _grid(cfg, spec.D) if spec.D <= 2 else None
    peaks = None
    dens = None
    if grid is not None:
        lo = np.array(grid.origin)
        hi = lo + np.array(grid.step) * np.array(grid.counts)
        pos, inten = desc.pp_peaks_in_box(lo, hi)
        peaks = PurePointSpectrum(pos, inten)
        dens = desc.ac_density(grid.points()).reshape(grid.shape)
    q = {"density": spec.density}
    for t in desc.terms:
        q["beta[" + ",".join(t.parts) + "]"] = t.beta
    q["_descriptor"] = desc
    return Prediction(peaks, grid, dens, q)


def _product_simulate(cfg: RunConfig) -> Simulation:
    spec = _product_spec(cfg)
    if spec.D != 2:
        raise ValidationError("product simulation needs D = 2")
    grid = _grid(cfg, 2)
    vols = [int(v) for v in cfg.get("simulate", "volumes", "96 192 384").split()]
    R = cfg.getint("simulate", "replicas", 8)
    W = max(vols)
    counts = [int(W / float(f.p @ f.u) * 1.1 + 32) for f in spec.factors]
    acc = [[] for _ in vols]
    comb = None
    for r in range(R):
        comb = product_sample(spec, counts, replica_seed(cfg.seed, r), [W, W])
        for a, v in zip(acc, vols):
            a.append(_block_mean(comb, W, v, grid))
    grids = [_stack_grid(grid, a, float(v * v)) for a, v in zip(acc, vols)]
    return Simulation(grids, {"volumes": vols, "replicas": R}, comb, grids[-1])


def _product_compare(cfg: RunConfig):
    t0 = time.time()
    pred = _product_predict(cfg)
    sim = _product_simulate(cfg)
    tol_b = cfg.getfloat("compare", "bragg_tol", 0.05)
    spec, resid = classify_peaks(sim.grids)
    grid = sim.grids[0].grid
    checks = _bragg_checks(grid, spec, resid, pred.peaks, tol_b)
    desc = pred.quantities["_descriptor"]
    for t in desc.terms:
        if 0 < t.m < desc.spec.D:
            checks.append(Check(f"term {' x '.join(t.parts)} kind and beta", t.beta, 0.75, 0,
                                t.kind == "sc" and t.beta == 0.75, f"kind {t.kind}"))
    # lines where exactly one factor sits on its Bragg comb
    pts = grid.points()
    on = np.stack([desc._pp[i].intensity_at(pts[:, i:i + 1]) > 0 for i in range(2)], 1)
    line = on.sum(1) == 1
    labels = resid.labels.ravel()
    frac = float(np.mean(labels[line] == "sc")) if line.any() else float("nan")
    need = cfg.getfloat("compare", "sc_fraction", 0.8)
    checks.append(Check("sc-candidate fraction on the mixed lines", frac, need, 0, frac >= need,
                        f"{line.sum()} points, median slope {np.nanmedian(resid.slopes.ravel()[line]):.3f}"))
    checks += _expect_checks(cfg, {k: v for k, v in pred.quantities.items() if not k.startswith("_")})
    return checks, pred, sim, time.time() - t0


def _block_mean(comb, L, W, grid):
    """Periodogram averaged over the disjoint ``W x W`` blocks of an ``L x L`` sample."""
    vals = [periodogram(comb.crop((a, b), (a + W, b + W)), grid).values
            for a in range(0, L - W + 1, W) for b in range(0, L - W + 1, W)]
    return np.mean(vals, axis=0)


def _stack_grid(grid, arrays, volume):
    if not len(arrays):
        raise ValidationError("no snapshots recorded: raise [simulate] sweeps or lower snapshot_every")
    stack = np.array(arrays)
    err = stack.std(0, ddof=1) / np.sqrt(len(stack)) if len(stack) > 1 else np.zeros(stack.shape[1:])
    return IntensityGrid(grid, stack.mean(0), volume, len(stack), err)


# --------------------------------------------------------------------------
# domino


def _domino_activities(cfg: RunConfig):
    m = cfg.section("model")
    if "rho1" in m:
        return domino_activities_for_density(float(m["rho1"]), 1.0, int(m.get("resolution", 1024)))
    return float(m.get("z1", 1.0)), float(m.get("z2", 1.0))


def _domino_model(cfg: RunConfig) -> DominoModel:
    z1, z2 = _domino_activities(cfg)
    m = cfg.section("model")
    cutoff = int(m.get("cutoff", 30))
    return DominoModel(z1, z2, int(m.get("resolution", 1024)), max(32, cutoff + 2)).fit()


def _domino_predict(cfg: RunConfig, perturbed=False) -> Prediction:
    model = _domino_model(cfg)
    grid = _grid(cfg, 2)
    rho = model.rho_.copy()
    off = cfg.getfloat("compare", "rho_offset", 0.0) if perturbed else 0.0
    rho = np.array([rho[0] + off, rho[1] - off])
    w = cfg.complexes(cfg.get("model", "weights", "1 1"))
    pp = domino_pp(rho[0], rho[1], w[0], w[1])
    g = model.diffuse_density(int(cfg.get("model", "cutoff", "30")))
    dens = g.on_grid(grid)
    q = {"rho1": rho[0], "rho2": rho[1], "z1": model.z1, "z2": model.z2,
         "peak(0,0)": pp.intensity_at([[0.0, 0.0]])[0], "peak(1,0)": pp.intensity_at([[1.0, 0.0]])[0],
         "tail_bound": g.tail_bound}
    return Prediction(pp, grid, dens, q)


def _domino_simulate(cfg: RunConfig) -> Simulation:
    z1, z2 = _domino_activities(cfg)
    grid = _grid(cfg, 2)
    L = cfg.getint("simulate", "size", 32)
    sweeps = cfg.getint("simulate", "sweeps", 20000)
    every = cfg.getint("simulate", "snapshot_every", 200)
    R = cfg.getint("simulate", "replicas", 4)
    worms = cfg.getint("simulate", "worms_per_sweep", 0)
    vols = [int(v) for v in cfg.get("simulate", "volumes", f"{L // 4} {L // 2} {L}").split()]
    w = cfg.complexes(cfg.get("model", "weights", "1 1"))
    acc = {W: [] for W in vols}
    fr = []

    def cb(conf, _):
        comb = conf.scatterers(w)
        fr.append(conf.fractions())
        for W in vols:
            acc[W].append(_block_mean(comb, L, W, grid))

    per_rep = []
    conf = None
    for r in range(R):
        n0 = len(fr)
        conf = sample_domino_mcmc(z1, z2, L, L, sweeps, replica_seed(cfg.seed, r),
                                  worms_per_sweep=worms, snapshot_every=every, callback=cb)
        per_rep.append(np.mean(fr[n0:], axis=0))
    grids = [_stack_grid(grid, acc[W], float(W * W)) for W in vols]
    per_rep = np.array(per_rep)
    summary = {"size": L, "sweeps": sweeps, "replicas": R, "snapshots": len(fr),
               "rho1_mean": float(per_rep[:, 0].mean()),
               "rho1_stderr": float(per_rep[:, 0].std(ddof=1) / np.sqrt(R)) if R > 1 else float("nan")}
    return Simulation(grids, summary, conf.scatterers(w), grids[-1])


def _domino_compare(cfg: RunConfig):
    t0 = time.time()
    pred = _domino_predict(cfg, perturbed=True)
    sim = _domino_simulate(cfg)
    tol_b = cfg.getfloat("compare", "bragg_tol", 0.05)
    spec, resid = classify_peaks(sim.grids)
    grid = sim.grids[0].grid
    checks = _bragg_checks(grid, spec, resid, pred.peaks, tol_b)
    if cfg.getbool("compare", "forbid_sc", True):
        checks.append(_sc_check(grid, resid, np.eye(2)))
    s = sim.summary
    if cfg.getbool("compare", "fraction_check", True) and s["replicas"] > 1:
        checks.append(abs_check("horizontal fraction (3 sigma)", s["rho1_mean"], pred.quantities["rho1"],
                                3 * s["rho1_stderr"]))
    checks += _expect_checks(cfg, pred.quantities)
    return checks, pred, sim, time.time() - t0


# --------------------------------------------------------------------------
# lozenge


def _lozenge_activities(cfg: RunConfig):
    m = cfg.section("model")
    if "rho" in m:
        return lozenge_activities_for_density(cfg.floats(m["rho"]))
    return tuple(cfg.floats(m.get("z", "1 1 1")))


def _lozenge_predict(cfg: RunConfig, perturbed=False) -> Prediction:
    z = _lozenge_activities(cfg)
    m = cfg.section("model")
    cutoff = int(m.get("cutoff", 30))
    model = LozengeModel(*z, resolution=int(m.get("resolution", 256)), radius=max(32, cutoff + 2)).fit()
    rho = model.rho_.copy()
    off = cfg.getfloat("compare", "rho_offset", 0.0) if perturbed else 0.0
    rho = rho + off * np.array([1.0, -0.5, -0.5])
    pp = lozenge_pp(rho)
    grid = _grid(cfg, 2)
    dens = model.diffuse_density(cutoff).on_grid(grid)
    q = {"rho1": rho[0], "rho2": rho[1], "rho3": rho[2], "phi0": lozenge_phi0(*z),
         "peak(0,0)": pp.intensity_at([[0.0, 0.0]])[0],
         "peak(0,1)": pp.intensity_at([[0.0, 1.0]])[0],
         "peak(1,0)": pp.intensity_at([[1.0, 0.0]])[0],
         "peak(1,1)": pp.intensity_at([[1.0, 1.0]])[0]}
    n_sym = int(cfg.get("compare", "symmetry_triples", "0"))
    if n_sym:
        q["symmetry_residual"] = lozenge_symmetry_residual(n_sym, cfg.seed)
    return Prediction(pp, grid, dens, q)


def lozenge_symmetry_residual(n_triples: int, seed: int, resolution: int = 256) -> float:
    """Largest deviation over all symmetry images for random ``(x, y, z)`` triples."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < n_triples:
        z = rng.uniform(0.5, 1.5, 3)
        if not all(z[i] > abs(z[(i + 1) % 3] - z[(i + 2) % 3]) + 0.05 for i in range(3)):
            continue
        x, y = (int(v) for v in rng.integers(-6, 7, 2))
        base = coupling_lozenge(x, y, *z, resolution=resolution)
        for s in LOZENGE_SYMMETRIES:
            xs, ys, zs = s(x, y, z)
            worst = max(worst, abs(coupling_lozenge(xs, ys, *zs, resolution=resolution) - base))
        done += 1
    return worst


def _lozenge_simulate(cfg: RunConfig) -> Simulation:
    z = _lozenge_activities(cfg)
    grid = _grid(cfg, 2)
    L = cfg.getint("simulate", "size", 32)
    sweeps = cfg.getint("simulate", "sweeps", 20000)
    every = cfg.getint("simulate", "snapshot_every", 200)
    R = cfg.getint("simulate", "replicas", 4)
    worms = cfg.getint("simulate", "worms_per_sweep", 1)
    vols = [int(v) for v in cfg.get("simulate", "volumes", f"{L // 4} {L // 2} {L}").split()]
    acc = {W: [] for W in vols}
    fr = []

    def cb(conf, _):
        comb = conf.scatterers()
        fr.append(conf.fractions())
        for W in vols:
            acc[W].append(_block_mean(comb, L, W, grid))

    per_rep = []
    conf = None
    for r in range(R):
        n0 = len(fr)
        conf = sample_lozenge_mcmc(*z, L, L, sweeps, replica_seed(cfg.seed, r),
                                   worms_per_sweep=worms, snapshot_every=every, callback=cb)
        per_rep.append(np.mean(fr[n0:], axis=0))
    grids = [_stack_grid(grid, acc[W], float(W * W) * CELL_AREA) for W in vols]
    per_rep = np.array(per_rep)
    summary = {"size": L, "sweeps": sweeps, "replicas": R, "snapshots": len(fr),
               "fractions_mean": per_rep.mean(0).tolist(),
               "fractions_stderr": (per_rep.std(0, ddof=1) / np.sqrt(R)).tolist() if R > 1 else None}
    return Simulation(grids, summary, conf.scatterers(), grids[-1])


def _lozenge_compare(cfg: RunConfig):
    t0 = time.time()
    pred = _lozenge_predict(cfg, perturbed=True)
    sim = _lozenge_simulate(cfg)
    checks = []
    s = sim.summary
    if s["replicas"] > 1:
        for i in range(3):
            checks.append(abs_check(f"orientation {i + 1} fraction (3 sigma)", s["fractions_mean"][i],
                                    pred.quantities[f"rho{i + 1}"], 3 * s["fractions_stderr"][i]))
    if cfg.getbool("compare", "bragg", False):
        spec, resid = classify_peaks(sim.grids)
        checks += _bragg_checks(sim.grids[0].grid, spec, resid, pred.peaks,
                                cfg.getfloat("compare", "bragg_tol", 0.05))
    if "symmetry_residual" in pred.quantities:
        checks.append(abs_check("coupling symmetry relations", pred.quantities["symmetry_residual"],
                                0.0, 1e-10, f"{cfg.get('compare', 'symmetry_triples')} random triples"))
    checks += _expect_checks(cfg, pred.quantities)
    return checks, pred, sim, time.time() - t0


# --------------------------------------------------------------------------
# Ising


def _ising_tag(p: IsingParams) -> str:
    return f"{p.K1:g}" if p.K1 == p.K2 else f"{p.K1:g}_{p.K2:g}"


def _ising_params(cfg: RunConfig):
    out = []
    for item in cfg.get("model", "K", "0.5").split(";"):
        v = [float(t) for t in item.split()]
        out.append(IsingParams(v[0], v[1] if len(v) > 1 else v[0]))
    return out


def _ising_predict(cfg: RunConfig, perturbed=False) -> Prediction:
    params = _ising_params(cfg)
    w = cfg.complexes(cfg.get("model", "weights", "1 0"))
    off = cfg.getfloat("compare", "rho_offset", 0.0) if perturbed else 0.0
    q = {}
    pp = None
    for p in params:
        m, rho = magnetization(p)
        pp_p = ising_pp(p, w)
        tag = _ising_tag(p)
        q[f"m[{tag}]"] = m
        q[f"rho[{tag}]"] = rho
        q[f"k[{tag}]"] = p.k
        amp = w[0] * (rho + off) + w[1] * (1 - rho - off)
        q[f"bragg[{tag}]"] = abs(amp) ** 2
        q[f"bragg_pm[{tag}]"] = float(ising_pp(p, (1, -1)).intensities[0])
        if pp is None:
            pp = PurePointSpectrum([[0.0, 0.0]], [abs(amp) ** 2], period=np.eye(2)) if off else pp_p
    return Prediction(pp, None, None, q)


def _ising_run(p: IsingParams, cfg: RunConfig, grid, weights_list, seed_offset=0):
    L = cfg.getint("simulate", "size", 64)
    sweeps = cfg.getint("simulate", "sweeps", 2000)
    burn = cfg.getint("simulate", "burn_in", 200)
    every = cfg.getint("simulate", "snapshot_every", 20)
    R = cfg.getint("simulate", "replicas", 2)
    vols = [int(v) for v in cfg.get("simulate", "volumes", f"{L // 4} {L // 2} {L}").split()]
    acc = {(j, W): [] for j in range(len(weights_list)) for W in vols}
    mags = []

    def cb(spins, sweep):
        if sweep <= burn:
            return
        mags.append(float(spins.mean()))
        for j, w in enumerate(weights_list):
            comb = spins_to_comb(spins, w)
            for W in vols:
                acc[(j, W)].append(_block_mean(comb, L, W, grid))

    per_rep = []
    for r in range(R):
        n0 = len(mags)
        sample_ising_spins(p, L, sweeps, replica_seed(cfg.seed + seed_offset, r), True, every, cb)
        per_rep.append(np.mean(mags[n0:]))
    out = []
    for j in range(len(weights_list)):
        out.append([_stack_grid(grid, acc[(j, W)], float(W * W)) for W in vols])
    return out, float(np.mean(per_rep)), {"size": L, "sweeps": sweeps, "replicas": R}


def _ising_simulate(cfg: RunConfig) -> Simulation:
    grid = _grid(cfg, 2)
    w = tuple(cfg.complexes(cfg.get("model", "weights", "1 0")))
    summary = {}
    first = None
    for i, p in enumerate(_ising_params(cfg)):
        grids, mag, s = _ising_run(p, cfg, grid, [w], 7919 * i)
        summary[f"magnetization[{_ising_tag(p)}]"] = mag
        summary.update(s)
        first = first or grids[0]
    return Simulation(first, summary, None, first[-1])


def _ising_compare(cfg: RunConfig):
    t0 = time.time()
    pred = _ising_predict(cfg, perturbed=True)
    grid = _grid(cfg, 2)
    tol_m = cfg.getfloat("compare", "magnetization_tol", 0.02)
    tol_b = cfg.getfloat("compare", "bragg_tol", 0.05)
    pm = cfg.getbool("compare", "pm_weights", False)
    w = tuple(cfg.complexes(cfg.get("model", "weights", "1 0")))
    pts_txt = cfg.get("compare", "points", "0 0; 1 0; 1 1")
    pts = np.array([[float(v) for v in s.split()] for s in pts_txt.split(";")])
    gp = grid.points()
    idx = [int(np.argmin(np.linalg.norm(gp - p, axis=1))) for p in pts]
    checks = []
    summary = {}
    sim = None
    for i, p in enumerate(_ising_params(cfg)):
        tag = _ising_tag(p)
        wl = [w, (1.0, -1.0)] if pm else [w]
        grids, mag, s = _ising_run(p, cfg, grid, wl, 7919 * i)
        summary[f"magnetization[{tag}]"] = mag
        summary.update(s)
        if p.regime == "ordered":
            checks.append(rel_check(f"magnetization {tag}", mag, pred.quantities[f"m[{tag}]"], tol_m))
        spec, resid = classify_peaks(grids[0])
        found = spec.intensity_at(gp)
        labels = resid.labels.ravel()
        expected = pred.quantities[f"bragg[{tag}]"]
        for j, k in zip(idx, pts):
            val = found[j] if labels[j] == "pp" else "not detected"
            ok = labels[j] == "pp" and abs(found[j] - expected) <= tol_b * expected
            checks.append(Check(f"Bragg I({k[0]:g}, {k[1]:g}) {tag}", val, expected, tol_b, ok, "relative"))
        if pm:
            spec2, resid2 = classify_peaks(grids[1])
            lab2 = resid2.labels.ravel()[idx]
            extinct_pred = pred.quantities[f"bragg_pm[{tag}]"] < 1e-12
            extinct_obs = not np.any(lab2 == "pp")
            checks.append(Check(f"+-1 weights extinct at Bragg points {tag}", extinct_obs, extinct_pred, 0,
                                extinct_obs == extinct_pred,
                                "slopes " + ", ".join(f"{v:.3f}" for v in resid2.slopes.ravel()[idx])))
        if sim is None:
            sim = Simulation(grids[0], summary, None, grids[0][-1])
    checks += _expect_checks(cfg, pred.quantities)
    return checks, pred, sim, time.time() - t0


# --------------------------------------------------------------------------
# coupling function, identity, small torus


def _coupling_predict(cfg: RunConfig) -> Prediction:
    z1 = cfg.getfloat("model", "z1", 1.0)
    z2 = cfg.getfloat("model", "z2", 1.0)
    M = cfg.getint("model", "resolution", 1024)
    R = cfg.getint("model", "radius", 24)
    v = domino_coupling_grid(z1, z2, R, M)
    v2 = domino_coupling_grid(z1, z2, R, 2 * M)
    r = np.arange(-R, R + 1)
    X, Y = np.meshgrid(r, r, indexing="ij")
    same = (X - Y) % 2 == 0
    anti = np.max(np.abs(v + v[::-1, ::-1]))
    odd_x = (X % 2 == 1) & (Y % 2 == 0)
    odd_y = (X % 2 == 0) & (Y % 2 == 1)
    q = {
        "bond_h": z1 * abs(coupling_domino(1, 0, z1, z2, M)),
        "bond_v": z2 * abs(coupling_domino(0, 1, z1, z2, M)),
        "antisymmetry": float(anti),
        "parity_zeros": float(np.max(np.abs(v[same]))),
        "real_part_residual": float(np.max(np.abs(v[odd_x].imag))),
        "imag_part_residual": float(np.max(np.abs(v[odd_y].real))),
        "doubling_delta_nn": float(max(
            abs(coupling_domino(1, 0, z1, z2, M) - coupling_domino(1, 0, z1, z2, 2 * M)),
            abs(coupling_domino(0, 1, z1, z2, M) - coupling_domino(0, 1, z1, z2, 2 * M)))),
        "doubling_delta_table": float(np.max(np.abs(v - v2))),
        "ratio(5,0)/(21,0)":
            abs(coupling_domino(5, 0, z1, z2, M) / coupling_domino(21, 0, z1, z2, M)),
    }
    return Prediction(None, None, None, q)


def _coupling_compare(cfg: RunConfig):
    t0 = time.time()
    pred = _coupling_predict(cfg)
    q = pred.quantities
    checks = [
        abs_check("antisymmetry [x,y] + [-x,-y]", q["antisymmetry"], 0.0, 0.0, "exact"),
        abs_check("equal-parity zeros", q["parity_zeros"], 0.0, 0.0, "exact"),
        abs_check("imaginary part on (odd, even)", q["real_part_residual"], 0.0, 0.0, "exact"),
        abs_check("real part on (even, odd)", q["imag_part_residual"], 0.0, 0.0, "exact"),
        abs_check("resolution doubling |delta| of the nearest-neighbour couplings",
                  q["doubling_delta_nn"], 0.0, cfg.getfloat("compare", "doubling_tol", 1e-8),
                  f"table max over radius {cfg.getint('model', 'radius', 24)}: {q['doubling_delta_table']:.2e}"),
    ]
    checks += _expect_checks(cfg, q)
    return checks, pred, None, time.time() - t0


def _identity_compare(cfg: RunConfig):
    t0 = time.time()
    n = cfg.getint("model", "random_specs", 100)
    Nmax = cfg.getint("model", "max_N", 20)
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    count = 0
    for _ in range(n):
        k = int(rng.integers(2, 5))
        u = rng.uniform(0.2, 3.0, k)
        p = rng.dirichlet(np.ones(k))
        spec = RandomTilingSpec1D(list(u), list(p))
        for N in range(0, Nmax + 1):
            count += 1
            try:
                lhs, rhs = mean_bridge_identity(spec, N)
            except AssertionError:
                worst = math.inf
                continue
            worst = max(worst, abs(lhs - rhs) / abs(rhs) if rhs else abs(lhs))
    q = {"worst_relative": worst, "cases": count}
    checks = [abs_check(f"identity over {count} (spec, N) cases, worst relative error", worst, 0.0, 1e-12)]
    checks += _expect_checks(cfg, q)
    return checks, Prediction(None, None, None, q), None, time.time() - t0


def _torus_compare(cfg: RunConfig):
    t0 = time.time()
    z1 = cfg.getfloat("model", "z1", 2.0)
    z2 = cfg.getfloat("model", "z2", 1.0)
    sizes = [int(v) for v in cfg.get("model", "sizes", "4 6 8").split()]
    model = DominoModel(z1, z2).fit()
    inf = np.array([z1 * abs(model.table_[1, 0]), z2 * abs(model.table_[0, 1])])
    checks = []
    # brute force against the transfer matrix on the smallest tori
    for m, n in ((2, 2), (2, 4), (4, 4)):
        w, h, v = enumerate_domino_matchings(m, n, z1, z2)
        T = domino_torus(z1, z2, m, n)
        Z = w.sum()
        dev = max(abs(Z - T.partition) / Z, abs((w * h).sum() / Z - T.bond_probabilities[0]),
                  abs((w * v).sum() / Z - T.bond_probabilities[1]))
        checks.append(abs_check(f"enumeration vs transfer matrix {m}x{n}", dev, 0.0, 1e-12,
                                f"{len(w)} matchings"))
    w1, _, _ = enumerate_domino_matchings(4, 4)
    checks.append(abs_check("equal activities: weight sum = matching count (4x4)", float(w1.sum()),
                            float(len(w1)), 0.0))
    drift = []
    for m in sizes:
        T = domino_torus(z1, z2, m, m)
        drift.append(float(np.max(np.abs(T.bond_probabilities - inf))))
    mono = all(b < a for a, b in zip(drift, drift[1:]))
    checks.append(bool_check("finite-size drift decreases with m",
                             mono, "drift " + ", ".join(f"m={m}: {d:.3e}" for m, d in zip(sizes, drift))))
    for m in sizes:
        r = ledermann_check(z1, z2, m, m)
        checks.append(Check(f"free vs periodic eigenvalue counts {m}x{m}", r["max_count_difference"],
                            r["rank"], 0, r["within_rank"],
                            f"relative {r['relative_discrepancy']:.3f} vs sqrt(N)/N {r['sqrt_scale']:.3f}"))
    q = {f"drift[{m}]": d for m, d in zip(sizes, drift)}
    q["bond_h_inf"], q["bond_v_inf"] = float(inf[0]), float(inf[1])
    checks += _expect_checks(cfg, q)
    return checks, Prediction(None, None, None, q), None, time.time() - t0


# --------------------------------------------------------------------------
# registry and drivers


def _no_sim(cfg):
    raise ValidationError(f"family {cfg.family!r} has nothing to simulate")


FAMILIES = {
    "bernoulli": (_chain_predict, _chain_simulate, _chain_compare),
    "markov": (_chain_predict, _chain_simulate, _chain_compare),
    "rt1d": (_rt_predict, _rt_simulate, _rt_compare),
    "product": (_product_predict, _product_simulate, _product_compare),
    "domino": (_domino_predict, _domino_simulate, _domino_compare),
    "lozenge": (_lozenge_predict, _lozenge_simulate, _lozenge_compare),
    "ising": (_ising_predict, _ising_simulate, _ising_compare),
    "coupling": (_coupling_predict, _no_sim, _coupling_compare),
    "identity": (lambda cfg: _identity_compare(cfg)[1], _no_sim, _identity_compare),
    "torus": (lambda cfg: _torus_compare(cfg)[1], _no_sim, _torus_compare),
}


def _family(cfg: RunConfig):
    if cfg.family not in FAMILIES:
        raise ValidationError(f"unknown family {cfg.family!r}; choose from {sorted(FAMILIES)}")
    return FAMILIES[cfg.family]


def run_predict(cfg: RunConfig) -> Prediction:
    return _family(cfg)[0](cfg)


def run_simulate(cfg: RunConfig) -> Simulation:
    return _family(cfg)[1](cfg)


def run_compare(cfg: RunConfig):
    """``(checks, prediction, simulation, seconds)``; a runtime limit adds one check."""
    checks, pred, sim, secs = _family(cfg)[2](cfg)
    limit = cfg.getfloat("compare", "runtime_limit", 0.0)
    if limit > 0:
        checks.append(Check("runtime seconds", secs, limit, 0, secs <= limit, "upper bound"))
    return checks, pred, sim, secs
