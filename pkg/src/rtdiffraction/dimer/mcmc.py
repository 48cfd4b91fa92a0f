"""Seeded Markov chain Monte Carlo for domino and lozenge tilings on a torus."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import _rng
from .._validation import ValidationError, check_int, check_positive_scalar
from ..spectral import WeightedDiracComb
from ._kernels import domino_sweeps, lozenge_sweeps
from .coupling import check_triangle
from .lozenge import CELL_AREA, TILE_OFFSETS

__all__ = [
    "DimerConfiguration",
    "default_burn_in",
    "sample_domino_mcmc",
    "sample_lozenge_mcmc",
    "empirical_joint_occupation",
]

_DX = np.array([1, 0, -1, 0])
_DY = np.array([0, 1, 0, -1])


@dataclass
class DimerConfiguration:
    """Perfect matching on an ``m x n`` torus.

    ``state`` is the domino partner direction per site (0: +x, 1: +y, 2: -x,
    3: -y) or the lozenge orientation index (0, 1, 2) per up-triangle.
    """

    model: str
    state: np.ndarray
    activities: tuple

    @property
    def shape(self) -> tuple:
        return self.state.shape

    def is_valid(self) -> bool:
        """Every site matched exactly once."""
        s = self.state
        m, n = s.shape
        if self.model == "domino":
            X, Y = np.indices(s.shape)
            px = (X + _DX[s]) % m
            py = (Y + _DY[s]) % n
            return bool(np.all(s[px, py] == (s + 2) % 4))
        # each R(c) has exactly one partner among L(c+e1) (type 0), L(c+e2) (type 1), L(c) (type 2)
        hits = (
            (np.roll(s, -1, axis=0) == 0).astype(int)
            + (np.roll(s, -1, axis=1) == 1)
            + (s == 2)
        )
        return bool(np.all(hits == 1) and np.all((s >= 0) & (s <= 2)))

    def fractions(self) -> np.ndarray:
        """Orientation fractions (tile counts over the number of tiles)."""
        if self.model == "domino":
            h = np.count_nonzero(self.state == 0)
            v = np.count_nonzero(self.state == 1)
            return np.array([h, v]) / (h + v)
        return np.bincount(self.state.ravel(), minlength=3) / self.state.size

    def tiles(self):
        """``(centres, orientation)`` of every tile; orientations start at 1."""
        s = self.state
        if self.model == "domino":
            X, Y = np.nonzero((s == 0) | (s == 1))
            o = s[X, Y]
            c = np.stack([X + 0.5 * (o == 0), Y + 0.5 * (o == 1)], 1).astype(float)
            return c, o + 1
        X, Y = np.indices(s.shape)
        c = np.stack([X.ravel(), Y.ravel()], 1) + TILE_OFFSETS[s.ravel()]
        return c, s.ravel() + 1

    def scatterers(self, weights=(1.0, 1.0, 1.0)) -> WeightedDiracComb:
        """Comb of tile centres with per-orientation scattering strengths.

        Lozenge centres are in lattice coordinates with the matching volume
        factor.
        """
        c, o = self.tiles()
        w = np.asarray(weights, complex)[o - 1]
        m, n = self.shape
        vf = 1.0 if self.model == "domino" else CELL_AREA
        return WeightedDiracComb(c, w, ((0.0, 0.0), (float(m), float(n))), vf, check=False)


def default_burn_in(m: int, n: int) -> int:
    """Sweeps covering ``20 m n log(m n)`` proposed local moves."""
    return int(math.ceil(20 * math.log(m * n)))


def _torus(m, n):
    m = check_int(m, "m", minimum=2, even=True)
    n = check_int(n, "n", minimum=2, even=True)
    return m, n


def _run(kernel, state, params, sweeps, burn_in, worms, seed, snapshot_every, callback, model, act):
    sweeps = check_int(sweeps, "sweeps", minimum=0)
    if sweeps < burn_in:
        raise ValidationError(f"sweeps ({sweeps}) must be at least the burn-in ({burn_in})")
    s = _rng.make_state(seed)
    kernel(state, *params, burn_in, worms, s)
    done = burn_in
    if callback is not None and snapshot_every:
        every = check_int(snapshot_every, "snapshot_every", minimum=1)
        while done + every <= sweeps:
            kernel(state, *params, every, worms, s)
            done += every
            callback(DimerConfiguration(model, state.copy(), act), done)
    if sweeps > done:
        kernel(state, *params, sweeps - done, worms, s)
    return DimerConfiguration(model, state, act)


def sample_domino_mcmc(z1, z2, m, n, sweeps, seed, burn_in=None, worms_per_sweep=0,
                       snapshot_every=None, callback=None) -> DimerConfiguration:
    """Domino tiling of the ``m x n`` torus after ``sweeps`` sweeps.

    One sweep is ``m n`` plaquette proposals (Metropolis, acceptance
    ``(z2/z1)^2`` for a horizontal pair turning vertical) followed by
    ``worms_per_sweep`` closed worms. The chain starts from a horizontal
    brick configuration, which has zero winding; plaquette moves never
    leave that sector. Worms (off by default) also change the winding, and
    on a small torus the tilt of nonzero sectors leaves ``W^2 / L^2``
    artefacts in the periodogram at ``(1/2, 1/2)``. With ``callback`` set, ``callback(config, sweep)``
    receives a copy every ``snapshot_every`` sweeps after the burn-in.
    """
    z1 = check_positive_scalar(z1, "z1")
    z2 = check_positive_scalar(z2, "z2")
    m, n = _torus(m, n)
    burn = default_burn_in(m, n) if burn_in is None else check_int(burn_in, "burn_in", minimum=0)
    d = np.zeros((m, n), np.int8)
    d[1::2, :] = 2
    return _run(domino_sweeps, d, (z1, z2), sweeps, burn, int(worms_per_sweep), seed,
                snapshot_every, callback, "domino", (z1, z2))


def sample_lozenge_mcmc(z1, z2, z3, m, n, sweeps, seed, burn_in=None, worms_per_sweep=1,
                        snapshot_every=None, callback=None) -> DimerConfiguration:
    """Lozenge tiling of the ``m x n`` rhombic torus (orientation-3 start).

    Hexagon rotations preserve all three tile counts and are accepted with
    probability one; worms change the counts with heat-bath head steps.
    """
    z = check_triangle(z1, z2, z3)
    m, n = _torus(m, n)
    burn = default_burn_in(m, n) if burn_in is None else check_int(burn_in, "burn_in", minimum=0)
    t = np.full((m, n), 2, np.int8)
    return _run(lozenge_sweeps, t, tuple(z), sweeps, burn, int(worms_per_sweep), seed,
                snapshot_every, callback, "lozenge", tuple(z))


def empirical_joint_occupation(configs, i: int, j: int, d) -> tuple:
    """Replica mean and standard error of ``1_i(x) 1_j(x + d)`` averaged over sites.

    ``d`` are integer site (domino) or cell (lozenge) differences, with the
    same conventions as the analytic joint occupations.
    """
    configs = list(configs)
    if not configs:
        raise ValidationError("need at least one configuration")
    d = np.atleast_2d(np.asarray(d, int))
    vals = np.empty((len(configs), d.shape[0]))
    for a, cfg in enumerate(configs):
        s = cfg.state
        code_i = (i - 1) if cfg.model == "lozenge" else {1: 0, 2: 1}[i]
        code_j = (j - 1) if cfg.model == "lozenge" else {1: 0, 2: 1}[j]
        A = (s == code_i).astype(float)
        B = (s == code_j).astype(float)
        for b, (dx, dy) in enumerate(d):
            vals[a, b] = np.mean(A * np.roll(B, (-dx, -dy), axis=(0, 1)))
    err = vals.std(axis=0, ddof=1) / np.sqrt(len(configs)) if len(configs) > 1 else np.zeros(d.shape[0])
    return vals.mean(axis=0), err
