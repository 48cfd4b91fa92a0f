"""Measure representations and finite-volume diffraction estimators.

Fourier convention throughout: ``S(k) = sum_x w(x) exp(-2 pi i k.x)`` and the
periodogram ``I(k) = |S(k)|^2 / vol(window)`` with an axis-aligned box window.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator

from ._validation import ValidationError

__all__ = [
    "KGrid",
    "WeightedDiracComb",
    "AutocorrelationTable",
    "PurePointSpectrum",
    "AcDensity",
    "IntensityGrid",
    "DensityReport",
    "empirical_autocorrelation",
    "periodogram",
    "prefix_periodograms",
    "structure_factor",
    "average_grids",
    "classify_peaks",
    "compare_density",
    "PeriodogramEstimator",
    "PeakClassifier",
]


# --------------------------------------------------------------------------
# k-grids and combs


@dataclass(frozen=True)
class KGrid:
    """Regular grid of wave vectors ``origin + j * step``, ``0 <= j < counts``."""

    origin: tuple
    step: tuple
    counts: tuple

    def __post_init__(self):
        o = tuple(float(v) for v in np.atleast_1d(self.origin))
        s = tuple(float(v) for v in np.atleast_1d(self.step))
        c = tuple(int(v) for v in np.atleast_1d(self.counts))
        if not (len(o) == len(s) == len(c)) or len(o) not in (1, 2):
            raise ValidationError("KGrid needs matching 1D or 2D origin/step/counts")
        if any(v <= 0 for v in s) or any(v < 1 for v in c):
            raise ValidationError("KGrid steps must be positive and counts >= 1")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "step", s)
        object.__setattr__(self, "counts", c)

    @classmethod
    def span(cls, lo, hi, step):
        """Grid from ``lo`` (inclusive) to ``hi`` (exclusive) with ``step``."""
        lo = np.atleast_1d(np.asarray(lo, float))
        hi = np.atleast_1d(np.asarray(hi, float))
        step = np.broadcast_to(np.atleast_1d(np.asarray(step, float)), lo.shape)
        counts = np.maximum(1, np.round((hi - lo) / step).astype(int))
        return cls(tuple(lo), tuple(step), tuple(counts))

    @property
    def dimension(self) -> int:
        return len(self.origin)

    @property
    def shape(self) -> tuple:
        return self.counts

    def axes(self) -> list:
        return [o + s * np.arange(c) for o, s, c in zip(self.origin, self.step, self.counts)]

    def points(self) -> np.ndarray:
        """All grid points as an ``(M, D)`` array in C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


class WeightedDiracComb:
    """Finite weighted point set inside an axis-aligned window.

    Parameters
    ----------
    points : array_like, shape (N,) or (N, D)
        Scatterer positions.
    weights : array_like, shape (N,), optional
        Complex scattering strengths, unit weights by default.
    window : tuple of array_like
        ``(lo, hi)`` corners of the box containing all points.
    volume_factor : float
        Jacobian converting window coordinates to physical volume, used when
        points are given in oblique lattice coordinates.
    check : bool
        Verify pairwise distinctness (costs a sort).
    """

    def __init__(self, points, weights=None, window=None, volume_factor=1.0, check=True):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] not in (1, 2):
            raise ValidationError("points must be an (N,) or (N, D) array with D in {1, 2}")
        n = pts.shape[0]
        if weights is None:
            w = np.ones(n, dtype=complex)
        else:
            w = np.asarray(weights, dtype=complex).ravel()
        if w.shape[0] != n:
            raise ValidationError("points and weights must have equal length")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        if window is None:
            if n == 0:
                raise ValidationError("an empty comb needs an explicit window")
            lo, hi = pts.min(axis=0), pts.max(axis=0) + 1.0
        else:
            lo = np.broadcast_to(np.asarray(window[0], float), (pts.shape[1],)).copy()
            hi = np.broadcast_to(np.asarray(window[1], float), (pts.shape[1],)).copy()
        if np.any(hi <= lo):
            raise ValidationError("window must have positive extent")
        if n and (np.any(pts < lo - 1e-9) or np.any(pts > hi + 1e-9)):
            raise ValidationError("every point must lie inside the window")
        if check and n > 1:
            order = np.lexsort(pts.T[::-1])
            s = pts[order]
            if np.any(np.all(np.abs(np.diff(s, axis=0)) < 1e-12, axis=1)):
                raise ValidationError("points must be pairwise distinct")
        self.points = pts
        self.weights = w
        self.window = (lo, hi)
        self.volume_factor = float(volume_factor)

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def volume(self) -> float:
        lo, hi = self.window
        return float(np.prod(hi - lo)) * self.volume_factor

    def __len__(self):
        return self.points.shape[0]

    def crop(self, lo, hi) -> "WeightedDiracComb":
        """Restrict to the half-open box ``[lo, hi)``."""
        lo = np.broadcast_to(np.asarray(lo, float), (self.dimension,))
        hi = np.broadcast_to(np.asarray(hi, float), (self.dimension,))
        keep = np.all((self.points >= lo) & (self.points < hi), axis=1)
        return WeightedDiracComb(
            self.points[keep], self.weights[keep], (lo, hi), self.volume_factor, check=False
        )

    def with_weights(self, weights) -> "WeightedDiracComb":
        return WeightedDiracComb(self.points, weights, self.window, self.volume_factor, check=False)


# --------------------------------------------------------------------------
# autocorrelation


class AutocorrelationTable:
    """Autocorrelation coefficients ``nu(z)`` keyed by difference vectors."""

    def __init__(self, dimension: int, entries: dict, radius: float):
        self.dimension = int(dimension)
        self.entries = {tuple(float(c) for c in k): complex(v) for k, v in entries.items()}
        self.radius = float(radius)

    @staticmethod
    def _key(z):
        return tuple(float(c) for c in np.atleast_1d(z))

    def __getitem__(self, z) -> complex:
        return self.entries[self._key(z)]

    def __contains__(self, z):
        return self._key(z) in self.entries

    def keys(self):
        return self.entries.keys()

    def is_hermitian(self, atol=0.0) -> bool:
        for k, v in self.entries.items():
            mk = tuple(-c + 0.0 for c in k)
            if mk in self.entries and abs(self.entries[mk] - np.conj(v)) > atol:
                return False
        return True


def _match_index(pts, targets, tol):
    """Index of the point within ``tol`` of each target, -1 if none."""
    if pts.shape[1] == 1:
        x = pts[:, 0]
        order = np.argsort(x)
        xs = x[order]
        t = targets[:, 0]
        j = np.clip(np.searchsorted(xs, t - tol), 0, len(xs) - 1)
        hit = np.abs(xs[j] - t) <= tol
        return np.where(hit, order[j], -1)
    q = np.round(pts / tol).astype(np.int64)
    qt = np.round(targets / tol).astype(np.int64)
    lo = q.min(axis=0)
    width = int(q[:, 1].max() - lo[1]) + 3
    rows = int(q[:, 0].max() - lo[0]) + 3
    if rows * width < 2**62:
        key = (q[:, 0] - lo[0]) * width + (q[:, 1] - lo[1])
        ok = (qt[:, 1] >= lo[1]) & (qt[:, 1] - lo[1] < width)
        ok &= (qt[:, 0] >= lo[0]) & (qt[:, 0] - lo[0] < rows)
        tkey = np.where(ok, (qt[:, 0] - lo[0]) * width + (qt[:, 1] - lo[1]), -1)
        order = np.argsort(key)
        ks = key[order]
        j = np.clip(np.searchsorted(ks, tkey), 0, len(ks) - 1)
        return np.where(ok & (ks[j] == tkey), order[j], -1)
    lookup = {tuple(r): i for i, r in enumerate(q)}
    return np.array([lookup.get(tuple(r), -1) for r in qt])


def _canonical(z):
    for c in z:
        if c > 0:
            return True
        if c < 0:
            return False
    return True


def empirical_autocorrelation(
    comb: WeightedDiracComb, radius: float, differences, tol: float = 1e-6
) -> AutocorrelationTable:
    """Finite-window autocorrelation coefficients.

    ``nu(z) = vol(B_R)^-1 sum_{x - y = z; x, y in B_R} w(x) conj(w(y))`` with
    ``B_R`` the cube of half-width ``radius`` centred on the window. Both
    ``z`` and ``-z`` are computed from the same pair sum, so the table is
    exactly Hermitian.
    """
    if len(comb) == 0:
        raise ValidationError("empty comb")
    lo, hi = comb.window
    centre = 0.5 * (lo + hi)
    if radius <= 0 or np.any(radius > 0.5 * (hi - lo) + 1e-12):
        raise ValidationError("radius must be positive and at most the window inradius")
    inside = np.all(np.abs(comb.points - centre) <= radius, axis=1)
    pts = comb.points[inside]
    w = comb.weights[inside]
    vol = (2.0 * radius) ** comb.dimension * comb.volume_factor
    entries = {}
    for z in differences:
        z = np.atleast_1d(np.asarray(z, float))
        if z.shape[0] != comb.dimension:
            raise ValidationError("difference vector has the wrong dimension")
        zc = z if _canonical(z) else -z
        key = tuple(zc)
        if key in entries:
            continue
        total = 0j
        if len(pts):
            j = _match_index(pts, pts - zc, tol)
            hit = j >= 0
            total = np.sum(w[hit] * np.conj(w[j[hit]]))
        val = total / vol
        entries[key] = val
        entries[tuple(-c + 0.0 for c in zc)] = np.conj(val)
    return AutocorrelationTable(comb.dimension, entries, radius)


# --------------------------------------------------------------------------
# periodogram


def _lattice_scale(x, max_scale=64, tol=1e-9):
    """Smallest integer ``q`` with ``q * x`` integral, or ``None``."""
    for q in range(1, max_scale + 1):
        qx = q * x
        if np.all(np.abs(qx - np.round(qx)) < tol * max(1.0, q)):
            return q
    return None


def _fft_plan(x, origin, step, count):
    """FFT layout ``(n_fft, index, offsets, shift)`` along one axis, or None."""
    q = _lattice_scale(x)
    if q is None:
        return None
    nf0 = q / step
    j0 = origin / step
    if abs(nf0 - round(nf0)) > 1e-9 or abs(j0 - round(j0)) > 1e-9:
        return None
    nf0 = int(round(nf0))
    n = np.round(q * x).astype(np.int64)
    nmin = int(n.min())
    span = int(n.max() - nmin) + 1
    c = max(1, -(-span // nf0))
    nf = nf0 * c
    idx = ((int(round(j0)) + np.arange(count)) * c) % nf
    k = origin + step * np.arange(count)
    shift = np.exp(-2j * np.pi * k * nmin / q)
    return nf, idx, n - nmin, shift


def structure_factor(comb: WeightedDiracComb, grid: KGrid) -> np.ndarray:
    """Complex ``S(k) = sum_x w(x) exp(-2 pi i k.x)`` on ``grid``."""
    if comb.dimension != grid.dimension:
        raise ValidationError("comb and grid dimensions differ")
    pts, w = comb.points, comb.weights
    if len(comb) == 0:
        return np.zeros(grid.shape, dtype=complex)
    plans = [
        _fft_plan(pts[:, a], grid.origin[a], grid.step[a], grid.counts[a])
        for a in range(comb.dimension)
    ]
    if all(p is not None for p in plans):
        shape = tuple(p[0] for p in plans)
        arr = np.zeros(shape, dtype=complex)
        np.add.at(arr, tuple(p[2] for p in plans), w)
        F = np.fft.fftn(arr)[np.ix_(*[p[1] for p in plans])]
        for a, p in enumerate(plans):
            sh = [1] * comb.dimension
            sh[a] = -1
            F = F * p[3].reshape(sh)
        return F
    return _direct_structure_factor(pts, w, grid)


def _direct_structure_factor(pts, w, grid, chunk=4096):
    axes = grid.axes()
    if grid.dimension == 1:
        k = axes[0]
        out = np.zeros(k.size, dtype=complex)
        for s in range(0, pts.shape[0], chunk):
            x = pts[s:s + chunk, 0]
            out += np.exp(-2j * np.pi * np.outer(k, x)) @ w[s:s + chunk]
        return out
    k1, k2 = axes
    out = np.zeros((k1.size, k2.size), dtype=complex)
    for s in range(0, pts.shape[0], chunk):
        x = pts[s:s + chunk]
        a = np.exp(-2j * np.pi * np.outer(k1, x[:, 0])) * w[s:s + chunk]
        b = np.exp(-2j * np.pi * np.outer(x[:, 1], k2))
        out += a @ b
    return out


def periodogram(comb: WeightedDiracComb, grid: KGrid) -> "IntensityGrid":
    """Finite-volume intensity ``|S(k)|^2 / vol`` on ``grid``.

    Uses an FFT whenever the points sit on a scaled integer lattice and the
    grid is commensurate with it, otherwise a direct sum.
    """
    if len(comb) == 0:
        raise ValidationError("empty comb")
    S = structure_factor(comb, grid)
    return IntensityGrid(grid, np.abs(S) ** 2 / comb.volume, comb.volume, 1)


@njit(cache=True)
def _prefix_sf_kernel(x, w, k0, dk, nk, breaks):
    out = np.zeros((breaks.size, nk), dtype=np.complex128)
    S = np.zeros(nk, dtype=np.complex128)
    b = 0
    for i in range(x.size):
        while b < breaks.size and breaks[b] == i:
            out[b] = S
            b += 1
        step = np.exp(-2j * np.pi * dk * x[i])
        val = w[i] * np.exp(-2j * np.pi * k0 * x[i])
        for j in range(nk):
            if j % 512 == 0:
                # refresh to keep the recurrence error at rounding level
                val = w[i] * np.exp(-2j * np.pi * (k0 + j * dk) * x[i])
            S[j] += val
            val *= step
    while b < breaks.size:
        out[b] = S
        b += 1
    return out


def prefix_periodograms(comb: WeightedDiracComb, grid: KGrid, lengths) -> list:
    """Periodograms of the nested 1D windows ``[lo, lo + L)`` for each ``L``.

    One pass over the points in increasing order accumulates the structure
    factor by a phase recurrence, so all windows cost about as much as the
    largest one. Intended for point sets off any lattice where the FFT path
    of :func:`periodogram` does not apply.
    """
    if comb.dimension != 1 or grid.dimension != 1:
        raise ValidationError("prefix periodograms are one-dimensional")
    lo = float(comb.window[0][0])
    lengths = np.sort(np.asarray(lengths, float))
    if lengths[-1] > float(comb.window[1][0]) - lo + 1e-9:
        raise ValidationError("window longer than the comb")
    order = np.argsort(comb.points[:, 0], kind="stable")
    x = comb.points[order, 0]
    w = comb.weights[order]
    breaks = np.searchsorted(x, lo + lengths, side="left").astype(np.int64)
    S = _prefix_sf_kernel(x, w, grid.origin[0], grid.step[0], grid.counts[0], breaks)
    vf = comb.volume_factor
    return [IntensityGrid(grid, np.abs(s) ** 2 / (L * vf), L * vf, 1) for s, L in zip(S, lengths)]


# --------------------------------------------------------------------------
# spectra


class PurePointSpectrum:
    """Bragg peaks given on a fundamental domain plus an optional period lattice.

    Parameters
    ----------
    positions : array_like, shape (P, D)
        Peak positions (one representative per orbit of the period lattice).
    intensities : array_like, shape (P,)
        Nonnegative intensities.
    period : array_like, shape (D, D), optional
        Rows span the lattice of periods; ``None`` means the list is complete.
    """

    def __init__(self, positions, intensities, period=None):
        pos = np.asarray(positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        inten = np.asarray(intensities, dtype=float).ravel()
        if pos.shape[0] != inten.shape[0]:
            raise ValidationError("positions and intensities must have equal length")
        if np.any(inten < 0):
            raise ValidationError("Bragg intensities must be nonnegative")
        self.positions = pos
        self.intensities = inten
        self.period = None if period is None else np.atleast_2d(np.asarray(period, float))

    @property
    def dimension(self) -> int:
        return self.positions.shape[1]

    def _reduce(self, k):
        if self.period is None:
            return k
        frac = np.linalg.solve(self.period.T, k.T).T
        return k - np.floor(frac + 1e-9) @ self.period

    def intensity_at(self, k, atol=1e-9) -> np.ndarray:
        """Intensity at each row of ``k`` (0 where no peak sits)."""
        k = np.asarray(k, float).reshape(-1, self.dimension)
        out = np.zeros(k.shape[0])
        if self.period is None:
            for p, I in zip(self.positions, self.intensities):
                out[np.all(np.abs(k - p) < atol, axis=1)] += I
            return out
        inv = np.linalg.inv(self.period)
        fk = k @ inv
        for p, I in zip(self.positions, self.intensities):
            d = fk - p @ inv
            d -= np.round(d)
            out[np.all(np.abs(d @ self.period) < atol, axis=1)] += I
        return out

    def peaks_in_box(self, lo, hi):
        """All peaks with ``lo <= k <= hi`` as ``(positions, intensities)``."""
        lo = np.broadcast_to(np.asarray(lo, float), (self.dimension,))
        hi = np.broadcast_to(np.asarray(hi, float), (self.dimension,))
        if self.period is None:
            keep = np.all((self.positions >= lo - 1e-12) & (self.positions <= hi + 1e-12), axis=1)
            return self.positions[keep], self.intensities[keep]
        corners = np.array(list(itertools.product(*zip(lo, hi))))
        base = self._reduce(self.positions)
        frac_c = np.linalg.solve(self.period.T, corners.T).T
        nmin = np.floor(frac_c.min(axis=0)) - 1
        nmax = np.ceil(frac_c.max(axis=0)) + 1
        ranges = [np.arange(a, b + 1) for a, b in zip(nmin, nmax)]
        shifts = np.array(list(itertools.product(*ranges)), float) @ self.period
        pos, inten = [], []
        for p, I in zip(base, self.intensities):
            cand = p + shifts
            keep = np.all((cand >= lo - 1e-12) & (cand <= hi + 1e-12), axis=1)
            pos.append(cand[keep])
            inten.append(np.full(keep.sum(), I))
        pos = np.concatenate(pos) if pos else np.zeros((0, self.dimension))
        inten = np.concatenate(inten) if inten else np.zeros(0)
        order = np.lexsort(pos.T[::-1])
        return pos[order], inten[order]

    def to_json(self, lo=None, hi=None) -> str:
        """JSON array of ``{"k": [...], "intensity": value}`` objects."""
        if lo is None:
            pos, inten = self.positions, self.intensities
        else:
            pos, inten = self.peaks_in_box(lo, hi)
        return json.dumps(
            [{"k": [float(c) for c in p], "intensity": float(I)} for p, I in zip(pos, inten)],
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "PurePointSpectrum":
        data = json.loads(text)
        if not data:
            return cls(np.zeros((0, 1)), [])
        return cls([d["k"] for d in data], [d["intensity"] for d in data])


class AcDensity:
    """Periodic nonnegative density ``g(k)`` for the absolutely continuous part.

    Parameters
    ----------
    evaluator : callable
        Maps an ``(M,)`` (1D) or ``(M, 2)`` array of wave vectors to values.
    period : array_like
        Rows span the lattice of periods.
    """

    def __init__(self, evaluator: Callable, period, dimension=None):
        self._f = evaluator
        period = np.asarray(period, dtype=float)
        self.period = period.reshape(-1, period.shape[-1])
        self.dimension = self.period.shape[1] if dimension is None else int(dimension)
        self._cache: dict = {}

    def __call__(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.dimension == 1:
            return np.asarray(self._f(k.ravel()), dtype=float).reshape(k.shape[:1] if k.ndim else ())
        k2 = np.atleast_2d(k).reshape(-1, 2)
        return np.asarray(self._f(k2), dtype=float)

    def on_grid(self, grid: KGrid) -> np.ndarray:
        key = (grid.origin, grid.step, grid.counts)
        if key not in self._cache:
            pts = grid.points()
            vals = self(pts[:, 0] if self.dimension == 1 else pts)
            self._cache[key] = np.asarray(vals).reshape(grid.shape)
        return self._cache[key]

    def periodicity_residual(self, k) -> float:
        """Max relative change of the density under each period vector."""
        k = np.asarray(k, float)
        base = self(k)
        scale = max(np.max(np.abs(base)), 1e-300)
        worst = 0.0
        for b in self.period:
            shifted = self(k + (b[0] if self.dimension == 1 else b))
            worst = max(worst, float(np.max(np.abs(shifted - base)) / scale))
        return worst


@dataclass
class IntensityGrid:
    """Sampled intensity on a :class:`KGrid`."""

    grid: KGrid
    values: np.ndarray
    volume: float
    n_samples: int = 1
    stderr: np.ndarray | None = None
    slopes: np.ndarray | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if np.any(self.values < 0):
            raise ValidationError("intensities must be nonnegative")

    def points(self) -> np.ndarray:
        return self.grid.points()

    def binned(self, n_bins: int, mask=None):
        """Average a 1D grid into ``n_bins`` contiguous bins.

        Returns ``(centres, means, stderrs, members)``; ``members`` is the list
        of index arrays used per bin, masked points excluded.
        """
        if self.grid.dimension != 1:
            raise ValidationError("binning is defined for 1D grids")
        k = self.grid.axes()[0]
        keep = np.ones(k.size, bool) if mask is None else ~np.asarray(mask, bool)
        edges = np.linspace(k[0], k[-1] + self.grid.step[0], n_bins + 1)
        which = np.clip(np.searchsorted(edges, k, side="right") - 1, 0, n_bins - 1)
        centres, means, errs, members = [], [], [], []
        for b in range(n_bins):
            idx = np.nonzero((which == b) & keep)[0]
            if idx.size == 0:
                continue
            v = self.values[idx]
            centres.append(0.5 * (edges[b] + edges[b + 1]))
            means.append(v.mean())
            if self.stderr is not None:
                errs.append(np.sqrt(np.sum(self.stderr[idx] ** 2)) / idx.size)
            else:
                errs.append(np.nan)
            members.append(idx)
        return np.array(centres), np.array(means), np.array(errs), members


def average_grids(grids: Sequence[IntensityGrid]) -> IntensityGrid:
    """Replica average with standard error ``std / sqrt(n)``."""
    grids = list(grids)
    if not grids:
        raise ValidationError("nothing to average")
    g0 = grids[0].grid
    for g in grids[1:]:
        if g.grid != g0:
            raise ValidationError("grids must share the k-grid")
    stack = np.stack([g.values for g in grids])
    n = stack.shape[0]
    err = stack.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(stack[0])
    vol = float(np.mean([g.volume for g in grids]))
    return IntensityGrid(g0, stack.mean(axis=0), vol, sum(g.n_samples for g in grids), err)


# --------------------------------------------------------------------------
# classification and comparison


def classify_peaks(
    grids: Sequence[IntensityGrid],
    bragg_slope: float = 0.9,
    ac_slope: float = 0.1,
    floor: float = 1e-12,
):
    """Separate Bragg peaks from diffuse scattering by volume scaling.

    For every grid point fit ``log I`` against ``log vol``. A slope of at
    least ``bragg_slope`` marks a Bragg peak whose intensity is the
    coefficient ``A`` of a least-squares fit ``I = A vol + B``; slopes up to
    ``ac_slope`` mark absolutely continuous background, anything in between
    is labelled ``"sc"`` (a singular continuous candidate).

    Returns
    -------
    spectrum : PurePointSpectrum
        Detected peaks (no period lattice).
    residual : IntensityGrid
        Largest-volume grid with Bragg points replaced by the fitted ``B``;
        carries per-point ``slopes`` and ``labels`` (``"pp"``, ``"sc"``,
        ``"ac"``).
    """
    grids = sorted(grids, key=lambda g: g.volume)
    if len(grids) < 3:
        raise ValidationError("classification needs at least three volumes")
    g0 = grids[0].grid
    for g in grids[1:]:
        if g.grid != g0:
            raise ValidationError("grids must share the k-grid")
    vols = np.array([g.volume for g in grids])
    if np.any(np.diff(vols) <= 0):
        raise ValidationError("volumes must be strictly increasing")
    I = np.stack([g.values.ravel() for g in grids])
    lv = np.log(vols)
    lvc = lv - lv.mean()
    live = np.all(I > floor, axis=0)
    slopes = np.full(I.shape[1], np.nan)
    li = np.log(np.where(live, I, 1.0))
    slopes[live] = (lvc @ (li[:, live] - li[:, live].mean(axis=0))) / (lvc @ lvc)
    labels = np.full(I.shape[1], "ac", dtype="<U2")
    labels[live & (slopes >= bragg_slope)] = "pp"
    labels[live & (slopes > ac_slope) & (slopes < bragg_slope)] = "sc"
    X = np.stack([vols, np.ones_like(vols)], axis=1)
    coef, *_ = np.linalg.lstsq(X, I, rcond=None)
    A, B = coef
    pp = labels == "pp"
    pts = g0.points()
    spectrum = PurePointSpectrum(pts[pp], np.maximum(A[pp], 0.0))
    resid_vals = grids[-1].values.ravel().copy()
    resid_vals[pp] = np.maximum(B[pp], 0.0)
    stderr = grids[-1].stderr
    residual = IntensityGrid(
        g0,
        resid_vals,
        grids[-1].volume,
        grids[-1].n_samples,
        None if stderr is None else stderr.copy(),
        slopes.reshape(g0.shape),
        labels.reshape(g0.shape),
    )
    return spectrum, residual


@dataclass
class DensityReport:
    """Deviation summary of an empirical grid against an analytic density."""

    max_rel: float
    mean_rel: float
    chi2: float
    n_points: int
    details: dict = field(default_factory=dict)

    def passes(self, mean_tol=None, max_tol=None) -> bool:
        ok = True
        if mean_tol is not None:
            ok &= self.mean_rel <= mean_tol
        if max_tol is not None:
            ok &= self.max_rel <= max_tol
        return bool(ok)

    def as_dict(self) -> dict:
        return {
            "max_rel": self.max_rel,
            "mean_rel": self.mean_rel,
            "chi2": self.chi2,
            "n_points": self.n_points,
            **self.details,
        }


def _peak_mask(grid: KGrid, peaks: PurePointSpectrum | None, radius: float):
    pts = grid.points()
    mask = np.zeros(pts.shape[0], bool)
    if peaks is None or radius <= 0:
        return mask
    lo = pts.min(axis=0) - radius
    hi = pts.max(axis=0) + radius
    pos, inten = peaks.peaks_in_box(lo, hi)
    for p in pos:
        mask |= np.linalg.norm(pts - p, axis=1) <= radius + 1e-12
    return mask


def compare_density(
    empirical: IntensityGrid,
    analytic: AcDensity,
    mask_radius: float = 0.0,
    peaks: PurePointSpectrum | None = None,
    n_bins: int | None = None,
) -> DensityReport:
    """Relative deviation of ``empirical`` from ``analytic`` off the peaks.

    Bragg neighbourhoods of radius ``mask_radius`` around the positions in
    ``peaks`` are excluded. With ``n_bins`` (1D only) the comparison is made
    between bin averages of both curves over the same grid points.
    """
    if empirical.grid.dimension != analytic.dimension:
        raise ValidationError("empirical grid and density have different dimensions")
    mask = _peak_mask(empirical.grid, peaks, mask_radius)
    model = analytic.on_grid(empirical.grid).ravel()
    emp = empirical.values.ravel()
    err = None if empirical.stderr is None else np.asarray(empirical.stderr).ravel()
    if n_bins is not None:
        _, e_mean, e_err, members = empirical.binned(n_bins, mask=mask)
        m_mean = np.array([model[idx].mean() for idx in members])
        emp, model = e_mean, m_mean
        err = None if np.all(np.isnan(e_err)) else e_err
    else:
        keep = ~mask
        emp, model = emp[keep], model[keep]
        err = None if err is None else err[keep]
    if emp.size == 0:
        raise ValidationError("no grid points left to compare")
    scale = np.maximum(np.abs(model), 1e-12)
    rel = np.abs(emp - model) / scale
    chi2 = float("nan")
    if err is not None:
        good = err > 0
        chi2 = float(np.sum(((emp[good] - model[good]) / err[good]) ** 2))
    return DensityReport(float(rel.max()), float(rel.mean()), chi2, int(emp.size))


# --------------------------------------------------------------------------
# estimator wrappers


class PeriodogramEstimator(BaseEstimator):
    """Replica-averaged periodogram on a fixed grid.

    Parameters
    ----------
    grid : KGrid
        Wave-vector grid.
    """

    def __init__(self, grid: KGrid | None = None):
        self.grid = grid

    def fit(self, X, y=None):
        """``X`` is a sequence of :class:`WeightedDiracComb` replicas."""
        if self.grid is None:
            raise ValidationError("grid must be set")
        X = list(X)
        self.intensity_ = average_grids([periodogram(c, self.grid) for c in X])
        self.n_replicas_ = len(X)
        return self

    def transform(self, X):
        return np.stack([periodogram(c, self.grid).values for c in X])


class PeakClassifier(BaseEstimator):
    """Volume-scaling classifier wrapping :func:`classify_peaks`."""

    def __init__(self, bragg_slope: float = 0.9, ac_slope: float = 0.1, floor: float = 1e-12):
        self.bragg_slope = bragg_slope
        self.ac_slope = ac_slope
        self.floor = floor

    def fit(self, X, y=None):
        """``X`` is a sequence of :class:`IntensityGrid` at increasing volumes."""
        self.spectrum_, self.residual_ = classify_peaks(
            X, self.bragg_slope, self.ac_slope, self.floor
        )
        return self

    def predict(self, X=None):
        """Per-point labels of the fitted grid."""
        return self.residual_.labels
