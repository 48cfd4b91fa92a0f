"""Domino tilings: densities, joint occupations, Bragg part and diffuse density."""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator

from .._validation import ValidationError, check_positive_scalar
from ..spectral import AcDensity, KGrid, PurePointSpectrum, WeightedDiracComb, structure_factor
from .coupling import CouplingTable, domino_coupling_table

__all__ = [
    "DominoModel",
    "domino_densities",
    "domino_activities_for_density",
    "domino_joint_occupation",
    "domino_pp",
    "domino_diffuse_density",
    "DominoDiffuseDensity",
]

SCATTERER_OFFSET = (-0.5, 0.5)


class DominoModel(BaseEstimator):
    """Weighted domino tiling with horizontal/vertical activities.

    Parameters
    ----------
    z1, z2 : float
        Activities of horizontal and vertical dominoes.
    resolution : int
        Quadrature size for the coupling function.
    radius : int
        Coupling table window.

    Attributes
    ----------
    table_ : CouplingTable
    rho_ : ndarray of shape (2,)
        Orientation fractions, ``rho_[0]`` horizontal.
    """

    def __init__(self, z1=1.0, z2=1.0, resolution=1024, radius=32):
        self.z1 = z1
        self.z2 = z2
        self.resolution = resolution
        self.radius = radius

    def fit(self, X=None, y=None, table: CouplingTable | None = None):
        check_positive_scalar(self.z1, "z1")
        check_positive_scalar(self.z2, "z2")
        if table is None:
            table = domino_coupling_table(self.z1, self.z2, self.radius, self.resolution)
        if table.model != "domino":
            raise ValidationError("table is not a domino coupling table")
        self.table_ = table
        self.rho_ = domino_densities(self.z1, self.z2, table)
        return self

    def _check(self):
        if not hasattr(self, "table_"):
            self.fit()

    def joint_occupation(self, i, j, r):
        self._check()
        return domino_joint_occupation(self, i, j, r)

    def pp(self, h1=1.0, h2=1.0) -> PurePointSpectrum:
        self._check()
        return domino_pp(self.rho_[0], self.rho_[1], h1, h2)

    def diffuse_density(self, cutoff=30):
        self._check()
        return domino_diffuse_density(self, cutoff)

    def predict(self, k):
        """Diffuse density at wave vectors ``k`` (shape ``(M, 2)``)."""
        return self.diffuse_density()(k)


def domino_densities(z1, z2, table: CouplingTable | None = None) -> np.ndarray:
    """Orientation fractions from nearest-neighbour bond probabilities.

    A given horizontal bond is occupied with probability ``z1 |[1, 0]|``,
    and every domino covers two sites, so ``rho_1 = 2 z1 |[1, 0]|``; the pair
    is normalised to unit sum to absorb quadrature error.
    """
    if table is None:
        table = domino_coupling_table(z1, z2, radius=2)
    b1 = 2 * z1 * abs(table[1, 0])
    b2 = 2 * z2 * abs(table[0, 1])
    return np.array([b1, b2]) / (b1 + b2)


def domino_activities_for_density(rho1: float, z2: float = 1.0, resolution: int = 1024):
    """Activity ``z1`` (with ``z2`` fixed) giving horizontal fraction ``rho1``."""
    if not 0 < rho1 < 1:
        raise ValidationError("rho1 must lie in (0, 1)")

    def f(logz):
        return domino_densities(np.exp(logz) * z2, z2, domino_coupling_table(
            np.exp(logz) * z2, z2, 2, resolution))[0] - rho1

    return float(np.exp(brentq(f, -12.0, 12.0, xtol=1e-14)) * z2), float(z2)


def _pair(model, i, j, x, y):
    """Joint occupation of orientations ``i`` at the origin and ``j`` at ``(x, y)``.

    ``(x, y)`` is the site difference between the left/lower sites of the two
    dominoes. Pfaffian expansion over the four covered sites.
    """
    T = model.table_
    z1, z2 = float(model.z1), float(model.z2)
    rho = model.rho_
    x = np.asarray(x)
    y = np.asarray(y)
    if i == 1 and j == 1:
        val = rho[0] ** 2 / 4 - z1**2 * (T(x, y) ** 2 - T(x - 1, y) * T(x + 1, y))
        same = (x == 0) & (y == 0)
        return np.where(same, rho[0] / 2, val.real)
    if i == 2 and j == 2:
        val = rho[1] ** 2 / 4 + z2**2 * (T(x, y) ** 2 - T(x, y - 1) * T(x, y + 1))
        same = (x == 0) & (y == 0)
        return np.where(same, rho[1] / 2, val.real)
    if i == 1 and j == 2:
        val = rho[0] * rho[1] / 4 - 1j * z1 * z2 * (
            T(x, y) * T(x - 1, y + 1) - T(x, y + 1) * T(x - 1, y)
        )
        return val.real
    if i == 2 and j == 1:
        # vertical at the origin, horizontal displaced: reverse the 1-2 pair
        return _pair(model, 1, 2, -x, -y)
    raise ValidationError("orientations must be 1 (horizontal) or 2 (vertical)")


def domino_joint_occupation(model: DominoModel, i: int, j: int, r):
    """Joint occupation probability for two dominoes with scatterers ``r`` apart.

    Parameters
    ----------
    model : DominoModel
        Fitted model.
    i, j : {1, 2}
        Orientations at the origin and at the displaced scatterer.
    r : array_like, shape (2,) or (N, 2)
        Scatterer displacement: integer for ``i == j``, in ``Z^2 + a`` with
        ``a = (-1/2, 1/2)`` for ``(1, 2)`` and ``Z^2 - a`` for ``(2, 1)``.

    Returns
    -------
    P, c : ndarray
        The probability and its non-constant part ``P - rho_i rho_j / 4``.
    """
    if not hasattr(model, "table_"):
        model.fit()
    r = np.atleast_2d(np.asarray(r, float))
    a = np.array(SCATTERER_OFFSET)
    if i == j:
        d = r
    elif (i, j) == (1, 2):
        d = r - a
    elif (i, j) == (2, 1):
        d = r + a
    else:
        raise ValidationError("orientations must be 1 or 2")
    di = np.round(d).astype(int)
    if np.any(np.abs(d - di) > 1e-9):
        raise ValidationError("displacement is not on the scatterer difference set")
    if np.any(np.abs(di) + 1 > model.table_.radius):
        raise ValidationError("coupling table window too small")
    P = _pair(model, i, j, di[:, 0], di[:, 1])
    const = model.rho_[i - 1] * model.rho_[j - 1] / 4
    return P, P - const


def domino_pp(rho1, rho2, h1=1.0, h2=1.0) -> PurePointSpectrum:
    """Bragg peaks ``|rho1 h1 + (-1)^(h+k) rho2 h2|^2 / 4`` on ``Z^2``.

    Returned on a fundamental domain of the period lattice ``{h + k even}``.
    A single surviving orientation gives the comb of an aligned rectangular
    lattice of dominoes instead.
    """
    rho1, rho2 = float(rho1), float(rho2)
    if rho1 < 0 or rho2 < 0 or abs(rho1 + rho2 - 1) > 1e-9:
        raise ValidationError("densities must be nonnegative and sum to 1")
    if rho2 == 0 or rho1 == 0:
        h = h1 if rho2 == 0 else h2
        # dominoes on an aligned 2 x 1 (or 1 x 2) lattice, half a scatterer per unit area
        period = [[0.5, 0.0], [0.0, 1.0]] if rho2 == 0 else [[1.0, 0.0], [0.0, 0.5]]
        return PurePointSpectrum([[0.0, 0.0]], [abs(h) ** 2 / 4], period=period)
    even = abs(rho1 * h1 + rho2 * h2) ** 2 / 4
    odd = abs(rho1 * h1 - rho2 * h2) ** 2 / 4
    return PurePointSpectrum([[0.0, 0.0], [1.0, 0.0]], [even, odd], period=[[1.0, 1.0], [1.0, -1.0]])


class DominoDiffuseDensity(AcDensity):
    """Truncated Fourier series of the non-constant pair correlations.

    The evaluator is a direct sum; :meth:`on_grid` uses an FFT over the
    doubled scatterer lattice when the grid is commensurate.
    """

    def __init__(self, positions, coeffs, tail_bound, cutoff):
        self._pos = positions
        self._c = coeffs
        self.tail_bound = float(tail_bound)
        self.cutoff = int(cutoff)
        super().__init__(self._direct, [[1.0, 1.0], [1.0, -1.0]])

    def _direct(self, k):
        out = np.empty(k.shape[0])
        for s in range(0, k.shape[0], 512):
            ph = np.exp(-2j * np.pi * (k[s:s + 512] @ self._pos.T))
            out[s:s + 512] = (ph @ self._c).real
        return out

    def on_grid(self, grid: KGrid) -> np.ndarray:
        key = (grid.origin, grid.step, grid.counts)
        if key not in self._cache:
            comb = WeightedDiracComb(self._pos, self._c, (self._pos.min(0), self._pos.max(0) + 1),
                                     check=False)
            self._cache[key] = structure_factor(comb, grid).real
        return self._cache[key]


def _tail_bound(rr, c, cutoff):
    """L2 norm of the series tail beyond ``cutoff`` from a power-law envelope.

    ``|c| <= C r^-p`` is fitted to radial-bin maxima on ``[cutoff/3, cutoff]``;
    the tail norm is ``sqrt(sum_{r > R} C^2 r^-2p)`` with the sum replaced by
    its integral.
    """
    lo = cutoff / 3.0
    edges = np.linspace(lo, cutoff, 11)
    rb, cb = [], []
    for e0, e1 in zip(edges[:-1], edges[1:]):
        sel = (rr > e0) & (rr <= e1)
        if np.any(sel) and np.max(np.abs(c[sel])) > 0:
            rb.append(0.5 * (e0 + e1))
            cb.append(np.max(np.abs(c[sel])))
    if len(rb) < 2:
        return 0.0
    slope, _ = np.polyfit(np.log(rb), np.log(cb), 1)
    p = max(-slope, 1.01)
    sel = (rr > lo) & (rr <= cutoff)
    C = np.max(np.abs(c[sel]) * rr[sel] ** p)
    return float(C * np.sqrt(2 * np.pi / (2 * p - 2)) * cutoff ** (1 - p))


def domino_diffuse_density(model: DominoModel, cutoff: int = 30) -> DominoDiffuseDensity:
    """Diffuse density from pair correlations with ``|r| <= cutoff``.

    Combines ``c11 + c22`` on ``Z^2`` (including the self term at 0) with
    ``c12 + c21`` on ``Z^2 + a``. ``tail_bound`` on the result estimates the
    L2 truncation error from a power-law envelope fitted on the outer
    shell (the pair correlations decay like ``r^-2``).
    """
    if not hasattr(model, "table_"):
        model.fit()
    if cutoff + 2 > model.table_.radius:
        raise ValidationError("coupling table window too small for this cutoff")
    R = int(cutoff)
    g = np.arange(-R, R + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    rr = np.hypot(X, Y)
    inside = rr <= R
    X, Y, rr = X[inside], Y[inside], rr[inside]
    Z = np.stack([X, Y], 1).astype(float)
    _, c11 = domino_joint_occupation(model, 1, 1, Z)
    _, c22 = domino_joint_occupation(model, 2, 2, Z)
    a = np.array(SCATTERER_OFFSET)
    # half-odd displacements s = d + a with |s| <= R
    S = Z + a
    keep = np.hypot(S[:, 0], S[:, 1]) <= R
    S = S[keep]
    _, c12 = domino_joint_occupation(model, 1, 2, S)
    _, c21 = domino_joint_occupation(model, 2, 1, S)
    pos = np.concatenate([Z, S])
    coeff = np.concatenate([c11 + c22, c12 + c21])
    sr = np.hypot(S[:, 0], S[:, 1])
    tail = np.hypot(_tail_bound(rr, c11 + c22, R), _tail_bound(sr, c12 + c21, R))
    return DominoDiffuseDensity(pos, coeff.astype(complex), tail, R)
