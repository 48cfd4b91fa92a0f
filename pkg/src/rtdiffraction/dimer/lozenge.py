"""Lozenge tilings: densities, joint occupations, Bragg part and diffuse density.

Coordinates
-----------
Positions use the triangular lattice basis ``e1 = (1, 0)``, ``e2 = (1/2, sqrt(3)/2)``
and wave vectors the dual basis ``b1 = (1, -1/sqrt(3))``, ``b2 = (0, 2/sqrt(3))``,
so that ``k . x = h x1 + k x2`` for ``k = h b1 + k b2`` and ``x = x1 e1 + x2 e2``.
The honeycomb site ``L(c)`` is joined to ``R(c - e1)``, ``R(c - e2)`` and ``R(c)``
by edges of orientation 1, 2 and 3; the tile (scatterer) centres of the three
orientations sit at ``c + (0, 1/2)``, ``c + (1/2, 0)`` and ``c + (1/2, 1/2)``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .._validation import ValidationError, as_float_vector
from ..spectral import AcDensity, KGrid, PurePointSpectrum, WeightedDiracComb, structure_factor
from .coupling import CouplingTable, check_triangle, lozenge_coupling_table

__all__ = [
    "LozengeModel",
    "GAMMA_BASIS",
    "DUAL_BASIS",
    "CELL_AREA",
    "TILE_OFFSETS",
    "lozenge_densities",
    "lozenge_activities_for_density",
    "lozenge_joint_occupation",
    "lozenge_pp",
    "lozenge_diffuse_density",
    "LozengeDiffuseDensity",
]

GAMMA_BASIS = np.array([[1.0, 0.0], [0.5, np.sqrt(3) / 2]])
DUAL_BASIS = np.array([[1.0, -1 / np.sqrt(3)], [0.0, 2 / np.sqrt(3)]])
CELL_AREA = np.sqrt(3) / 2
TILE_OFFSETS = np.array([[0.0, 0.5], [0.5, 0.0], [0.5, 0.5]])
# coupling argument of the bond of each orientation, L(c) -> R(c + delta)
_DELTA = np.array([[-1, 0], [0, -1], [0, 0]])


class LozengeModel(BaseEstimator):
    """Weighted lozenge tiling with three orientation activities.

    Parameters
    ----------
    z1, z2, z3 : float
        Activities; must satisfy the strict triangle condition.
    resolution : int
        Gauss-Legendre nodes for the coupling integrals.
    radius : int
        Coupling table window.

    Attributes
    ----------
    table_ : CouplingTable
    rho_ : ndarray of shape (3,)
    """

    def __init__(self, z1=1.0, z2=1.0, z3=1.0, resolution=256, radius=32):
        self.z1 = z1
        self.z2 = z2
        self.z3 = z3
        self.resolution = resolution
        self.radius = radius

    @property
    def z_(self):
        return np.array([self.z1, self.z2, self.z3], float)

    def fit(self, X=None, y=None, table: CouplingTable | None = None):
        check_triangle(self.z1, self.z2, self.z3)
        if table is None:
            table = lozenge_coupling_table(self.z1, self.z2, self.z3, self.radius, self.resolution)
        if table.model != "lozenge":
            raise ValidationError("table is not a lozenge coupling table")
        self.table_ = table
        self.rho_ = lozenge_densities(self.z1, self.z2, self.z3, table)
        return self

    def _check(self):
        if not hasattr(self, "table_"):
            self.fit()

    def joint_occupation(self, alpha, beta, d):
        self._check()
        return lozenge_joint_occupation(self, alpha, beta, d)

    def pp(self) -> PurePointSpectrum:
        self._check()
        return lozenge_pp(self.rho_)

    def diffuse_density(self, cutoff=30):
        self._check()
        return lozenge_diffuse_density(self, cutoff)

    def predict(self, k):
        """Diffuse density at dual-coordinate wave vectors ``k``."""
        return self.diffuse_density()(k)


def lozenge_densities(z1, z2, z3, table: CouplingTable | None = None) -> np.ndarray:
    """Orientation fractions ``rho_i = z_i [delta_i]`` (normalised to unit sum).

    They equal ``theta_i / pi`` with ``theta_i`` the angle opposite the side
    ``z_i`` of the triangle with side lengths ``z``.
    """
    if table is None:
        table = lozenge_coupling_table(z1, z2, z3, radius=2)
    z = np.array([z1, z2, z3], float)
    b = np.array([z[i] * table[tuple(_DELTA[i])].real for i in range(3)])
    return b / b.sum()


def lozenge_activities_for_density(rho) -> tuple:
    """Activities ``z_i = sin(pi rho_i)`` realising the fractions ``rho``.

    By the law of sines a triangle with angles ``pi rho_i`` has sides
    proportional to ``sin(pi rho_i)``.
    """
    rho = as_float_vector(rho, "rho")
    if rho.size != 3 or np.any(rho <= 0) or abs(rho.sum() - 1) > 1e-9:
        raise ValidationError("rho must be three positive fractions summing to 1")
    return tuple(float(v) for v in np.sin(np.pi * rho))


def _pair(model, a, b, x, y):
    T = model.table_
    z = model.z_
    dA, dB = _DELTA[a], _DELTA[b]
    gA = T[tuple(dA)].real
    gB = T[tuple(dB)].real
    cross = (T(dA[0] - x, dA[1] - y) * T(x + dB[0], y + dB[1])).real
    P = z[a] * z[b] * (gA * gB - cross)
    if a == b:
        P = np.where((x == 0) & (y == 0), model.rho_[a], P)
    return P


def lozenge_joint_occupation(model: LozengeModel, alpha: int, beta: int, d):
    """Probability that ``L(0)`` uses orientation ``alpha`` and ``L(d)`` orientation ``beta``.

    Parameters
    ----------
    alpha, beta : {1, 2, 3}
    d : array_like, shape (2,) or (N, 2)
        Integer cell difference in lattice coordinates. The scatterer
        displacement is ``d + TILE_OFFSETS[beta - 1] - TILE_OFFSETS[alpha - 1]``.

    Returns
    -------
    P, c : ndarray
        Per-cell probability and its non-constant part ``P - rho_alpha rho_beta``.
    """
    if not hasattr(model, "table_"):
        model.fit()
    if alpha not in (1, 2, 3) or beta not in (1, 2, 3):
        raise ValidationError("orientations must be 1, 2 or 3")
    d = np.atleast_2d(np.asarray(d))
    di = np.round(d).astype(int)
    if np.any(np.abs(d - di) > 1e-9):
        raise ValidationError("cell differences must be integer")
    if np.any(np.abs(di) + 1 > model.table_.radius):
        raise ValidationError("coupling table window too small")
    P = _pair(model, alpha - 1, beta - 1, di[:, 0], di[:, 1])
    return P, P - model.rho_[alpha - 1] * model.rho_[beta - 1]


def lozenge_pp(rho) -> PurePointSpectrum:
    """Bragg peaks ``(4/3)((-1)^h rho1 + (-1)^k rho2 + rho3)^2`` on the dual lattice.

    Positions are in dual coordinates; the four classes of ``(h, k) mod 2``
    form the fundamental domain of the period lattice ``2 Z^2``.
    """
    rho = as_float_vector(rho, "rho")
    if rho.size != 3 or abs(rho.sum() - 1) > 1e-9:
        raise ValidationError("rho must be three fractions summing to 1")
    if np.any(rho <= 0):
        raise ValidationError("an orientation with zero density lies on the Kasteleyn boundary")
    pos, val = [], []
    for h in (0, 1):
        for k in (0, 1):
            pos.append([h, k])
            val.append(4.0 / 3.0 * ((-1) ** h * rho[0] + (-1) ** k * rho[1] + rho[2]) ** 2)
    return PurePointSpectrum(pos, val, period=[[2.0, 0.0], [0.0, 2.0]])


class LozengeDiffuseDensity(AcDensity):
    """Truncated Fourier series over scatterer displacements (dual coordinates).

    Values are densities with respect to Lebesgue measure in Cartesian
    wave-vector space.
    """

    def __init__(self, positions, coeffs, tail_bound, cutoff):
        self._pos = positions
        self._c = coeffs
        self.tail_bound = float(tail_bound)
        self.cutoff = int(cutoff)
        super().__init__(self._direct, [[2.0, 0.0], [0.0, 2.0]])

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


def lozenge_diffuse_density(model: LozengeModel, cutoff: int = 30) -> LozengeDiffuseDensity:
    """Diffuse density from all nine orientation pairs with ``|d| <= cutoff``.

    ``|d|`` is the Euclidean length of the cell difference. ``tail_bound``
    is the L2 norm of the discarded coefficients, estimated from a power-law
    envelope.
    """
    from .domino import _tail_bound

    if not hasattr(model, "table_"):
        model.fit()
    if cutoff + 2 > model.table_.radius:
        raise ValidationError("coupling table window too small for this cutoff")
    R = int(cutoff)
    g = np.arange(-R, R + 1)
    X, Y = np.meshgrid(g, g, indexing="ij")
    D = np.stack([X.ravel(), Y.ravel()], 1)
    rr = np.linalg.norm(D @ GAMMA_BASIS, axis=1)
    D, rr = D[rr <= R], rr[rr <= R]
    dens = 1.0 / CELL_AREA
    pos, coeff = [], []
    tail2 = 0.0
    for a in range(3):
        for b in range(3):
            _, c = lozenge_joint_occupation(model, a + 1, b + 1, D)
            pos.append(D + TILE_OFFSETS[b] - TILE_OFFSETS[a])
            coeff.append(dens * c)
            tail2 += _tail_bound(rr, dens * c, R) ** 2
    return LozengeDiffuseDensity(np.concatenate(pos), np.concatenate(coeff).astype(complex),
                                 np.sqrt(tail2), R)
