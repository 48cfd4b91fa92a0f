"""Two-dimensional Ising lattice gas: critical data, Bragg part and Monte Carlo."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.optimize import curve_fit
from sklearn.base import BaseEstimator

from . import _rng
from ._validation import ValidationError, check_int
from .spectral import PurePointSpectrum, WeightedDiracComb

__all__ = [
    "IsingParams",
    "CriticalPointWarning",
    "critical_coupling",
    "magnetization",
    "ising_pp",
    "ordered_form",
    "disordered_form",
    "critical_form",
    "fit_asymptotic_correlation",
    "sample_ising_spins",
    "sample_ising_mcmc",
    "spin_correlation",
    "spins_to_comb",
    "CorrelationFit",
    "IsingModel",
]

_CRIT_TOL = 1e-12


class CriticalPointWarning(UserWarning):
    """Raised when a quantity is evaluated exactly at the critical point."""


@dataclass(frozen=True)
class IsingParams:
    """Nearest-neighbour couplings ``K1`` (x bonds) and ``K2`` (y bonds) in units of ``k_B T``."""

    K1: float
    K2: float

    def __post_init__(self):
        for name in ("K1", "K2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be a nonnegative finite number")
        object.__setattr__(self, "K1", float(self.K1))
        object.__setattr__(self, "K2", float(self.K2))

    @classmethod
    def isotropic(cls, K: float) -> "IsingParams":
        return cls(K, K)

    @property
    def k(self) -> float:
        """Modulus ``(sinh 2K1 sinh 2K2)^-1`` (infinite at zero coupling)."""
        s = math.sinh(2 * self.K1) * math.sinh(2 * self.K2)
        return math.inf if s == 0 else 1.0 / s

    @property
    def regime(self) -> str:
        k = self.k
        if abs(k - 1.0) <= _CRIT_TOL:
            return "critical"
        return "ordered" if k < 1 else "disordered"


def critical_coupling() -> float:
    """Isotropic critical coupling ``ln(1 + sqrt 2) / 2``."""
    return 0.5 * math.log1p(math.sqrt(2.0))


def magnetization(params: IsingParams):
    """Spontaneous magnetisation ``m = (1 - k^2)^(1/8)`` and occupation ``rho = (1 + m)/2``.

    Zero magnetisation for ``k >= 1``.
    """
    k = params.k
    m = (1.0 - k * k) ** 0.125 if k < 1 else 0.0
    return m, 0.5 * (1.0 + m)


def ising_pp(params: IsingParams, weights=(1.0, 0.0)) -> PurePointSpectrum:
    """Bragg comb on ``Z^2`` with intensity ``|a rho + b (1 - rho)|^2``.

    ``weights = (a, b)`` are the scattering strengths of up and down spins;
    the default lattice gas ``(1, 0)`` gives ``rho^2`` below and ``1/4``
    above the critical temperature. At the critical point the disordered
    value is used and a :class:`CriticalPointWarning` is issued.
    """
    if params.regime == "critical":
        warnings.warn("pure point part at the critical point uses the disordered value",
                      CriticalPointWarning, stacklevel=2)
    m, rho = magnetization(params)
    a, b = complex(weights[0]), complex(weights[1])
    amp = a * rho + b * (1 - rho)
    return PurePointSpectrum([[0.0, 0.0]], [abs(amp) ** 2], period=np.eye(2))


def ordered_form(R, m2, c2, c3):
    """``m^2 + c3 exp(-2R/c2) / R^2``."""
    R = np.asarray(R, float)
    return m2 + c3 * np.exp(-2 * R / c2) / R**2


def disordered_form(R, c1, c2):
    """``c1 exp(-R/c2) / sqrt(R)``."""
    R = np.asarray(R, float)
    return c1 * np.exp(-R / c2) / np.sqrt(R)


def critical_form(R, c, e=0.25):
    """``c R^-e`` with ``e = 1/4`` at criticality."""
    return c * np.asarray(R, float) ** (-e)


@dataclass(frozen=True)
class CorrelationFit:
    regime: str
    params: tuple
    r_squared: float

    @property
    def decay_length(self) -> float:
        return float(self.params[1]) if self.regime in ("ordered", "disordered") else math.inf


def fit_asymptotic_correlation(R, corr, regime: str, sigma=None) -> CorrelationFit:
    """Least-squares fit of the regime's asymptotic form; returns parameters and ``R^2``.

    ``R^2 = 1 - SS_res / SS_tot`` on the unweighted data.
    """
    R = np.asarray(R, float)
    corr = np.asarray(corr, float)
    if regime == "ordered":
        f = ordered_form
        p0 = (max(corr[-1], 1e-6), 2.0, 1.0)
        bounds = ([0, 1e-3, -np.inf], [1.0, 1e3, np.inf])
    elif regime == "disordered":
        f = disordered_form
        p0 = (max(corr[0], 1e-6) * np.sqrt(R[0]), 2.0)
        bounds = ([0, 1e-3], [np.inf, 1e3])
    elif regime == "critical":
        f = lambda r, c: critical_form(r, c)  # noqa: E731
        p0 = (max(corr[0], 1e-6),)
        bounds = ([0], [np.inf])
    else:
        raise ValidationError("regime must be 'ordered', 'disordered' or 'critical'")
    p, _ = curve_fit(f, R, corr, p0=p0, bounds=bounds, sigma=sigma, maxfev=20000)
    res = corr - f(R, *p)
    tot = corr - corr.mean()
    r2 = 1.0 - float(res @ res) / float(tot @ tot) if tot @ tot > 0 else float("nan")
    return CorrelationFit(regime, tuple(float(v) for v in p), r2)


@njit(cache=True)
def _metropolis(spins, K1, K2, n_sweeps, s):
    L1, L2 = spins.shape
    N = L1 * L2
    for _ in range(n_sweeps):
        for _ in range(N):
            i = _rng.below(s, L1)
            j = _rng.below(s, L2)
            hx = spins[(i + 1) % L1, j] + spins[(i - 1) % L1, j]
            hy = spins[i, (j + 1) % L2] + spins[i, (j - 1) % L2]
            dE = 2.0 * spins[i, j] * (K1 * hx + K2 * hy)
            if dE <= 0.0 or _rng.uniform(s) < math.exp(-dE):
                spins[i, j] = -spins[i, j]


def sample_ising_spins(params: IsingParams, L: int, sweeps: int, seed: int,
                       all_up: bool = True, snapshot_every=None, callback=None) -> np.ndarray:
    """Metropolis single-spin dynamics on the ``L x L`` torus.

    Starts from all spins up (or random with ``all_up=False``). With
    ``callback``, ``callback(spins_copy, sweep)`` runs every
    ``snapshot_every`` sweeps. Ordered runs whose final magnetisation is
    negative are flipped globally (sign post-selection).
    """
    L = check_int(L, "L", minimum=16)
    sweeps = check_int(sweeps, "sweeps", minimum=0)
    s = _rng.make_state(seed)
    if all_up:
        spins = np.ones((L, L), np.int8)
    else:
        spins = np.where(np.random.default_rng(seed).random((L, L)) < 0.5, 1, -1).astype(np.int8)
    done = 0
    if callback is not None and snapshot_every:
        every = check_int(snapshot_every, "snapshot_every", minimum=1)
        while done + every <= sweeps:
            _metropolis(spins, params.K1, params.K2, every, s)
            done += every
            snap = spins.copy()
            if params.regime == "ordered" and snap.sum() < 0:
                snap = -snap
            callback(snap, done)
    if sweeps > done:
        _metropolis(spins, params.K1, params.K2, sweeps - done, s)
    if params.regime == "ordered" and spins.sum() < 0:
        spins = -spins
    return spins


def sample_ising_mcmc(params: IsingParams, L: int, sweeps: int, seed: int,
                      weights=(1.0, 0.0), all_up: bool = True) -> WeightedDiracComb:
    """Comb on the ``L x L`` patch of ``Z^2`` with weight ``weights[0]`` on up spins."""
    spins = sample_ising_spins(params, L, sweeps, seed, all_up)
    return spins_to_comb(spins, weights)


def spins_to_comb(spins, weights=(1.0, 0.0)) -> WeightedDiracComb:
    L1, L2 = spins.shape
    X, Y = np.indices(spins.shape)
    pts = np.stack([X.ravel(), Y.ravel()], 1).astype(float)
    w = np.where(spins.ravel() > 0, complex(weights[0]), complex(weights[1]))
    return WeightedDiracComb(pts, w, ((0.0, 0.0), (float(L1), float(L2))), check=False)


def spin_correlation(spins, R) -> np.ndarray:
    """``<sigma_0 sigma_R>`` averaged over sites and both axis directions."""
    sp = np.asarray(spins, float)
    out = []
    for r in np.atleast_1d(R):
        r = int(r)
        cx = np.mean(sp * np.roll(sp, -r, axis=0))
        cy = np.mean(sp * np.roll(sp, -r, axis=1))
        out.append(0.5 * (cx + cy))
    return np.array(out)


class IsingModel(BaseEstimator):
    """Estimator-style wrapper exposing magnetisation and Bragg part.

    Parameters
    ----------
    K1, K2 : float
    weights : tuple
        Scattering strengths of up and down spins.
    """

    def __init__(self, K1=0.5, K2=0.5, weights=(1.0, 0.0)):
        self.K1 = K1
        self.K2 = K2
        self.weights = weights

    def fit(self, X=None, y=None):
        self.params_ = IsingParams(self.K1, self.K2)
        self.magnetization_, self.rho_ = magnetization(self.params_)
        self.pp_ = ising_pp(self.params_, self.weights)
        return self

    def predict(self, k):
        """Bragg intensity at ``k`` (zero off the lattice)."""
        return self.pp_.intensity_at(np.atleast_2d(np.asarray(k, float)))
