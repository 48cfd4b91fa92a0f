"""Bernoulli and reversible Markov weighted combs on the integers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator

from . import _rng
from ._validation import ValidationError, check_probability_vector, check_stochastic_matrix
from .spectral import AcDensity, PurePointSpectrum, WeightedDiracComb

__all__ = [
    "NotPrimitiveError",
    "NotReversibleError",
    "ChainSpec",
    "ChainSpectralData",
    "analyze_chain",
    "bernoulli_diffraction",
    "markov_autocorrelation",
    "markov_ac_density",
    "markov_diffraction",
    "sample_chain",
    "sample_chain_states",
    "bernoulli_chain",
    "MarkovChainModel",
]


class NotPrimitiveError(ValidationError):
    """The stochastic matrix has no strictly positive power."""

    code = "not-primitive"


class NotReversibleError(ValidationError):
    """The chain violates detailed balance."""

    code = "not-reversible"


@dataclass(frozen=True)
class ChainSpec:
    """Weighted Markov chain: scattering strengths ``h``, matrix ``M``, stationary ``p``."""

    h: np.ndarray
    M: np.ndarray
    p: np.ndarray

    @property
    def n(self) -> int:
        return self.M.shape[0]


@dataclass(frozen=True)
class ChainSpectralData:
    """Eigen-data of the symmetrised matrix ``S = P M P^-1``, ``P = diag(sqrt(p))``.

    ``eigenvalues[0] == 1`` belongs to the Perron vector ``basis[:, 0]``;
    ``beta`` holds the coefficients of ``P h`` in the orthonormal ``basis``.
    ``S0`` is the projector onto the Perron vector and ``S1 = S - S0``.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    beta: np.ndarray
    S: np.ndarray
    S0: np.ndarray
    S1: np.ndarray
    P: np.ndarray


def is_primitive(M) -> bool:
    """Wielandt test: ``M`` is primitive iff ``M^((n-1)^2 + 1) > 0``."""
    A = (np.asarray(M) > 0).astype(np.int64)
    n = A.shape[0]
    e = (n - 1) ** 2 + 1
    R = np.eye(n, dtype=np.int64)
    B = A.copy()
    while e:
        if e & 1:
            R = np.minimum(R @ B, 1)
        B = np.minimum(B @ B, 1)
        e >>= 1
    return bool(np.all(R > 0))


def stationary_distribution(M) -> np.ndarray:
    n = M.shape[0]
    A = np.vstack([M.T - np.eye(n), np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    p, *_ = np.linalg.lstsq(A, b, rcond=None)
    return p


def analyze_chain(h, M, atol: float = 1e-12):
    """Validate a weighted chain and compute its spectral data.

    Parameters
    ----------
    h : array_like
        Pairwise distinct complex scattering strengths, one per state.
    M : array_like
        Row-stochastic transition matrix.

    Returns
    -------
    spec : ChainSpec
    data : ChainSpectralData

    Raises
    ------
    NotPrimitiveError, NotReversibleError
    """
    M = check_stochastic_matrix(M, atol)
    h = np.asarray(h, dtype=complex).ravel()
    n = M.shape[0]
    if h.size != n:
        raise ValidationError("h must have one entry per state")
    if np.unique(h).size != n:
        raise ValidationError("scattering strengths must be pairwise distinct")
    if not is_primitive(M):
        raise NotPrimitiveError("transition matrix is not primitive")
    p = stationary_distribution(M)
    if np.any(p <= 0):
        raise NotPrimitiveError("stationary vector is not strictly positive")
    p = p / p.sum()
    flux = p[:, None] * M
    if np.max(np.abs(flux - flux.T)) > atol:
        raise NotReversibleError("chain is not reversible")
    sq = np.sqrt(p)
    P = np.diag(sq)
    S = sq[:, None] * M / sq[None, :]
    S = 0.5 * (S + S.T)
    lam, B = np.linalg.eigh(S)
    perron = int(np.argmax(np.abs(B.T @ sq)))
    order = [perron] + [i for i in np.argsort(-lam) if i != perron]
    lam = lam[order]
    B = B[:, order]
    if B[:, 0] @ sq < 0:
        B[:, 0] = -B[:, 0]
    lam[0] = 1.0
    beta = B.T @ (sq * h)
    S0 = np.outer(B[:, 0], B[:, 0])
    spec = ChainSpec(h, M, p)
    data = ChainSpectralData(lam, B, beta, S, S0, S - S0, P)
    return spec, data


def bernoulli_chain(h, p):
    """Chain with identical rows ``p``, i.e. an i.i.d. sequence."""
    p = check_probability_vector(p)
    return analyze_chain(h, np.tile(p, (p.size, 1)))


def bernoulli_diffraction(h, p):
    """Bragg comb ``|<h>|^2`` on the integers and flat ``<|h|^2> - |<h>|^2``.

    Returns
    -------
    pp : PurePointSpectrum
        One peak at 0 with period lattice spanned by 1.
    ac : AcDensity
    """
    p = check_probability_vector(p)
    h = np.asarray(h, dtype=complex).ravel()
    if h.size != p.size:
        raise ValidationError("h and p must have equal length")
    mean = np.sum(p * h)
    var = float(np.sum(p * np.abs(h) ** 2) - abs(mean) ** 2)
    var = max(var, 0.0)
    pp = PurePointSpectrum([[0.0]], [abs(mean) ** 2], period=[[1.0]])
    ac = AcDensity(lambda k: np.full(np.shape(k), var), [[1.0]])
    return pp, ac


def markov_autocorrelation(spec: ChainSpec, m: int) -> float:
    """``nu(m) = <h| Pi M^|m| |h>``."""
    m = abs(int(m))
    Mm = np.linalg.matrix_power(spec.M, m)
    val = np.conj(spec.h) @ (spec.p[:, None] * Mm) @ spec.h
    return float(val.real)


def markov_ac_density(data: ChainSpectralData, form: str = "eigen") -> AcDensity:
    """Diffuse density ``f(k)`` of a reversible chain.

    ``form="eigen"`` sums ``|beta_j|^2 (1 - l^2) / (1 - 2 cos(2 pi k) l + l^2)``
    over ``j >= 2``; ``form="operator"`` evaluates the resolvent of ``S1``
    directly and subtracts the Perron contribution.
    """
    lam = data.eigenvalues[1:]
    b2 = np.abs(data.beta[1:]) ** 2
    if form == "eigen":
        def f(k):
            c = np.cos(2 * np.pi * np.asarray(k, float))[..., None]
            return np.sum(b2 * (1 - lam**2) / (1 - 2 * c * lam + lam**2), axis=-1)
    elif form == "operator":
        S1 = data.S1
        n = S1.shape[0]
        Ph = data.basis @ data.beta
        mean2 = abs(data.beta[0]) ** 2
        I = np.eye(n)
        S1sq = S1 @ S1

        def f(k):
            k = np.atleast_1d(np.asarray(k, float))
            out = np.empty(k.shape)
            for i, kk in enumerate(k.ravel()):
                R = np.linalg.solve(I - 2 * np.cos(2 * np.pi * kk) * S1 + S1sq, I - S1sq)
                out.flat[i] = (np.conj(Ph) @ R @ Ph).real - mean2
            return out
    else:
        raise ValidationError("form must be 'eigen' or 'operator'")
    return AcDensity(f, [[1.0]])


def markov_diffraction(data: ChainSpectralData):
    """``(pp, ac)`` pair: ``|<h>|^2`` on the integers plus :func:`markov_ac_density`."""
    pp = PurePointSpectrum([[0.0]], [abs(data.beta[0]) ** 2], period=[[1.0]])
    return pp, markov_ac_density(data)


@njit(cache=True)
def _chain_kernel(cum_p, cum_M, n_steps, s):
    out = np.empty(n_steps, dtype=np.int64)
    n = cum_p.shape[0]
    u = _rng.uniform(s)
    x = 0
    while x < n - 1 and u >= cum_p[x]:
        x += 1
    out[0] = x
    for t in range(1, n_steps):
        u = _rng.uniform(s)
        y = 0
        while y < n - 1 and u >= cum_M[x, y]:
            y += 1
        x = y
        out[t] = x
    return out


def sample_chain_states(spec: ChainSpec, length: int, seed: int) -> np.ndarray:
    """State sequence of length ``length`` started from the stationary vector."""
    if length < 1:
        raise ValidationError("length must be >= 1")
    s = _rng.make_state(seed)
    return _chain_kernel(np.cumsum(spec.p), np.cumsum(spec.M, axis=1), int(length), s)


def sample_chain(spec: ChainSpec, length: int, seed: int) -> WeightedDiracComb:
    """Comb on ``0..N-1`` with weights drawn along one stationary trajectory."""
    states = sample_chain_states(spec, length, seed)
    pos = np.arange(length, dtype=float)
    return WeightedDiracComb(pos, spec.h[states], (0.0, float(length)), check=False)


class MarkovChainModel(BaseEstimator):
    """Estimator-style wrapper: ``fit`` analyses the chain, ``predict`` gives ``f(k)``.

    Parameters
    ----------
    h : array_like
        Scattering strengths.
    M : array_like
        Transition matrix.
    """

    def __init__(self, h=(1.0, 0.0), M=((0.8, 0.2), (0.2, 0.8))):
        self.h = h
        self.M = M

    def fit(self, X=None, y=None):
        self.spec_, self.data_ = analyze_chain(self.h, self.M)
        self.pp_, self.ac_ = markov_diffraction(self.data_)
        return self

    def predict(self, k):
        return self.ac_(np.asarray(k, float))

    def autocorrelation(self, m):
        return markov_autocorrelation(self.spec_, m)
