"""One-dimensional random tilings with i.i.d. tiles of several lengths."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from numbers import Integral, Rational

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import ValidationError, check_positive_scalar, check_probability_vector
from .spectral import AcDensity, PurePointSpectrum, WeightedDiracComb

__all__ = [
    "RandomTilingSpec1D",
    "rt_density",
    "rt_autocorr_coeff",
    "rt_autocorrelation_at",
    "rt_ac_density",
    "rt_pp_part",
    "rt_diffraction",
    "rt_partial_sum",
    "rt_partial_sum_bound",
    "sample_rt",
    "mean_bridge_identity",
    "RandomTilingModel",
]

MAX_BRIDGE_N = 25


def _parse_length(u):
    if isinstance(u, (Integral, Rational)) and not isinstance(u, bool):
        return Fraction(u)
    if isinstance(u, str):
        return Fraction(u)
    return float(u)


class RandomTilingSpec1D:
    """Tile lengths and probabilities of a 1D random tiling.

    Parameters
    ----------
    lengths : sequence
        Positive tile lengths. Integers, :class:`fractions.Fraction` or
        strings like ``"3/2"`` carry exact rational tags; plain floats do not,
        so a float family is treated as incommensurate unless all lengths are
        identical.
    probabilities : sequence of float
        Tile probabilities, positive with unit sum.
    xi, a : optional
        Explicit rational tag ``u_i = xi * a_i``; overrides detection.
    """

    def __init__(self, lengths, probabilities, xi=None, a=None):
        parsed = [_parse_length(u) for u in lengths]
        self.u = np.array([float(u) for u in parsed])
        if self.u.size < 1 or np.any(self.u <= 0):
            raise ValidationError("tile lengths must be positive")
        self.p = check_probability_vector(probabilities)
        if self.p.size != self.u.size:
            raise ValidationError("lengths and probabilities must have equal length")
        if (xi is None) != (a is None):
            raise ValidationError("xi and a must be given together")
        if xi is not None:
            a = tuple(int(v) for v in a)
            if len(a) != self.u.size or math.gcd(*a) != 1 or min(a) <= 0:
                raise ValidationError("a must be positive coprime integers, one per tile")
            xi = check_positive_scalar(xi, "xi")
            if not np.allclose(self.u, xi * np.array(a), rtol=1e-12, atol=0):
                raise ValidationError("lengths do not match the tag xi * a")
            self.xi, self.a = xi, a
        elif all(isinstance(u, Fraction) for u in parsed):
            den = math.lcm(*(u.denominator for u in parsed))
            ints = [int(u * den) for u in parsed]
            g = math.gcd(*ints)
            self.xi = float(Fraction(g, den))
            self.a = tuple(i // g for i in ints)
        elif np.all(self.u == self.u[0]):
            self.xi, self.a = float(self.u[0]), (1,) * self.u.size
        else:
            self.xi, self.a = None, None

    @property
    def n(self) -> int:
        return self.u.size

    @property
    def commensurate(self) -> bool:
        return self.xi is not None

    @property
    def is_lattice(self) -> bool:
        return self.commensurate and len(set(self.a)) == 1

    def __repr__(self):
        tag = f", xi={self.xi}, a={self.a}" if self.commensurate else ""
        return f"RandomTilingSpec1D(u={self.u.tolist()}, p={self.p.tolist()}{tag})"


def rt_density(spec: RandomTilingSpec1D) -> float:
    """Point density ``d = 1 / (p . u)``."""
    return 1.0 / float(spec.p @ spec.u)


def _multinomial(m) -> int:
    out, total = 1, 0
    for k in m:
        total += k
        out *= math.comb(total, k)
    return out


def _term(spec, m) -> float:
    return _multinomial(m) * float(np.prod(spec.p ** np.asarray(m, float)))


def rt_autocorr_coeff(spec: RandomTilingSpec1D, m, sign: int = 1) -> float:
    """Autocorrelation coefficient at ``z = sign * (m . u)``.

    For incommensurate lengths the representation of ``z`` is unique and the
    coefficient is ``d * multinomial(m) * p^m``. With rational tags every
    multi-index ``m'`` with ``m' . a = m . a`` contributes.
    """
    m = tuple(int(v) for v in m)
    if len(m) != spec.n or min(m) < 0:
        raise ValidationError("m must be a nonnegative multi-index with one entry per tile")
    if sign not in (1, -1):
        raise ValidationError("sign must be +1 or -1")
    d = rt_density(spec)
    if not spec.commensurate:
        return d * _term(spec, m)
    target = sum(mi * ai for mi, ai in zip(m, spec.a))
    return d * _representation_sum(spec, target)


def _representation_sum(spec, target: int) -> float:
    """``sum_{m . a = target} multinomial(m) p^m`` by enumeration."""
    a = spec.a
    total = 0.0

    def rec(i, remaining, acc):
        nonlocal total
        if i == len(a) - 1:
            if remaining % a[i] == 0:
                total += _term(spec, acc + (remaining // a[i],))
            return
        for k in range(remaining // a[i] + 1):
            rec(i + 1, remaining - k * a[i], acc + (k,))

    rec(0, target, ())
    return total


def rt_autocorrelation_at(spec: RandomTilingSpec1D, z: float) -> float:
    """Coefficient at a real distance ``z`` for commensurate tilings."""
    if not spec.commensurate:
        raise ValidationError("distance lookup needs rational tags; use rt_autocorr_coeff")
    n = abs(z) / spec.xi
    if abs(n - round(n)) > 1e-9:
        return 0.0
    return rt_density(spec) * _representation_sum(spec, int(round(n)))


def _singular_value(spec) -> float:
    u, p = spec.u, spec.p
    if spec.commensurate:
        u = np.array(spec.a, float)
    num = sum(p[j] * p[l] * (u[j] - u[l]) ** 2 for j, l in itertools.combinations(range(spec.n), 2))
    return rt_density(spec) * num / float(p @ u) ** 2


def rt_ac_density(spec: RandomTilingSpec1D) -> AcDensity:
    """Diffuse density ``g(k) = d (1 - |r|^2) / |1 - r|^2``, ``r = sum p_j e^{-2 pi i k u_j}``.

    Numerator and denominator are evaluated through sines so no cancellation
    occurs near the exceptional points; where ``r(k) = 1`` the continuation
    value ``d sum_{j<l} p_j p_l (a_j - a_l)^2 / (p . a)^2`` is returned (``a``
    the integer tags, or the lengths themselves at ``k = 0`` without tags).
    """
    d = rt_density(spec)
    p = spec.p
    g0 = _singular_value(spec)
    pairs = list(itertools.combinations(range(spec.n), 2))

    if spec.commensurate:
        a = np.array(spec.a, float)
        xi = spec.xi

        def phases(k):
            t = k * xi
            return t - np.round(t), a
    else:
        u = spec.u

        def phases(k):
            return k, u

    def f(k):
        k = np.asarray(k, float)
        t, w = phases(k)
        x = t[..., None] * w
        # reduce arguments so exact multiples vanish exactly
        xr = x - np.round(x)
        s2 = np.sin(np.pi * xr) ** 2
        s1 = np.sin(2 * np.pi * xr)
        num = np.zeros(k.shape)
        for j, l in pairs:
            y = t * (w[j] - w[l])
            y = y - np.round(y)
            num += p[j] * p[l] * np.sin(np.pi * y) ** 2
        num *= 4.0
        den = (2.0 * (s2 @ p)) ** 2 + (s1 @ p) ** 2
        out = np.empty(k.shape)
        sing = den == 0
        out[~sing] = d * num[~sing] / den[~sing]
        out[sing] = g0
        return out

    period = [[1.0 / spec.xi]] if spec.commensurate else np.zeros((0, 1))
    dens = AcDensity(f, period, dimension=1)
    dens.singular_value = g0
    return dens


def rt_pp_part(spec: RandomTilingSpec1D) -> PurePointSpectrum:
    """``d^2`` on ``(1/xi) Z`` with rational tags, otherwise ``d^2`` at 0 only."""
    d2 = rt_density(spec) ** 2
    if spec.commensurate:
        return PurePointSpectrum([[0.0]], [d2], period=[[1.0 / spec.xi]])
    return PurePointSpectrum([[0.0]], [d2])


def rt_diffraction(spec: RandomTilingSpec1D):
    return rt_pp_part(spec), rt_ac_density(spec)


def rt_partial_sum(spec: RandomTilingSpec1D, k, N: int) -> np.ndarray:
    """``g_N(k) = d (1 + 2 Re sum_{m=1}^N r(k)^m)``."""
    k = np.atleast_1d(np.asarray(k, float))
    r = np.exp(-2j * np.pi * np.outer(k, spec.u)) @ spec.p
    m = np.arange(1, N + 1)
    # geometric sum written out to avoid the removable singularity at r = 1
    powers = r[:, None] ** m[None, :]
    return rt_density(spec) * (1.0 + 2.0 * powers.sum(axis=1).real)


def rt_partial_sum_bound(spec: RandomTilingSpec1D, k) -> np.ndarray:
    """Uniform bound ``d (1 + 4 / |1 - r(k)|)`` on ``|g_N(k)|``."""
    k = np.atleast_1d(np.asarray(k, float))
    r = np.exp(-2j * np.pi * np.outer(k, spec.u)) @ spec.p
    return rt_density(spec) * (1.0 + 4.0 / np.abs(1.0 - r))


def sample_rt(spec: RandomTilingSpec1D, n_tiles: int, seed: int, window_length=None):
    """Left endpoints of ``n_tiles`` i.i.d. tiles, unit weights.

    Positions are built from integer tile counts times lengths rather than a
    running float sum, so long samples stay exact to rounding of one product.
    With ``window_length`` the comb is cropped to ``[0, window_length)``,
    which must not exceed the sampled length.
    """
    n_tiles = int(n_tiles)
    if n_tiles < 1:
        raise ValidationError("n_tiles must be >= 1")
    rng = np.random.default_rng(seed)
    types = rng.choice(spec.n, size=n_tiles, p=spec.p)
    onehot = np.zeros((n_tiles, spec.n), dtype=np.int64)
    onehot[np.arange(n_tiles), types] = 1
    counts = np.cumsum(onehot, axis=0) - onehot
    if spec.commensurate:
        pos = (counts @ np.array(spec.a, dtype=np.int64)).astype(float) * spec.xi
        total = float(np.sum(np.array(spec.a)[types])) * spec.xi
    else:
        pos = counts @ spec.u
        total = float(np.sum(spec.u[types]))
    comb = WeightedDiracComb(pos, None, (0.0, total), check=False)
    comb.tile_types = types
    if window_length is not None:
        if window_length > total:
            raise ValidationError("window longer than the sampled tiling")
        comb = comb.crop(0.0, float(window_length))
    return comb


def mean_bridge_identity(spec: RandomTilingSpec1D, N: int):
    """``sum_{|m|=N} multinomial(m) p^m (m . u)`` against ``N (p . u)``."""
    N = int(N)
    if N < 0:
        raise ValidationError("N must be >= 0")
    if N > MAX_BRIDGE_N:
        raise ValidationError(f"N > {MAX_BRIDGE_N} is too large for exact enumeration")
    lhs = 0.0
    for m in _compositions(N, spec.n):
        lhs += _term(spec, m) * float(np.dot(m, spec.u))
    rhs = N * float(spec.p @ spec.u)
    if abs(lhs - rhs) > 1e-12 * max(abs(rhs), 1.0):
        raise AssertionError(f"identity violated: {lhs} != {rhs}")
    return lhs, rhs


def _compositions(N, n):
    if n == 1:
        yield (N,)
        return
    for k in range(N + 1):
        for rest in _compositions(N - k, n - 1):
            yield (k,) + rest


class RandomTilingModel(BaseEstimator):
    """Estimator-style wrapper around the exact 1D random tiling spectrum.

    Parameters
    ----------
    lengths : sequence
        Tile lengths (see :class:`RandomTilingSpec1D` for rational tags).
    probabilities : sequence of float
    """

    def __init__(self, lengths=(2, 1), probabilities=(0.5, 0.5)):
        self.lengths = lengths
        self.probabilities = probabilities

    def fit(self, X=None, y=None):
        self.spec_ = RandomTilingSpec1D(self.lengths, self.probabilities)
        self.density_ = rt_density(self.spec_)
        self.pp_, self.ac_ = rt_diffraction(self.spec_)
        return self

    def predict(self, k):
        return self.ac_(np.asarray(k, float))
