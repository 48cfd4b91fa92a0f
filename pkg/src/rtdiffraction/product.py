"""Stochastic product tilings built from independent 1D random tilings."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import ValidationError
from .spectral import WeightedDiracComb
from .tiling1d import (
    RandomTilingSpec1D,
    rt_ac_density,
    rt_autocorr_coeff,
    rt_autocorrelation_at,
    rt_density,
    rt_pp_part,
    sample_rt,
)

__all__ = [
    "ProductSpec",
    "ProductTerm",
    "ProductSpectrumDescriptor",
    "product_autocorr",
    "product_spectrum",
    "product_sample",
    "ProductTilingModel",
]


class ProductSpec:
    """Cartesian product of ``D`` independent 1D random tilings."""

    def __init__(self, factors: Sequence[RandomTilingSpec1D]):
        factors = list(factors)
        if not factors:
            raise ValidationError("a product needs at least one factor")
        for f in factors:
            if not isinstance(f, RandomTilingSpec1D):
                raise ValidationError("factors must be RandomTilingSpec1D instances")
        self.factors = factors

    @property
    def D(self) -> int:
        return len(self.factors)

    @property
    def density(self) -> float:
        return float(np.prod([rt_density(f) for f in self.factors]))


def _factor_coeff(spec: RandomTilingSpec1D, z) -> float:
    if np.isscalar(z):
        return rt_autocorrelation_at(spec, float(z))
    z = tuple(z)
    if len(z) == 2 and isinstance(z[0], (tuple, list, np.ndarray)):
        return rt_autocorr_coeff(spec, z[0], z[1])
    return rt_autocorr_coeff(spec, z)


def product_autocorr(spec: ProductSpec, z) -> float:
    """``nu(z) = prod_i nu_i(z_i)``.

    Each ``z_i`` is a real distance (commensurate factors), a multi-index, or
    a ``(multi_index, sign)`` pair.
    """
    z = list(z)
    if len(z) != spec.D:
        raise ValidationError("need one difference descriptor per factor")
    return float(np.prod([_factor_coeff(f, zi) for f, zi in zip(spec.factors, z)]))


@dataclass(frozen=True)
class ProductTerm:
    """One of the ``2^D`` cross terms: which factors contribute pp or ac."""

    parts: tuple
    beta: float
    kind: str
    present: bool

    @property
    def m(self) -> int:
        return sum(p == "ac" for p in self.parts)


class ProductSpectrumDescriptor:
    """Symbolic product spectrum with evaluators for the pure terms."""

    def __init__(self, spec: ProductSpec, terms):
        self.spec = spec
        self.terms = list(terms)
        self._pp = [rt_pp_part(f) for f in spec.factors]
        self._ac = [rt_ac_density(f) for f in spec.factors]

    def term(self, parts) -> ProductTerm:
        parts = tuple(parts)
        for t in self.terms:
            if t.parts == parts:
                return t
        raise KeyError(parts)

    def pp_intensity(self, k) -> np.ndarray:
        """All-pp term: product of factor Bragg intensities at each row of ``k``."""
        k = np.atleast_2d(np.asarray(k, float))
        out = np.ones(k.shape[0])
        for i, pp in enumerate(self._pp):
            out *= pp.intensity_at(k[:, i : i + 1])
        return out

    def pp_peaks_in_box(self, lo, hi):
        lo = np.broadcast_to(np.asarray(lo, float), (self.spec.D,))
        hi = np.broadcast_to(np.asarray(hi, float), (self.spec.D,))
        per = [pp.peaks_in_box([a], [b]) for pp, a, b in zip(self._pp, lo, hi)]
        pos, inten = [], []
        for combo in itertools.product(*[range(len(p[1])) for p in per]):
            pos.append([per[i][0][j, 0] for i, j in enumerate(combo)])
            inten.append(np.prod([per[i][1][j] for i, j in enumerate(combo)]))
        return np.array(pos).reshape(-1, self.spec.D), np.array(inten)

    def ac_density(self, k) -> np.ndarray:
        """All-ac term: product of factor diffuse densities."""
        k = np.atleast_2d(np.asarray(k, float))
        out = np.ones(k.shape[0])
        for i, g in enumerate(self._ac):
            out *= g(k[:, i])
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "D": self.spec.D,
                "factors": [repr(f) for f in self.spec.factors],
                "terms": [
                    {"parts": list(t.parts), "beta": t.beta, "kind": t.kind, "present": t.present}
                    for t in self.terms
                ],
            },
            indent=1,
        )


def product_spectrum(spec: ProductSpec) -> ProductSpectrumDescriptor:
    """Enumerate the ``2^D`` terms with scaling exponent ``beta = 1 - m/(2D)``.

    A term with ``m`` diffuse factors is pure point for ``m = 0``, absolutely
    continuous for ``m = D`` and singular continuous otherwise. A term is
    marked absent when one of its diffuse factors vanishes identically (a
    lattice factor).
    """
    D = spec.D
    no_ac = [f.is_lattice for f in spec.factors]
    terms = []
    for parts in itertools.product(("pp", "ac"), repeat=D):
        m = sum(p == "ac" for p in parts)
        kind = "pp" if m == 0 else ("ac" if m == D else "sc")
        present = not any(p == "ac" and z for p, z in zip(parts, no_ac))
        terms.append(ProductTerm(parts, 1.0 - m / (2.0 * D), kind, present))
    return ProductSpectrumDescriptor(spec, terms)


def product_sample(spec: ProductSpec, counts, seed: int, window=None) -> WeightedDiracComb:
    """Cartesian product of independent factor samples (``D <= 2``).

    Parameters
    ----------
    counts : sequence of int
        Tiles per axis.
    window : sequence of float, optional
        Crop each axis to ``[0, window_i)``.
    """
    if spec.D > 2:
        raise ValidationError("sampling to a comb is limited to D <= 2")
    counts = list(counts)
    if len(counts) != spec.D:
        raise ValidationError("need one tile count per factor")
    seeds = np.random.SeedSequence(int(seed)).spawn(spec.D)
    axes = []
    for i, (f, n) in enumerate(zip(spec.factors, counts)):
        s = int(seeds[i].generate_state(1)[0])
        wl = None if window is None else window[i]
        axes.append(sample_rt(f, n, s, wl))
    if spec.D == 1:
        return axes[0]
    x, y = axes
    pts = np.stack(np.meshgrid(x.points[:, 0], y.points[:, 0], indexing="ij"), -1).reshape(-1, 2)
    lo = [x.window[0][0], y.window[0][0]]
    hi = [x.window[1][0], y.window[1][0]]
    return WeightedDiracComb(pts, None, (lo, hi), check=False)


class ProductTilingModel(BaseEstimator):
    """Estimator-style wrapper producing the product spectrum descriptor.

    Parameters
    ----------
    factors : sequence of (lengths, probabilities)
    """

    def __init__(self, factors=(((2, 1), (0.5, 0.5)), ((2, 1), (0.5, 0.5)))):
        self.factors = factors

    def fit(self, X=None, y=None):
        self.spec_ = ProductSpec([RandomTilingSpec1D(u, p) for u, p in self.factors])
        self.descriptor_ = product_spectrum(self.spec_)
        return self

    def predict(self, k):
        return self.descriptor_.pp_intensity(k)
