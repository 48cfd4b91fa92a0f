"""Coupling functions (inverse weighted adjacency) for the domino and lozenge dimers.

Domino: ``[x, y]`` is the discrete Fourier coefficient of ``1/lambda`` with
``lambda = 2i (z1 sin p1 + i z2 sin p2)`` sampled on the half-offset grid
``p_j = 2 pi (j + 1/2) / M``; the zeros of ``lambda`` sit on the unshifted
grid and are never hit.

Lozenge: ``[x, y]_LR`` is the coefficient of ``1 / (z1 v + z2 w + z3)``,
``v = exp(-i p1)``, ``w = exp(-i p2)``. One integration is done exactly by
Laurent expansion in ``w``; the remaining one is Gauss-Legendre on the arc
where the expansion applies.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from functools import lru_cache

import numpy as np

from .._validation import ValidationError, check_int, check_positive_scalar

__all__ = [
    "CouplingTable",
    "coupling_domino",
    "domino_coupling_grid",
    "domino_coupling_table",
    "coupling_lozenge",
    "lozenge_single_integral",
    "lozenge_coupling_table",
    "lozenge_phi0",
    "check_triangle",
    "LOZENGE_SYMMETRIES",
]

MIN_RESOLUTION = 256


# --------------------------------------------------------------------------
# domino


def _check_resolution(M):
    M = check_int(M, "resolution", minimum=MIN_RESOLUTION)
    if M & (M - 1):
        raise ValidationError("resolution must be a power of two")
    return M


@lru_cache(maxsize=8)
def _domino_fft(z1: float, z2: float, M: int) -> np.ndarray:
    phi = 2 * np.pi * (np.arange(M) + 0.5) / M
    lam = 2j * (z1 * np.sin(phi)[:, None] + 1j * z2 * np.sin(phi)[None, :])
    F = np.fft.fft2(1.0 / lam) / M**2
    F.setflags(write=False)
    return F


def _domino_raw(x, y, z1, z2, M):
    F = _domino_fft(z1, z2, M)
    phase = np.exp(-1j * np.pi * (x + y) / M)
    return F[x % M, y % M] * phase


def _domino_canonical(x, y, z1, z2, M, extrapolate):
    val = _domino_raw(x, y, z1, z2, M)
    if extrapolate:
        val2 = _domino_raw(x, y, z1, z2, 2 * M)
        val = (4.0 * val2 - val) / 3.0
    # kernel case table: real for x odd, imaginary for y odd
    return np.where(x % 2 == 1, val.real + 0j, 1j * val.imag)


def coupling_domino(x, y, z1, z2, resolution: int = 1024, extrapolate: bool = False) -> complex:
    """Domino coupling ``[x, y]``.

    Parameters
    ----------
    x, y : int
        Difference vector ``k' - k``.
    z1, z2 : float
        Horizontal and vertical activities.
    resolution : int
        Grid size ``M`` (power of two, at least 256).
    extrapolate : bool
        Richardson step ``(4 T_2M - T_M) / 3`` removing the ``M^-2`` error
        that appears for unequal activities.
    """
    z1 = check_positive_scalar(z1, "z1")
    z2 = check_positive_scalar(z2, "z2")
    M = _check_resolution(resolution)
    x, y = int(x), int(y)
    if (x - y) % 2 == 0:
        return 0j
    # antisymmetry is imposed through a canonical representative
    sign = 1
    if x < 0 or (x == 0 and y < 0):
        x, y, sign = -x, -y, -1
    return complex(sign * _domino_canonical(np.array(x), np.array(y), z1, z2, M, extrapolate))


def domino_coupling_grid(z1, z2, radius: int, resolution: int = 1024, extrapolate=False):
    """Array ``T[x + R, y + R] = [x, y]`` for ``|x|, |y| <= R``."""
    z1 = check_positive_scalar(z1, "z1")
    z2 = check_positive_scalar(z2, "z2")
    M = _check_resolution(resolution)
    R = check_int(radius, "radius", minimum=1)
    if 2 * R + 2 > M:
        raise ValidationError("resolution too small for the requested radius")
    r = np.arange(-R, R + 1)
    X, Y = np.meshgrid(r, r, indexing="ij")
    canon = (X > 0) | ((X == 0) & (Y > 0))
    val = _domino_canonical(np.where(canon, X, -X), np.where(canon, Y, -Y), z1, z2, M, extrapolate)
    val = np.where(canon, val, -val)
    val[(X - Y) % 2 == 0] = 0
    return val


def domino_coupling_table(z1, z2, radius: int = 32, resolution: int = 1024, extrapolate=None):
    """:class:`CouplingTable` of domino couplings; extrapolates when ``z1 != z2`` by default."""
    if extrapolate is None:
        extrapolate = float(z1) != float(z2)
    vals = domino_coupling_grid(z1, z2, radius, resolution, extrapolate)
    return CouplingTable("domino", (float(z1), float(z2)), int(radius), int(resolution), vals,
                         extrapolated=bool(extrapolate))


# --------------------------------------------------------------------------
# lozenge


def check_triangle(z1, z2, z3):
    z = [check_positive_scalar(v, f"z{i + 1}") for i, v in enumerate((z1, z2, z3))]
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        if not z[i] > abs(z[j] - z[k]):
            raise ValidationError(
                "activities violate the strict triangle condition z_i > |z_j - z_k| "
                "(Kasteleyn boundary)"
            )
    return z


def lozenge_phi0(z1, z2, z3) -> float:
    """``arccos((z1^2 - z2^2 - z3^2) / (2 z2 z3))``."""
    z1, z2, z3 = check_triangle(z1, z2, z3)
    return float(np.arccos((z1**2 - z2**2 - z3**2) / (2 * z2 * z3)))


@lru_cache(maxsize=16)
def _gauss(n):
    return np.polynomial.legendre.leggauss(n)


def _gl(f, a, b, n):
    t, w = _gauss(n)
    x = 0.5 * (b - a) * t + 0.5 * (b + a)
    return 0.5 * (b - a) * np.sum(w * f(x))


def coupling_lozenge(x, y, z1, z2, z3, resolution: int = 256) -> float:
    """Lozenge coupling ``[x, y | z1, z2, z3]_LR``.

    The ``w``-integral is the Laurent coefficient of ``1 / (c + z2 w)`` with
    ``c = z1 exp(-i p1) + z3``: ``(-z2)^y / c^(y+1)`` for ``y >= 0`` where
    ``|c| > z2``, ``(-c)^(-y-1) / z2^(-y)`` for ``y < 0`` where ``|c| < z2``.
    The outer integral runs over the corresponding arc with ``resolution``
    Gauss-Legendre nodes; the result is real.
    """
    z1, z2, z3 = check_triangle(z1, z2, z3)
    x, y = int(x), int(y)
    kappa = (z2**2 - z1**2 - z3**2) / (2 * z1 * z3)
    phis = float(np.arccos(kappa))

    if y >= 0:
        def f(p):
            c = z1 * np.exp(-1j * p) + z3
            return (np.exp(1j * x * p) * (-z2) ** y / c ** (y + 1)).real
        a, b = 0.0, phis
    else:
        def f(p):
            c = z1 * np.exp(-1j * p) + z3
            return (np.exp(1j * x * p) * (-c) ** (-y - 1) / z2 ** (-y)).real
        a, b = phis, np.pi
    return float(_gl(f, a, b, resolution) / np.pi)


def lozenge_single_integral(x, y, z1, z2, z3, resolution: int = 256, literal: bool = False) -> float:
    """Reduced one-dimensional form for ``x <= -1``.

    ``[x, y] = -((-z1)^x / pi) int_{phi0}^{pi} Re[e^{-i y t} (z3 + z2 e^{i t})^(-x-1)] dt``,
    obtained from the residue of the ``v`` integral. ``literal=True`` uses
    ``(z2 + z3 w)`` in place of ``(z3 + z2 w)`` for comparison; the two agree
    only when ``z2 == z3``.
    """
    z1, z2, z3 = check_triangle(z1, z2, z3)
    x, y = int(x), int(y)
    if x > -1:
        raise ValidationError("the reduced form applies to x <= -1")
    phi0 = lozenge_phi0(z1, z2, z3)
    a_, b_ = (z2, z3) if literal else (z3, z2)

    def f(t):
        return (np.exp(-1j * y * t) * (a_ + b_ * np.exp(1j * t)) ** (-x - 1)).real

    return float(-((-z1) ** x) / np.pi * _gl(f, phi0, np.pi, resolution))


# each entry maps (x, y, (z1, z2, z3)) to an equivalent argument triple
LOZENGE_SYMMETRIES = (
    lambda x, y, z: (x, -x - y - 1, (z[0], z[2], z[1])),
    lambda x, y, z: (y, x, (z[1], z[0], z[2])),
    lambda x, y, z: (y, -x - y - 1, (z[1], z[2], z[0])),
    lambda x, y, z: (-x - y - 1, x, (z[2], z[0], z[1])),
    lambda x, y, z: (-x - y - 1, y, (z[2], z[1], z[0])),
)


def lozenge_coupling_table(z1, z2, z3, radius: int = 32, resolution: int = 256):
    """:class:`CouplingTable` of lozenge couplings for ``|x|, |y| <= radius``."""
    z = check_triangle(z1, z2, z3)
    R = check_int(radius, "radius", minimum=1)
    kappa = (z[1] ** 2 - z[0] ** 2 - z[2] ** 2) / (2 * z[0] * z[2])
    phis = float(np.arccos(kappa))
    t, w = _gauss(resolution)
    r = np.arange(-R, R + 1)
    vals = np.zeros((2 * R + 1, 2 * R + 1), dtype=complex)
    for y in r:
        if y >= 0:
            a, b = 0.0, phis
        else:
            a, b = phis, np.pi
        p = 0.5 * (b - a) * t + 0.5 * (b + a)
        c = z[0] * np.exp(-1j * p) + z[2]
        inner = (-z[1]) ** y / c ** (y + 1) if y >= 0 else (-c) ** (-y - 1) / z[1] ** (-y)
        ph = np.exp(1j * np.outer(r, p))
        vals[:, y + R] = ((ph * inner) @ w).real * 0.5 * (b - a) / np.pi
    return CouplingTable("lozenge", tuple(z), R, int(resolution), vals)


# --------------------------------------------------------------------------
# table container


class CouplingTable:
    """Window of coupling values ``T[x, y]`` for ``|x|, |y| <= radius``.

    Parameters
    ----------
    model : {"domino", "lozenge"}
    activities : tuple of float
    radius : int
    resolution : int
        Quadrature size used.
    values : ndarray, shape (2R+1, 2R+1)
        ``values[x + R, y + R]``.
    """

    def __init__(self, model, activities, radius, resolution, values, extrapolated=False):
        self.model = str(model)
        self.activities = tuple(float(z) for z in activities)
        self.radius = int(radius)
        self.resolution = int(resolution)
        self.values = np.asarray(values, dtype=complex)
        self.extrapolated = bool(extrapolated)
        if self.values.shape != (2 * self.radius + 1,) * 2:
            raise ValidationError("values must be a (2R+1, 2R+1) array")

    def __call__(self, x, y):
        """Vectorised lookup; out-of-window arguments raise."""
        x = np.asarray(x)
        y = np.asarray(y)
        R = self.radius
        if np.any(np.abs(x) > R) or np.any(np.abs(y) > R):
            raise ValidationError("coupling table window too small")
        return self.values[x + R, y + R]

    def __getitem__(self, xy):
        return complex(self(*xy))

    def key(self) -> str:
        payload = json.dumps([self.model, self.activities, self.radius, self.resolution])
        return hashlib.sha1(payload.encode()).hexdigest()[:16]

    def save(self, path):
        header = json.dumps(
            {
                "model": self.model,
                "activities": self.activities,
                "radius": self.radius,
                "resolution": self.resolution,
                "extrapolated": self.extrapolated,
                "dtype": "complex128",
            }
        ).encode()
        with open(path, "wb") as fh:
            fh.write(b"CPLT")
            fh.write(struct.pack("<Q", len(header)))
            fh.write(header)
            fh.write(np.ascontiguousarray(self.values, dtype="<c16").tobytes())

    @classmethod
    def load(cls, path) -> "CouplingTable":
        with open(path, "rb") as fh:
            if fh.read(4) != b"CPLT":
                raise ValidationError(f"{path} is not a coupling table")
            (n,) = struct.unpack("<Q", fh.read(8))
            meta = json.loads(fh.read(n).decode())
            R = meta["radius"]
            vals = np.frombuffer(fh.read(), dtype="<c16").reshape(2 * R + 1, 2 * R + 1)
        return cls(meta["model"], meta["activities"], R, meta["resolution"], vals.copy(),
                   meta.get("extrapolated", False))

    @classmethod
    def cached(cls, builder, cache_dir, model, activities, radius, resolution, **kw):
        """Load from ``cache_dir`` when present, otherwise build and store."""
        payload = json.dumps([model, [float(a) for a in activities], int(radius), int(resolution)])
        name = f"{model}-{hashlib.sha1(payload.encode()).hexdigest()[:16]}.cplt"
        path = os.path.join(cache_dir, name)
        if os.path.exists(path):
            return cls.load(path)
        table = builder(*activities, radius=radius, resolution=resolution, **kw)
        os.makedirs(cache_dir, exist_ok=True)
        table.save(path)
        return table
