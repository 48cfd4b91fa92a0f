"""File formats: intensity CSV, 16-bit PGM maps with JSON sidecars, peak lists, chain configs."""

from __future__ import annotations

import configparser
import csv
import json
import os

import numpy as np

from ._validation import ValidationError
from .spectral import KGrid, PurePointSpectrum

__all__ = [
    "write_intensity_csv",
    "read_intensity_csv",
    "write_pgm",
    "read_pgm",
    "write_peaks_json",
    "read_peaks_json",
    "parse_complex_list",
    "parse_matrix",
    "read_chain_config",
    "write_comb_csv",
]


def write_intensity_csv(path, grid: KGrid, values) -> None:
    """CSV with header ``k1[,k2],intensity``; rows in C order of the grid."""
    values = np.asarray(values, float).reshape(grid.shape)
    pts = grid.points()
    cols = [f"k{i + 1}" for i in range(grid.dimension)] + ["intensity"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for p, v in zip(pts, values.ravel()):
            w.writerow([repr(float(c)) for c in p] + [repr(float(v))])


def read_intensity_csv(path):
    """Return ``(points, values)`` from :func:`write_intensity_csv` output."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[-1] != "intensity" or not all(h.startswith("k") for h in header[:-1]):
            raise ValidationError(f"{path}: unexpected header {header}")
        rows = np.array([[float(c) for c in row] for row in r])
    return rows[:, :-1], rows[:, -1]


def write_pgm(path, values, meta: dict | None = None) -> dict:
    """Binary 16-bit PGM (P5, big-endian) plus ``path + '.json'`` sidecar.

    Row ``i`` of the image is ``values[i]``. Values are mapped linearly from
    ``[min, max]`` to ``[0, 65535]``; the sidecar records both ends, the shape
    and any extra ``meta``.
    """
    a = np.asarray(values, float)
    if a.ndim != 2:
        raise ValidationError("PGM output needs a 2D array")
    lo, hi = float(np.min(a)), float(np.max(a))
    scale = 65535.0 / (hi - lo) if hi > lo else 0.0
    q = np.round((a - lo) * scale).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{a.shape[1]} {a.shape[0]}\n65535\n".encode("ascii"))
        fh.write(q.tobytes())
    side = {"min": lo, "max": hi, "rows": a.shape[0], "cols": a.shape[1], **(meta or {})}
    with open(str(path) + ".json", "w") as fh:
        json.dump(side, fh, indent=1, sort_keys=True)
    return side


def read_pgm(path):
    """Inverse of :func:`write_pgm`: ``(values, sidecar)`` with values rescaled."""
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValidationError(f"{path} is not a binary PGM")
    cols, rows = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    q = np.frombuffer(parts[3], dtype=">u2").reshape(rows, cols).astype(float)
    side = {}
    if os.path.exists(str(path) + ".json"):
        with open(str(path) + ".json") as fh:
            side = json.load(fh)
    lo, hi = side.get("min", 0.0), side.get("max", float(maxval))
    return lo + q * (hi - lo) / maxval, side


def write_peaks_json(path, spectrum: PurePointSpectrum, lo=None, hi=None) -> None:
    with open(path, "w") as fh:
        fh.write(spectrum.to_json(lo, hi))


def read_peaks_json(path) -> PurePointSpectrum:
    with open(path) as fh:
        return PurePointSpectrum.from_json(fh.read())


def write_comb_csv(path, comb) -> None:
    """Positions and complex weights of a comb, header ``x1[,x2],re,im``."""
    cols = [f"x{i + 1}" for i in range(comb.dimension)] + ["re", "im"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for p, c in zip(comb.points, comb.weights):
            w.writerow([repr(float(v)) for v in p] + [repr(float(c.real)), repr(float(c.imag))])


def parse_complex_list(text: str) -> np.ndarray:
    """``"1 0; 0.5 -1"`` (re im pairs separated by ``;``) or plain reals ``"1 0"``."""
    text = text.strip()
    if ";" in text:
        out = []
        for item in text.split(";"):
            vals = item.split()
            if len(vals) != 2:
                raise ValidationError(f"expected 're im' pairs, got {item!r}")
            out.append(complex(float(vals[0]), float(vals[1])))
        return np.array(out)
    return np.array([complex(v.replace("i", "j")) for v in text.split()])


def parse_matrix(text: str) -> np.ndarray:
    """Row-major matrix, rows separated by ``;``."""
    rows = [[float(v) for v in r.split()] for r in text.strip().split(";") if r.strip()]
    if len({len(r) for r in rows}) != 1:
        raise ValidationError("matrix rows must have equal length")
    return np.array(rows)


def read_chain_config(source):
    """Chain definition ``(h, M)`` from a key-value file or string.

    Expected keys in section ``[chain]``: ``states`` (count), ``h`` as
    ``re im`` pairs separated by ``;``, and ``M`` row-major with rows
    separated by ``;``.
    """
    cp = configparser.ConfigParser()
    if os.path.exists(str(source)):
        cp.read(source)
    else:
        cp.read_string(str(source))
    if "chain" not in cp:
        raise ValidationError("missing [chain] section")
    sec = cp["chain"]
    h = parse_complex_list(sec["h"])
    M = parse_matrix(sec["M"])
    n = int(sec.get("states", len(h)))
    if len(h) != n or M.shape != (n, n):
        raise ValidationError("chain config sizes disagree with 'states'")
    return h, M
