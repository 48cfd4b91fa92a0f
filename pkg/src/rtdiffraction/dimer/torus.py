"""Exact finite-torus data for dimer models by column transfer matrices.

Sizes are capped at 8 x 8, which keeps the transfer matrices at 256 x 256.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .._validation import ValidationError, check_int, check_positive_scalar
from .coupling import check_triangle

__all__ = [
    "MAX_TORUS",
    "TorusData",
    "domino_torus",
    "lozenge_torus",
    "enumerate_domino_matchings",
    "ledermann_check",
]

MAX_TORUS = 8


@dataclass(frozen=True)
class TorusData:
    """Exact partition sum and bond probabilities on an ``m x n`` torus.

    ``bond_probabilities[i]`` is the probability that one fixed bond of
    orientation ``i + 1`` is occupied; by translation invariance it is the
    same for every bond of that orientation.
    """

    model: str
    m: int
    n: int
    partition: float
    bond_probabilities: np.ndarray

    @property
    def densities(self) -> np.ndarray:
        """Orientation fractions of the tiles."""
        if self.model == "domino":
            # each site carries one horizontal and one vertical bond; two sites per tile
            b = 2 * self.bond_probabilities
        else:
            b = self.bond_probabilities
        return b / b.sum()


def _size(m, n):
    m = check_int(m, "m", minimum=2, even=True)
    n = check_int(n, "n", minimum=2, even=True)
    if m > MAX_TORUS or n > MAX_TORUS:
        raise ValidationError(f"torus size capped at {MAX_TORUS} x {MAX_TORUS}")
    return m, n


def _cycle_vertical_fills(rest: int, n: int):
    """Sets of vertical bonds exactly covering the sites ``rest`` of an ``n``-cycle.

    Bond ``y`` joins ``y`` and ``y + 1 mod n``; for ``n = 2`` the two bonds
    are distinct parallel edges.
    """
    fills = []
    for sub in range(1 << n):
        cover = 0
        ok = True
        for y in range(n):
            if sub >> y & 1:
                pair = 1 << y | 1 << (y + 1) % n
                if cover & pair:
                    ok = False
                    break
                cover |= pair
        if ok and cover == rest:
            fills.append([y for y in range(n) if sub >> y & 1])
    return fills


def _domino_transitions(n):
    """``(in_mask, out_mask, n_vertical, vertical_bonds)`` per column fill."""
    trans = []
    full = (1 << n) - 1
    fills = {r: _cycle_vertical_fills(r, n) for r in range(1 << n)}
    for inc in range(1 << n):
        free = full & ~inc
        for out in range(1 << n):
            if out & ~free:
                continue
            for f in fills[free & ~out]:
                trans.append((inc, out, len(f), f))
    return trans


def domino_torus(z1, z2, m, n) -> TorusData:
    """Weighted domino tilings of the ``m x n`` torus (``m`` columns of height ``n``)."""
    z1 = check_positive_scalar(z1, "z1")
    z2 = check_positive_scalar(z2, "z2")
    m, n = _size(m, n)
    trans = _domino_transitions(n)
    S = 1 << n
    T = np.zeros((S, S))
    Th = np.zeros((S, S))  # horizontal bond (0, 0)-(1, 0) occupied
    Tv = np.zeros((S, S))  # vertical bond (0, 0)-(0, 1) occupied
    for inc, out, nv, f in trans:
        w = z1 ** bin(out).count("1") * z2**nv
        T[inc, out] += w
        if out & 1:
            Th[inc, out] += w
        if 0 in f:
            Tv[inc, out] += w
    P = np.linalg.matrix_power(T, m - 1)
    Z = float(np.trace(P @ T))
    ph = float(np.trace(P @ Th)) / Z
    pv = float(np.trace(P @ Tv)) / Z
    return TorusData("domino", m, n, Z, np.array([ph, pv]))


def enumerate_domino_matchings(m, n, z1=1.0, z2=1.0):
    """Brute-force list of all domino matchings on the ``m x n`` torus.

    Returns ``(weights, horizontal_first_bond, vertical_first_bond)`` arrays,
    one entry per matching; intended for sizes up to 4 x 4.
    """
    m, n = _size(m, n)
    if m * n > 16:
        raise ValidationError("brute-force enumeration is limited to 16 sites")
    N = m * n
    edges = []
    for x in range(m):
        for y in range(n):
            a = x * n + y
            edges.append((a, ((x + 1) % m) * n + y, 0, (x, y)))
            edges.append((a, x * n + (y + 1) % n, 1, (x, y)))
    results = []

    def rec(used, chosen):
        if used == (1 << N) - 1:
            results.append(list(chosen))
            return
        a = next(i for i in range(N) if not used >> i & 1)
        for k, (u, v, o, xy) in enumerate(edges):
            if (u == a or v == a) and u != v:
                b = v if u == a else u
                if not used >> b & 1:
                    chosen.append(k)
                    rec(used | 1 << a | 1 << b, chosen)
                    chosen.pop()

    rec(0, [])
    w, h, v = [], [], []
    for ch in results:
        nh = sum(edges[k][2] == 0 for k in ch)
        w.append(z1**nh * z2 ** (len(ch) - nh))
        h.append(0 in ch)
        v.append(1 in ch)
    return np.array(w), np.array(h), np.array(v)


def _lozenge_transitions(n):
    """Column fills: ``inc`` marks R(x-1, y) still unmatched, ``out`` R(x, y) unmatched."""
    trans = []
    for inc in range(1 << n):
        free = [y for y in range(n) if not inc >> y & 1]
        for choice in itertools.product((1, 2), repeat=len(free)):
            types = [0] * n
            for y, c in zip(free, choice):
                types[y] = c
            # type 1 at L(x, y) takes R(x, y-1); type 2 takes R(x, y)
            hit = [0] * n
            for y, t in enumerate(types):
                if t == 1:
                    hit[(y - 1) % n] += 1
                elif t == 2:
                    hit[y] += 1
            if max(hit) > 1:
                continue
            out = sum(1 << y for y in range(n) if hit[y] == 0)
            counts = [types.count(t) for t in range(3)]
            trans.append((inc, out, counts, types[0]))
    return trans


def lozenge_torus(z1, z2, z3, m, n) -> TorusData:
    """Weighted lozenge tilings of the ``m x n`` rhombic torus."""
    z = check_triangle(z1, z2, z3)
    m, n = _size(m, n)
    S = 1 << n
    T = np.zeros((S, S))
    Tb = [np.zeros((S, S)) for _ in range(3)]
    for inc, out, counts, t0 in _lozenge_transitions(n):
        w = z[0] ** counts[0] * z[1] ** counts[1] * z[2] ** counts[2]
        T[inc, out] += w
        Tb[t0][inc, out] += w
    P = np.linalg.matrix_power(T, m - 1)
    Z = float(np.trace(P @ T))
    probs = np.array([float(np.trace(P @ B)) / Z for B in Tb])
    return TorusData("lozenge", m, n, Z, probs)


def _domino_biadjacency(z1, z2, m, n, periodic):
    """Kasteleyn-weighted black-to-white matrix (``i z2`` on vertical bonds)."""
    black = [(x, y) for x in range(m) for y in range(n) if (x + y) % 2 == 0]
    white = [(x, y) for x in range(m) for y in range(n) if (x + y) % 2 == 1]
    wi = {p: i for i, p in enumerate(white)}
    A = np.zeros((len(black), len(white)), complex)
    for i, (x, y) in enumerate(black):
        for dx, dy, w in ((1, 0, z1), (-1, 0, z1), (0, 1, 1j * z2), (0, -1, 1j * z2)):
            u, v = x + dx, y + dy
            if not periodic and not (0 <= u < m and 0 <= v < n):
                continue
            A[i, wi[(u % m, v % n)]] += w
    return A


def ledermann_check(z1, z2, m, n, thresholds=None) -> dict:
    """Compare eigenvalue counts of free and periodic Kasteleyn operators.

    With ``H = [[0, A], [A^*, 0]]`` the two boundary conditions differ by a
    matrix of rank ``r``, so the counting functions ``#{eig <= t}`` differ by
    at most ``r`` for every ``t``. The relative discrepancy is therefore
    ``O(sqrt(N)) / N`` for an ``m x n`` patch with ``N = m n`` sites.
    """
    z1 = check_positive_scalar(z1, "z1")
    z2 = check_positive_scalar(z2, "z2")
    m = check_int(m, "m", minimum=2, even=True)
    n = check_int(n, "n", minimum=2, even=True)

    def herm(A):
        k = A.shape[0]
        H = np.zeros((2 * k, 2 * k), complex)
        H[:k, k:] = A
        H[k:, :k] = A.conj().T
        return H

    Hf = herm(_domino_biadjacency(z1, z2, m, n, False))
    Hp = herm(_domino_biadjacency(z1, z2, m, n, True))
    ef = np.linalg.eigvalsh(Hf)
    ep = np.linalg.eigvalsh(Hp)
    rank = int(np.linalg.matrix_rank(Hp - Hf))
    if thresholds is None:
        thresholds = np.linspace(ep.min(), ep.max(), 201)
    diff = np.array([abs(np.sum(ef <= t) - np.sum(ep <= t)) for t in thresholds])
    N = m * n
    return {
        "N": N,
        "rank": rank,
        "max_count_difference": int(diff.max()),
        "relative_discrepancy": float(diff.max() / N),
        "sqrt_scale": float(np.sqrt(N) / N),
        "within_rank": bool(diff.max() <= rank),
    }
