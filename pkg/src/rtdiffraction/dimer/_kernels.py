"""Numba kernels for the dimer Metropolis/worm dynamics.

Domino state: ``d[x, y]`` is the direction of the partner of site (x, y) on
an m x n torus, 0: +x, 1: +y, 2: -x, 3: -y.

Lozenge state: ``t[x, y]`` is the type (0, 1, 2 for orientations 1, 2, 3) of
the dimer at the up-triangle L(x, y). Its partner is R(x-1, y), R(x, y-1) or
R(x, y) respectively; the R sites carry no separate state.
"""

import numpy as np
from numba import njit

from .._rng import below, uniform

_DX = np.array([1, 0, -1, 0], dtype=np.int64)
_DY = np.array([0, 1, 0, -1], dtype=np.int64)


@njit(cache=True)
def _domino_plaquettes(d, r_hv, r_vh, n_prop, s):
    m, n = d.shape
    for _ in range(n_prop):
        x = below(s, m)
        y = below(s, n)
        x1 = x + 1 if x + 1 < m else 0
        y1 = y + 1 if y + 1 < n else 0
        if d[x, y] == 0 and d[x, y1] == 0:
            if r_hv >= 1.0 or uniform(s) < r_hv:
                d[x, y] = 1
                d[x, y1] = 3
                d[x1, y] = 1
                d[x1, y1] = 3
        elif d[x, y] == 1 and d[x1, y] == 1:
            if r_vh >= 1.0 or uniform(s) < r_vh:
                d[x, y] = 0
                d[x1, y] = 2
                d[x, y1] = 0
                d[x1, y1] = 2


@njit(cache=True)
def _domino_worm(d, p_horizontal, s):
    """One closed worm; head steps are heat-bath in the bond activities."""
    m, n = d.shape
    # tail on the even sublattice
    while True:
        x0 = below(s, m)
        y0 = below(s, n)
        if (x0 + y0) % 2 == 0:
            break
    j = d[x0, y0]
    hx = (x0 + _DX[j]) % m
    hy = (y0 + _DY[j]) % n
    length = 0
    while True:
        u = uniform(s)
        # 2*z1 and 2*z2 split, each half to one of the two opposite bonds
        if u < p_horizontal:
            j = 0 if u < 0.5 * p_horizontal else 2
        else:
            j = 1 if u < p_horizontal + 0.5 * (1.0 - p_horizontal) else 3
        bx = (hx + _DX[j]) % m
        by = (hy + _DY[j]) % n
        jb = (j + 2) % 4
        length += 1
        if bx == x0 and by == y0:
            d[hx, hy] = j
            d[bx, by] = jb
            return length
        k = d[bx, by]
        nx = (bx + _DX[k]) % m
        ny = (by + _DY[k]) % n
        d[hx, hy] = j
        d[bx, by] = jb
        hx = nx
        hy = ny


@njit(cache=True)
def domino_sweeps(d, z1, z2, n_sweeps, worms_per_sweep, s):
    m, n = d.shape
    r_hv = (z2 / z1) ** 2
    r_vh = (z1 / z2) ** 2
    p_h = z1 / (z1 + z2)
    total = 0
    for _ in range(n_sweeps):
        _domino_plaquettes(d, r_hv, r_vh, m * n, s)
        for _ in range(worms_per_sweep):
            total += _domino_worm(d, p_h, s)
    return total


@njit(cache=True)
def _lozenge_hexagons(t, n_prop, s):
    m, n = t.shape
    for _ in range(n_prop):
        x = below(s, m)
        y = below(s, n)
        xm = x - 1 if x > 0 else m - 1
        ym = y - 1 if y > 0 else n - 1
        # around vertex p=(x, y): L(p), L(p-e1), L(p-e2)
        a = t[x, y]
        b = t[xm, y]
        c = t[x, ym]
        if a == 1 and c == 0 and b == 2:
            t[x, y] = 0
            t[x, ym] = 2
            t[xm, y] = 1
        elif a == 0 and c == 2 and b == 1:
            t[x, y] = 1
            t[x, ym] = 0
            t[xm, y] = 2


@njit(cache=True)
def _lozenge_worm(t, c1, c2, s):
    """Closed worm on the honeycomb; ``c1``, ``c2`` are cumulative weights."""
    m, n = t.shape
    x0 = below(s, m)
    y0 = below(s, n)
    # head at the R partner of the tail L(x0, y0)
    k = t[x0, y0]
    if k == 0:
        hx, hy = (x0 - 1) % m, y0
    elif k == 1:
        hx, hy = x0, (y0 - 1) % n
    else:
        hx, hy = x0, y0
    length = 0
    while True:
        u = uniform(s)
        if u < c1:
            k = 0
            bx, by = (hx + 1) % m, hy
        elif u < c2:
            k = 1
            bx, by = hx, (hy + 1) % n
        else:
            k = 2
            bx, by = hx, hy
        length += 1
        if bx == x0 and by == y0:
            t[bx, by] = k
            return length
        kb = t[bx, by]
        if kb == 0:
            nx, ny = (bx - 1) % m, by
        elif kb == 1:
            nx, ny = bx, (by - 1) % n
        else:
            nx, ny = bx, by
        t[bx, by] = k
        hx = nx
        hy = ny


@njit(cache=True)
def lozenge_sweeps(t, z1, z2, z3, n_sweeps, worms_per_sweep, s):
    m, n = t.shape
    tot = z1 + z2 + z3
    c1 = z1 / tot
    c2 = (z1 + z2) / tot
    total = 0
    for _ in range(n_sweeps):
        _lozenge_hexagons(t, m * n, s)
        for _ in range(worms_per_sweep):
            total += _lozenge_worm(t, c1, c2, s)
    return total
