"""Explicit advection term ``(v . grad) v`` on the staggered grid.

Second-order centred differences of the advective form.  The transverse
velocity at a face is the average of the four surrounding transverse faces.
Ghost values come from :func:`rigidib.grid.extend`, so boundary velocities are
honoured when ``inhom`` is set.
"""
from __future__ import annotations

import numpy as np

from .grid import GHOST, GridSpec, extend, zero_inactive


def _window(ndim, offsets, shape):
    return tuple(slice(GHOST + o, GHOST + o + m) for o, m in zip(offsets, shape))


def advection(v, grid: GridSpec, inhom: bool = True) -> list:
    """``N(v) = (v . grad) v`` evaluated at the faces of every component."""
    d, h = grid.dim, grid.h
    ext = [extend(v[a], grid, a, GHOST, inhom) for a in range(d)]
    out = []
    for a in range(d):
        shape = grid.shape(a)
        zero = [0] * d
        ea = ext[a]
        acc = np.zeros(shape)
        for b in range(d):
            plus, minus = list(zero), list(zero)
            plus[b], minus[b] = 1, -1
            du = (ea[_window(d, plus, shape)] - ea[_window(d, minus, shape)]) / (2.0 * h)
            if b == a:
                vb = ea[_window(d, zero, shape)]
            else:
                eb = ext[b]
                vb = 0.0
                for oa in (-1, 0):
                    for ob in (0, 1):
                        off = list(zero)
                        off[a], off[b] = oa, ob
                        vb = vb + eb[_window(d, off, shape)]
                vb = 0.25 * vb
            acc += vb * du
        out.append(zero_inactive(acc, grid, a))
    return out


def advective_cfl(v, grid: GridSpec, dt: float) -> float:
    """``max |v| dt / h`` over all faces."""
    vmax = max(float(np.abs(c).max()) for c in v)
    return vmax * dt / grid.h
