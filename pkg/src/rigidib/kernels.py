"""Immersed-boundary kernels and the interpolation / spreading operators.

``J`` interpolates face velocities to markers with weights ``phi(R - x)`` and
``S = h^-d J^T``-style spreading puts marker forces on the faces as a force
density.  Near physical boundaries both act on ghost-extended arrays:
``J = J0 E`` and ``S = h^-d E^T J0^T``, so ``Lambda . (J v) = h^d v . (S Lambda)``
holds exactly for every boundary type.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .grid import GHOST, GridSpec, extend, fold, zero_inactive


class KernelKind(str, Enum):
    PESKIN3 = "peskin3"
    PESKIN4 = "peskin4"
    SIX = "six"

    @property
    def width(self) -> int:
        return {"peskin3": 3, "peskin4": 4, "six": 6}[self.value]


def _peskin3(r):
    r = np.abs(r)
    out = np.zeros_like(r)
    a = r <= 0.5
    out[a] = (1.0 + np.sqrt(1.0 - 3.0 * r[a] ** 2)) / 3.0
    b = (r > 0.5) & (r < 1.5)
    out[b] = (5.0 - 3.0 * r[b] - np.sqrt(np.maximum(1.0 - 3.0 * (1.0 - r[b]) ** 2, 0.0))) / 6.0
    return out


def _peskin4(r):
    r = np.abs(r)
    out = np.zeros_like(r)
    a = r <= 1.0
    out[a] = (3.0 - 2.0 * r[a] + np.sqrt(1.0 + 4.0 * r[a] - 4.0 * r[a] ** 2)) / 8.0
    b = (r > 1.0) & (r < 2.0)
    out[b] = (5.0 - 2.0 * r[b] - np.sqrt(np.maximum(-7.0 + 12.0 * r[b] - 4.0 * r[b] ** 2, 0.0))) / 8.0
    return out


# Six-point kernel with three continuous derivatives: moments 0..3 fixed
# (second moment K), even/odd sums 1/2 each, and a constant sum of squares.
_K6 = 59.0 / 60.0 - np.sqrt(29.0) / 20.0
_SQ29 = np.sqrt(29.0)


def _six(x):
    x = np.asarray(x, dtype=float)
    j = np.floor(x)
    r = x - j
    K = _K6
    beta = 9.0 / 4.0 - 1.5 * (K + r * r) + (22.0 / 3.0 - 7.0 * K) * r - 7.0 / 3.0 * r ** 3
    gamma = r ** 4 * (1.0 / 32.0 - _SQ29 / 48.0) + 5.0 * r ** 6 / 72.0
    disc = np.maximum(beta * beta - 112.0 * gamma, 0.0)
    p1 = (-beta + np.sign(1.5 - K) * np.sqrt(disc)) / 56.0
    r2, r3 = r * r, r ** 3
    pieces = [
        p1,
        -3.0 * p1 - 1.0 / 16.0 + K / 8.0 + K * r / 4.0 - r / 12.0 + r2 / 8.0 + r3 / 12.0,
        2.0 * p1 + 0.25 + 2.0 * r / 3.0 - K * r / 2.0 - r3 / 6.0,
        2.0 * p1 + 5.0 / 8.0 - K / 4.0 - r2 / 4.0,
        -3.0 * p1 + 0.25 - 2.0 * r / 3.0 + K * r / 2.0 + r3 / 6.0,
        p1 - 1.0 / 16.0 + K / 8.0 - K * r / 4.0 + r / 12.0 + r2 / 8.0 - r3 / 12.0,
    ]
    idx = (j + 3).astype(int)
    out = np.zeros_like(x)
    for k, piece in enumerate(pieces):
        m = idx == k
        out[m] = piece[m]
    return out


_PHI = {KernelKind.PESKIN3: _peskin3, KernelKind.PESKIN4: _peskin4, KernelKind.SIX: _six}


def kernel_phi(r, kind: KernelKind | str = KernelKind.PESKIN4) -> np.ndarray:
    """One-dimensional kernel ``phi`` evaluated at ``r`` (in units of h)."""
    return _PHI[KernelKind(kind)](np.asarray(r, dtype=float))


def delta(x: np.ndarray, h: float, kind: KernelKind | str = KernelKind.PESKIN4) -> np.ndarray:
    """Tensor-product regularised delta ``h^-d prod phi(x_a/h)``; ``x`` has shape (..., d)."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return np.prod(kernel_phi(x / h, kind), axis=-1) / h ** d


# ----------------------------------------------------------------------------

@dataclass
class MarkerSet:
    pos: np.ndarray
    vel: np.ndarray | None = None
    area: np.ndarray | None = None
    body: np.ndarray | None = None

    def __post_init__(self):
        self.pos = np.atleast_2d(np.asarray(self.pos, dtype=float))
        n, d = self.pos.shape
        self.vel = np.zeros((n, d)) if self.vel is None else np.asarray(self.vel, float).reshape(n, d)
        self.area = np.ones(n) if self.area is None else np.asarray(self.area, float).reshape(n)
        self.body = np.zeros(n, int) if self.body is None else np.asarray(self.body, int).reshape(n)

    def __len__(self):
        return len(self.pos)

    @property
    def dim(self) -> int:
        return self.pos.shape[1]

    def write_csv(self, path):
        d = self.dim
        ax = "xyz"[:d]
        header = ["body_id", *ax, *("v" + a for a in ax), "area"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for i in range(len(self)):
                w.writerow([int(self.body[i]), *(repr(float(x)) for x in self.pos[i]),
                            *(repr(float(x)) for x in self.vel[i]),
                            repr(float(self.area[i]))])

    @classmethod
    def read_csv(cls, path) -> "MarkerSet":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        header = [c.strip() for c in rows[0]]
        d = 3 if "z" in header else 2
        expect = ["body_id", *"xyz"[:d], *("v" + a for a in "xyz"[:d]), "area"]
        if header != expect:
            raise ValueError(f"unexpected marker header {header}, want {expect}")
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float).reshape(-1, 2 * d + 2)
        return cls(data[:, 1:1 + d], data[:, 1 + d:1 + 2 * d], data[:, -1], data[:, 0].astype(int))


def concat_markers(sets) -> MarkerSet:
    sets = list(sets)
    body = np.concatenate([s.body + i for i, s in enumerate(sets)])
    return MarkerSet(np.vstack([s.pos for s in sets]), np.vstack([s.vel for s in sets]),
                     np.concatenate([s.area for s in sets]), body)


# ----------------------------------------------------------------------------

@dataclass
class IBOperator:
    """Precomputed interpolation/spreading stencils for fixed marker positions."""
    grid: GridSpec
    pos: np.ndarray
    kernel: KernelKind = KernelKind.PESKIN4
    _idx: list = field(init=False, repr=False)
    _wts: list = field(init=False, repr=False)

    def __post_init__(self):
        self.kernel = KernelKind(self.kernel)
        g = self.grid
        pos = np.atleast_2d(np.asarray(self.pos, dtype=float)).copy()
        if pos.shape[1] != g.dim:
            raise ValueError("marker dimension does not match grid")
        for a in range(g.dim):
            if g.periodic(a):
                pos[:, a] = np.mod(pos[:, a], g.lengths[a])
        self.pos = pos
        w = self.kernel.width
        self._idx, self._wts = [], []
        for k in range(g.dim):
            ext_shape = [m + 2 * GHOST for m in g.shape(k)]
            strides = np.cumprod([1] + ext_shape[::-1][:-1])[::-1]
            flat = np.zeros((len(pos),) + (1,) * g.dim, dtype=np.int64)
            wt = np.ones((len(pos),) + (1,) * g.dim)
            for b in range(g.dim):
                off = 0.0 if b == k else 0.5
                s = pos[:, b] / g.h - off
                k0 = np.ceil(s - w / 2.0).astype(np.int64)
                ks = k0[:, None] + np.arange(w)
                e = ks + GHOST
                if e.min() < 0 or e.max() >= ext_shape[b]:
                    raise ValueError("marker kernel support leaves the ghost region")
                phi = kernel_phi(s[:, None] - ks, self.kernel)
                shape = [len(pos)] + [1] * g.dim
                shape[1 + b] = w
                flat = flat + (e * strides[b]).reshape(shape)
                wt = wt * phi.reshape(shape)
            self._idx.append(flat.reshape(len(pos), -1))
            self._wts.append(wt.reshape(len(pos), -1))

    @property
    def n_markers(self) -> int:
        return len(self.pos)

    def interpolate(self, v, inhom: bool = False) -> np.ndarray:
        """``J v`` -> (N, d) marker velocities."""
        g = self.grid
        out = np.empty((self.n_markers, g.dim))
        for k in range(g.dim):
            e = extend(v[k], g, k, GHOST, inhom).ravel()
            out[:, k] = (e[self._idx[k]] * self._wts[k]).sum(axis=1)
        return out

    def spread(self, F) -> list:
        """``S F`` -> force density on the faces (one array per component)."""
        g = self.grid
        F = np.asarray(F, dtype=float).reshape(self.n_markers, g.dim)
        out = []
        for k in range(g.dim):
            ext_shape = tuple(m + 2 * GHOST for m in g.shape(k))
            e = np.bincount(self._idx[k].ravel(), (self._wts[k] * F[:, k:k + 1]).ravel(),
                            minlength=int(np.prod(ext_shape))).reshape(ext_shape)
            out.append(zero_inactive(fold(e, g, k, GHOST), g, k) / g.h ** g.dim)
        return out

    def spread_mean_subtracted(self, F) -> list:
        """``S F - vol^-1 1 1^T F``: spreading with zero net force density (periodic only)."""
        g = self.grid
        if not g.fully_periodic:
            raise ValueError("mean-subtracted spreading is only defined for periodic grids")
        F = np.asarray(F, dtype=float).reshape(self.n_markers, g.dim)
        out = self.spread(F)
        tot = F.sum(axis=0) / g.volume
        return [out[k] - tot[k] for k in range(g.dim)]


def interpolate(v, grid: GridSpec, markers, kernel=KernelKind.PESKIN4, inhom=False) -> np.ndarray:
    pos = markers.pos if isinstance(markers, MarkerSet) else markers
    return IBOperator(grid, pos, kernel).interpolate(v, inhom)


def spread(F, grid: GridSpec, markers, kernel=KernelKind.PESKIN4) -> list:
    pos = markers.pos if isinstance(markers, MarkerSet) else markers
    return IBOperator(grid, pos, kernel).spread(F)


def spread_mean_subtracted(F, grid: GridSpec, markers, kernel=KernelKind.PESKIN4) -> list:
    pos = markers.pos if isinstance(markers, MarkerSet) else markers
    return IBOperator(grid, pos, kernel).spread_mean_subtracted(F)
