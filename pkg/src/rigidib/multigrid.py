"""Geometric multigrid V-cycles for the scalar problems ``(sigma - Lap_h) x = b``.

Cell-centred fields give the pressure Poisson problem (``sigma = 0``); each
velocity component gives one Helmholtz problem.  Smoothing is red-black
Gauss-Seidel, prolongation is (bi/tri)linear on the ghost-extended coarse field
and restriction is its scaled transpose ``P^T / 2^d`` (cell-centred: weights
1,3,3,1 / 8 per axis; face-normal: 1,2,1 / 4), so the cycle is symmetric when the
post-smoother runs the colours in reverse order.  The coarsest level (at least
four cells per axis) is solved with a sparse LU factorisation.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import CELL, GridSpec, _ghost_rule, _sl, active_mask, assemble, diagonal, extend, fold, laplacian, zero_inactive


def _prolong_axis(ce, grid_c, kind, axis):
    """Interpolate along ``axis`` from a width-1 padded coarse array."""
    nd = ce.ndim
    m = ce.shape[axis] - 2
    S = lambda a, b: ce[_sl(nd, axis, slice(a, b))]
    if kind == axis:
        if grid_c.periodic(axis):
            even = S(1, m + 1)
            odd = 0.5 * (S(1, m + 1) + S(2, m + 2))
        else:
            even = S(1, m + 1)
            odd = 0.5 * (S(1, m) + S(2, m + 1))
        shape = list(ce.shape)
        shape[axis] = even.shape[axis] + odd.shape[axis]
        out = np.empty(shape)
        out[_sl(nd, axis, slice(0, None, 2))] = even
        out[_sl(nd, axis, slice(1, None, 2))] = odd
        return out
    even = 0.75 * S(1, m + 1) + 0.25 * S(0, m)
    odd = 0.75 * S(1, m + 1) + 0.25 * S(2, m + 2)
    shape = list(ce.shape)
    shape[axis] = 2 * m
    out = np.empty(shape)
    out[_sl(nd, axis, slice(0, None, 2))] = even
    out[_sl(nd, axis, slice(1, None, 2))] = odd
    return out


def _prolong_axis_T(f, grid_c, kind, axis):
    """Exact transpose of :func:`_prolong_axis`."""
    nd = f.ndim
    even = f[_sl(nd, axis, slice(0, None, 2))]
    odd = f[_sl(nd, axis, slice(1, None, 2))]
    if kind == axis:
        m = even.shape[axis]
        shape = list(f.shape)
        shape[axis] = m + 2
        ce = np.zeros(shape)
        ce[_sl(nd, axis, slice(1, m + 1))] += even
        mo = odd.shape[axis]
        ce[_sl(nd, axis, slice(1, mo + 1))] += 0.5 * odd
        ce[_sl(nd, axis, slice(2, mo + 2))] += 0.5 * odd
        return ce
    m = even.shape[axis]
    shape = list(f.shape)
    shape[axis] = m + 2
    ce = np.zeros(shape)
    ce[_sl(nd, axis, slice(1, m + 1))] += 0.75 * (even + odd)
    ce[_sl(nd, axis, slice(0, m))] += 0.25 * even
    ce[_sl(nd, axis, slice(2, m + 2))] += 0.25 * odd
    return ce


def prolong(ec, grid_c: GridSpec, kind: int) -> np.ndarray:
    e = extend(ec, grid_c, kind, 1)
    for a in range(grid_c.dim):
        e = _prolong_axis(e, grid_c, kind, a)
    return e


def restrict(rf, grid_c: GridSpec, kind: int) -> np.ndarray:
    e = rf
    for a in reversed(range(grid_c.dim)):
        e = _prolong_axis_T(e, grid_c, kind, a)
    return fold(e, grid_c, kind, 1) / 2 ** grid_c.dim


def _singular(grid: GridSpec, kind: int, sigma: float) -> bool:
    if sigma != 0.0:
        return False
    for b in range(grid.dim):
        if grid.periodic(b):
            continue
        for side in (0, 1):
            s, _, bval = _ghost_rule(grid, kind, b, side, False)
            if s < 0 or bval is not None:
                return False
    return True


class Hierarchy:
    """Multigrid hierarchy for ``(sigma - h^-2 L) x = b`` on fields of ``kind``."""

    def __init__(self, grid: GridSpec, kind: int, sigma: float = 0.0, pre: int = 2, post: int = 2,
                 min_cells: int = 4):
        self.kind, self.sigma, self.pre, self.post = kind, float(sigma), pre, post
        self.grids = [grid]
        while self.grids[-1].can_coarsen(min_cells):
            self.grids.append(self.grids[-1].coarsen())
        self.singular = _singular(grid, kind, self.sigma)
        self.diag, self.colors = [], []
        for g in self.grids:
            self.diag.append(diagonal(g, kind, self.sigma))
            shp = g.shape(kind)
            par = sum(np.meshgrid(*[np.arange(m) for m in shp], indexing="ij")) % 2
            act = active_mask(g, kind)
            cols = [(par == c) if act is None else ((par == c) & act) for c in (0, 1)]
            self.colors.append(cols)
        self._coarse_lu = self._factor(self.grids[-1])

    def apply(self, x, level: int = 0):
        g = self.grids[level]
        return self.sigma * x - laplacian(x, g, self.kind) / g.h ** 2

    def _factor(self, g):
        A = assemble(lambda f: [self.apply(f[0], len(self.grids) - 1)], g, [self.kind]).tolil()
        act = active_mask(g, self.kind)
        if act is not None:
            for i in np.flatnonzero(~act.ravel()):
                A[i, i] = 1.0
        if self.singular:
            A[0, :] = 0.0
            A[0, 0] = 1.0
        return spla.splu(sp.csc_matrix(A))

    def _project(self, x):
        if self.singular:
            x = x - x.mean()
        return x

    def _smooth(self, x, b, level, sweeps, order):
        D = self.diag[level]
        for _ in range(sweeps):
            for c in order:
                m = self.colors[level][c]
                r = b - self.apply(x, level)
                x[m] += r[m] / D[m]
        return x

    def _cycle(self, level, b):
        g = self.grids[level]
        if level == len(self.grids) - 1:
            rhs = b.ravel().copy()
            if self.singular:
                rhs[0] = 0.0
            x = self._coarse_lu.solve(rhs).reshape(b.shape)
            return self._project(zero_inactive(x, g, self.kind))
        x = self._smooth(np.zeros_like(b), b, level, self.pre, (0, 1))
        r = b - self.apply(x, level)
        rc = self._project(restrict(r, self.grids[level + 1], self.kind))
        x += zero_inactive(prolong(self._cycle(level + 1, rc), self.grids[level + 1], self.kind), g, self.kind)
        x = self._smooth(x, b, level, self.post, (1, 0))
        return x

    def vcycle(self, b: np.ndarray) -> np.ndarray:
        b = self._project(zero_inactive(np.array(b, dtype=float), self.grids[0], self.kind))
        return self._project(self._cycle(0, b))

    def solve(self, b, tol=1e-10, maxcycles=100):
        """Stationary iteration of V-cycles (used for testing and diagnostics)."""
        b = self._project(zero_inactive(np.array(b, dtype=float), self.grids[0], self.kind))
        x = np.zeros_like(b)
        bn = np.linalg.norm(b) or 1.0
        hist = []
        for _ in range(maxcycles):
            r = b - self.apply(x)
            hist.append(np.linalg.norm(r) / bn)
            if hist[-1] < tol:
                break
            x = self._project(x + self.vcycle(r))
        return x, hist


@lru_cache(maxsize=64)
def hierarchy(grid: GridSpec, kind: int, sigma: float, pre: int = 2, post: int = 2) -> Hierarchy:
    return Hierarchy(grid, kind, sigma, pre, post)


def vcycle_poisson(r: np.ndarray, grid: GridSpec) -> np.ndarray:
    """One V-cycle approximating ``L_p^-1 r`` with ``L_p = h^2 D G`` (dimensionless)."""
    return hierarchy(grid, CELL, 0.0).vcycle(-np.asarray(r) / grid.h ** 2)


def vcycle_helmholtz(r, grid: GridSpec, beta: float, eta: float = 1.0) -> list:
    """One V-cycle per component approximating ``A^-1 r`` with
    ``A = eta h^-2 (beta^-1 I - L_v)``."""
    sigma = 0.0 if np.isinf(beta) else 1.0 / (beta * grid.h ** 2)
    return [hierarchy(grid, a, sigma).vcycle(np.asarray(r[a]) / eta) for a in range(grid.dim)]
