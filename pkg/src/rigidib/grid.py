"""Staggered (MAC) grid, boundary ghost extension and the basic difference operators.

Layout conventions
------------------
Arrays are indexed ``[x, y]`` or ``[x, y, z]``.  Pressure lives at cell centres
``(i + 1/2) h``.  Velocity component ``a`` lives on the faces normal to axis
``a``: along that axis its ``k``-th entry sits at ``k h``.  Along a periodic axis
there are ``n`` such faces, along a wall-bounded axis ``n + 1`` (the two boundary
faces are stored).  Boundary faces with a prescribed normal velocity are
*inactive*: they are not unknowns and are kept at zero in every linear-algebra
vector; their values enter only through the affine part of the ghost extension.

Only interior data is stored.  Ghost values are produced on demand by
:func:`extend`, which realises ``u_ext = E u + c`` one axis at a time (corners
are therefore filled by composition).  :func:`fold` applies the exact adjoint
``E^T`` of the homogeneous part and is what makes spreading and multigrid
restriction boundary-aware.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
import scipy.sparse as sp

GHOST = 3
CELL = -1  # "kind" tag of cell-centred fields; face components use 0..dim-1


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True)
class VelocityDirichlet:
    """Prescribed boundary velocity (no-slip when ``velocity`` is None)."""
    velocity: tuple | None = None

    def component(self, a: int) -> float:
        return 0.0 if self.velocity is None else float(self.velocity[a])


@dataclass(frozen=True)
class NormalStress:
    """Prescribed normal traction with zero tangential velocity.

    The normal traction ``t`` sets the boundary pressure ``pi_b = -t``; the normal
    velocity gradient vanishes at such a face because the tangential velocity is
    zero along it, so the viscous part of the normal stress drops out.
    """
    normal_traction: float = 0.0


BoundaryKind = Union[Periodic, VelocityDirichlet, NormalStress]


@dataclass(frozen=True)
class GridSpec:
    n: tuple
    h: float = 1.0
    bc: tuple | None = None  # per axis (low, high); None means fully periodic

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        object.__setattr__(self, "n", n)
        if len(n) not in (2, 3):
            raise ValueError("only 2D and 3D grids are supported")
        if any(v < 2 for v in n):
            raise ValueError("need at least two cells per axis")
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        bc = self.bc
        if bc is None:
            bc = tuple((Periodic(), Periodic()) for _ in n)
        bc = tuple(tuple(side) for side in bc)
        if len(bc) != len(n):
            raise ValueError("one (low, high) boundary pair per axis required")
        for lo, hi in bc:
            if isinstance(lo, Periodic) != isinstance(hi, Periodic):
                raise ValueError("periodicity must hold on both sides of an axis")
        object.__setattr__(self, "bc", bc)

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def lengths(self) -> np.ndarray:
        return np.array(self.n, dtype=float) * self.h

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    def periodic(self, axis: int) -> bool:
        return isinstance(self.bc[axis][0], Periodic)

    @property
    def fully_periodic(self) -> bool:
        return all(self.periodic(a) for a in range(self.dim))

    @property
    def has_stress_boundary(self) -> bool:
        return any(isinstance(b, NormalStress) for side in self.bc for b in side)

    def shape(self, kind: int) -> tuple:
        if kind == CELL:
            return self.n
        s = list(self.n)
        if not self.periodic(kind):
            s[kind] += 1
        return tuple(s)

    def kinds(self) -> list:
        return list(range(self.dim)) + [CELL]

    def coarsen(self) -> "GridSpec":
        return GridSpec(tuple(v // 2 for v in self.n), 2.0 * self.h, self.bc)

    def can_coarsen(self, min_cells: int = 4) -> bool:
        return all(v % 2 == 0 and v // 2 >= min_cells for v in self.n)

    def coords(self, kind: int, axis: int) -> np.ndarray:
        """1D coordinates of the stored entries of ``kind`` along ``axis``."""
        m = self.shape(kind)[axis]
        off = 0.0 if kind == axis else 0.5
        return (np.arange(m) + off) * self.h

    def mesh(self, kind: int) -> list:
        return np.meshgrid(*[self.coords(kind, a) for a in range(self.dim)], indexing="ij")


# ----------------------------------------------------------------------------
# ghost extension

def _ghost_rule(grid: GridSpec, kind: int, axis: int, side: int, inhom: bool):
    """Return (sign, offset, boundary_value) for one wall side.

    ghost = sign * mirror + offset; ``boundary_value`` is the fixed value of an
    inactive boundary face (None when the boundary face is an unknown or the
    staggering is cell-centred along ``axis``).
    """
    b = grid.bc[axis][side]
    node = kind == axis
    if kind == CELL:
        if isinstance(b, NormalStress):
            return -1.0, (-2.0 * b.normal_traction if inhom else 0.0), None
        return 1.0, 0.0, None
    if isinstance(b, NormalStress):
        return (1.0, 0.0, None) if node else (-1.0, 0.0, None)
    ub = b.component(kind) if inhom else 0.0
    return -1.0, 2.0 * ub, (ub if node else None)


def _take(a: np.ndarray, idx, axis: int) -> np.ndarray:
    return np.take(a, idx, axis=axis)


def _sl(ndim: int, axis: int, s: slice) -> tuple:
    out = [slice(None)] * ndim
    out[axis] = s
    return tuple(out)


def _extend_axis(u, grid, kind, axis, w, inhom):
    m = u.shape[axis]
    if grid.periodic(axis):
        lo = _take(u, np.arange(m - w, m), axis)
        hi = _take(u, np.arange(0, w), axis)
        return np.concatenate([lo, u, hi], axis=axis)
    node = kind == axis
    s0, c0, b0 = _ghost_rule(grid, kind, axis, 0, inhom)
    s1, c1, b1 = _ghost_rule(grid, kind, axis, 1, inhom)
    if b0 is not None or b1 is not None:
        u = u.copy()
        if b0 is not None:
            u[_sl(u.ndim, axis, slice(0, 1))] = b0
        if b1 is not None:
            u[_sl(u.ndim, axis, slice(m - 1, m))] = b1
    if node:
        ilo = np.arange(w, 0, -1)
        ihi = m - 1 - np.arange(1, w + 1)
    else:
        ilo = np.arange(w - 1, -1, -1)
        ihi = m - np.arange(1, w + 1)
    lo = s0 * _take(u, ilo, axis) + c0
    hi = s1 * _take(u, ihi, axis) + c1
    return np.concatenate([lo, u, hi], axis=axis)


def extend(u: np.ndarray, grid: GridSpec, kind: int, width: int = GHOST,
           inhom: bool = False, axes: Sequence[int] | None = None) -> np.ndarray:
    """Ghost-extend ``u`` by ``width`` layers (``E u`` or ``E u + c`` when ``inhom``)."""
    for ax in (range(grid.dim) if axes is None else axes):
        u = _extend_axis(u, grid, kind, ax, width, inhom)
    return u


def _fold_axis(e, grid, kind, axis, w):
    m = e.shape[axis] - 2 * w
    nd = e.ndim
    out = e[_sl(nd, axis, slice(w, w + m))].copy()
    lo = e[_sl(nd, axis, slice(0, w))]
    hi = e[_sl(nd, axis, slice(w + m, w + m + w))]
    if grid.periodic(axis):
        out[_sl(nd, axis, slice(m - w, m))] += lo
        out[_sl(nd, axis, slice(0, w))] += hi
        return out
    s0, _, b0 = _ghost_rule(grid, kind, axis, 0, False)
    s1, _, b1 = _ghost_rule(grid, kind, axis, 1, False)
    rev = _sl(nd, axis, slice(None, None, -1))
    if kind == axis:
        out[_sl(nd, axis, slice(1, w + 1))] += s0 * lo[rev]
        out[_sl(nd, axis, slice(m - 1 - w, m - 1))] += s1 * hi[rev]
        if b0 is not None:
            out[_sl(nd, axis, slice(0, 1))] = 0.0
        if b1 is not None:
            out[_sl(nd, axis, slice(m - 1, m))] = 0.0
    else:
        out[_sl(nd, axis, slice(0, w))] += s0 * lo[rev]
        out[_sl(nd, axis, slice(m - w, m))] += s1 * hi[rev]
    return out


def fold(e: np.ndarray, grid: GridSpec, kind: int, width: int = GHOST,
         axes: Sequence[int] | None = None) -> np.ndarray:
    """Adjoint ``E^T`` of the homogeneous ghost extension."""
    for ax in reversed(list(range(grid.dim) if axes is None else axes)):
        e = _fold_axis(e, grid, kind, ax, width)
    return e


def active_mask(grid: GridSpec, kind: int) -> np.ndarray | None:
    """Boolean mask of unknown entries, or None when every entry is active."""
    if kind == CELL or grid.periodic(kind):
        return None
    mask = np.ones(grid.shape(kind), dtype=bool)
    for side, idx in ((0, 0), (1, -1)):
        if isinstance(grid.bc[kind][side], VelocityDirichlet):
            mask[_sl(grid.dim, kind, slice(idx, idx + 1 if idx >= 0 else None))] = False
    return mask


def zero_inactive(u: np.ndarray, grid: GridSpec, kind: int) -> np.ndarray:
    if kind == CELL or grid.periodic(kind):
        return u
    m = u.shape[kind]
    for side, idx in ((0, 0), (1, m - 1)):
        if isinstance(grid.bc[kind][side], VelocityDirichlet):
            u[_sl(u.ndim, kind, slice(idx, idx + 1))] = 0.0
    return u


# ----------------------------------------------------------------------------
# difference operators

def gradient(p: np.ndarray, grid: GridSpec, inhom: bool = False) -> list:
    """Cell-to-face gradient ``G``; returns one array per velocity component."""
    pe = extend(p, grid, CELL, 1, inhom)
    out = []
    for a in range(grid.dim):
        d = np.diff(pe, axis=a)
        idx = []
        for b in range(grid.dim):
            if b == a:
                idx.append(slice(0, grid.shape(a)[a]))
            else:
                idx.append(slice(1, -1))
        out.append(zero_inactive(d[tuple(idx)] / grid.h, grid, a))
    return out


def divergence(v: Sequence[np.ndarray], grid: GridSpec, inhom: bool = False) -> np.ndarray:
    """Face-to-cell divergence ``D``."""
    out = np.zeros(grid.n)
    for a in range(grid.dim):
        e = extend(v[a], grid, a, 1, inhom, axes=(a,))
        n = grid.n[a]
        out += e[_sl(grid.dim, a, slice(2, n + 2))] - e[_sl(grid.dim, a, slice(1, n + 1))]
    return out / grid.h


def laplacian(u: np.ndarray, grid: GridSpec, kind: int, inhom: bool = False) -> np.ndarray:
    """Dimensionless (no 1/h^2) 2d+1 point Laplacian of a scalar field of ``kind``."""
    e = extend(u, grid, kind, 1, inhom)
    d = grid.dim
    inner = tuple(slice(1, -1) for _ in range(d))
    out = -2.0 * d * e[inner]
    for a in range(d):
        up = list(inner); up[a] = slice(2, None)
        dn = list(inner); dn[a] = slice(0, -2)
        out += e[tuple(up)] + e[tuple(dn)]
    return zero_inactive(out, grid, kind)


def vector_laplacian(v: Sequence[np.ndarray], grid: GridSpec, inhom: bool = False) -> list:
    """Dimensionless vector Laplacian ``L_v`` (component-wise)."""
    return [laplacian(v[a], grid, a, inhom) for a in range(grid.dim)]


def helmholtz_apply(v: Sequence[np.ndarray], grid: GridSpec, beta: float, eta: float = 1.0,
                    inhom: bool = False) -> list:
    """``A v = eta h^-2 (beta^-1 v - L_v v)``; ``beta = inf`` gives steady Stokes."""
    inv_beta = 0.0 if np.isinf(beta) else 1.0 / beta
    lv = vector_laplacian(v, grid, inhom)
    c = eta / grid.h ** 2
    return [zero_inactive(c * (inv_beta * v[a] - lv[a]), grid, a) for a in range(grid.dim)]


def diagonal(grid: GridSpec, kind: int, sigma: float) -> np.ndarray:
    """Diagonal of ``sigma I - h^-2 L`` for a scalar field of ``kind``."""
    diag = np.full(grid.shape(kind), 2.0 * grid.dim)
    for b in range(grid.dim):
        if grid.periodic(b) or kind == b:
            continue
        m = grid.shape(kind)[b]
        for side, idx in ((0, 0), (1, m - 1)):
            s, _, _ = _ghost_rule(grid, kind, b, side, False)
            diag[_sl(grid.dim, b, slice(idx, idx + 1))] -= s
    return sigma + diag / grid.h ** 2


# ----------------------------------------------------------------------------
# packing of staggered fields into flat vectors

@dataclass
class Layout:
    """Maps a list of fields of given kinds to a flat vector and back."""
    grid: GridSpec
    kinds: list
    extra: int = 0  # trailing non-grid entries (e.g. marker forces)
    shapes: list = field(init=False)
    offsets: list = field(init=False)

    def __post_init__(self):
        self.shapes = [self.grid.shape(k) for k in self.kinds]
        sizes = [int(np.prod(s)) for s in self.shapes]
        self.offsets = list(np.concatenate([[0], np.cumsum(sizes)]).astype(int))

    @property
    def grid_size(self) -> int:
        return self.offsets[-1]

    @property
    def size(self) -> int:
        return self.offsets[-1] + self.extra

    def unpack(self, x: np.ndarray) -> list:
        parts = [x[self.offsets[i]:self.offsets[i + 1]].reshape(s)
                 for i, s in enumerate(self.shapes)]
        if self.extra:
            parts.append(x[self.offsets[-1]:])
        return parts

    def pack(self, parts: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.asarray(p, dtype=float).ravel() for p in parts])

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size)


# ----------------------------------------------------------------------------
# sparse assembly of nearest-neighbour operators by colored probing

def _period(grid: GridSpec, axis: int) -> int:
    n = grid.n[axis]
    if not grid.periodic(axis):
        return 3
    for p in range(3, n + 1):
        if n % p == 0:
            return p
    return n


def assemble(apply: Callable[[list], list], grid: GridSpec, kinds_in: list,
             kinds_out: list | None = None) -> sp.csr_matrix:
    """Assemble the matrix of a linear map whose outputs depend only on inputs
    within one index of distance along every axis (all MAC stencils here).

    ``apply`` takes and returns lists of arrays (shapes given by ``kinds``).
    """
    kinds_out = kinds_in if kinds_out is None else kinds_out
    lin = Layout(grid, list(kinds_in))
    lout = Layout(grid, list(kinds_out))
    d = grid.dim
    periods = [_period(grid, a) for a in range(d)]
    rows, cols, vals = [], [], []
    colors = np.stack(np.meshgrid(*[np.arange(p) for p in periods], indexing="ij"), -1).reshape(-1, d)
    for fi, kin in enumerate(kinds_in):
        shp_in = lin.shapes[fi]
        grids_in = np.meshgrid(*[np.arange(m) for m in shp_in], indexing="ij")
        for col in colors:
            sel = np.ones(shp_in, dtype=bool)
            for a in range(d):
                sel &= (grids_in[a] % periods[a]) == col[a]
            fields = [np.zeros(s) for s in lin.shapes]
            fields[fi] = sel.astype(float)
            outs = apply(fields)
            for fo, y in enumerate(outs):
                nz = np.nonzero(y)
                if len(nz[0]) == 0:
                    continue
                src = []
                ok = np.ones(len(nz[0]), dtype=bool)
                for a in range(d):
                    i = nz[a]
                    p = periods[a]
                    delta = (col[a] - i) % p
                    delta = np.where(delta == p - 1, -1, delta)
                    j = i + delta
                    if grid.periodic(a):
                        j = j % shp_in[a]
                    else:
                        ok &= (j >= 0) & (j < shp_in[a])
                    ok &= np.abs(delta) <= 1
                    src.append(j)
                r = np.ravel_multi_index(tuple(x[ok] for x in nz), lout.shapes[fo]) + lout.offsets[fo]
                c = np.ravel_multi_index(tuple(x[ok] for x in src), shp_in) + lin.offsets[fi]
                rows.append(r); cols.append(c); vals.append(y[nz][ok])
    if rows:
        rows, cols, vals = (np.concatenate(v) for v in (rows, cols, vals))
    return sp.csr_matrix((vals, (rows, cols)), shape=(lout.size, lin.size))
