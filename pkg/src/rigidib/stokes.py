"""Unsteady / steady Stokes solver on the staggered grid.

The saddle-point operator is

    [ A   G ] [v]   [g]          A = rho/dt I - kappa eta h^-2 L_v
    [-D   0 ] [p] = [h]

and :meth:`StokesSolver.precond` applies the projection-method preconditioner

    P^-1 = [I  h^2 G Lp^-1; 0  B^-1] [I 0; -D -I] [A^-1 0; 0 I]

with one multigrid V-cycle standing in for each of ``A^-1`` and ``Lp^-1`` and
``B^-1 = -(rho h^2/dt) Lp^-1 + eta I``.  Dropping the upper-right block gives
the lower-triangular variant.  Two exact solvers are available as well: a
spectral solve for fully periodic grids and a sparse LU of the assembled
operator for any boundary setup.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import CELL, GridSpec, Layout, active_mask, assemble, divergence, gradient, laplacian, zero_inactive
from .krylov import KrylovResult, fgmres
from .multigrid import Hierarchy


@dataclass(frozen=True)
class StokesParams:
    rho: float = 1.0
    eta: float = 1.0
    dt: float = math.inf
    kappa: float = 1.0

    @property
    def steady(self) -> bool:
        return math.isinf(self.dt) or self.rho == 0.0

    @property
    def c0(self) -> float:
        """Coefficient of the identity in ``A`` (``rho/dt``)."""
        return 0.0 if self.steady else self.rho / self.dt

    @property
    def c1(self) -> float:
        """Viscous coefficient of ``A`` (``kappa eta``)."""
        return self.kappa * self.eta

    def beta(self, h: float) -> float:
        """Viscous CFL number ``kappa nu dt / h^2`` (inf for steady Stokes)."""
        if self.steady:
            return math.inf
        return self.c1 * self.dt / (self.rho * h * h)

    @classmethod
    def from_beta(cls, beta: float, h: float, eta: float = 1.0, rho: float = 1.0) -> "StokesParams":
        if math.isinf(beta):
            return cls(rho, eta, math.inf)
        return cls(rho, eta, beta * rho * h * h / eta)


@dataclass
class StokesConfig:
    ns_inner: int | None = None          # fixed number of inner GMRES iterations
    stokes_tol: float = 1e-9
    use_lower_triangular_stokes: bool = False
    inner: str = "gmres"                 # "gmres", "fft" (periodic only) or "direct"
    restart: int = 100
    maxiter: int = 1000
    pre_sweeps: int = 2
    post_sweeps: int = 2


class StokesSolver:
    """Operator, preconditioner and solvers for one grid / parameter set."""

    def __init__(self, grid: GridSpec, params: StokesParams, config: StokesConfig | None = None):
        self.grid, self.params = grid, params
        self.config = config or StokesConfig()
        self.layout = Layout(grid, grid.kinds())
        self.velocity_null = grid.fully_periodic and params.c0 == 0.0
        self.pressure_null = not grid.has_stress_boundary
        self._hv = None
        self._hp = None
        self._lu = None
        self._symbols = None
        self.precond_count = 0

    # -- helpers ---------------------------------------------------------
    def unpack(self, x):
        parts = self.layout.unpack(x)
        return parts[:-1], parts[-1]

    def pack(self, v, p):
        return self.layout.pack([*v, p])

    def project(self, v, p):
        if self.velocity_null:
            v = [c - c.mean() for c in v]
        if self.pressure_null:
            p = p - p.mean()
        return v, p

    @property
    def hierarchies(self):
        if self._hv is None:
            c = self.config
            if self.params.c1 > 0:
                sigma = self.params.c0 / self.params.c1
                self._hv = [Hierarchy(self.grid, a, sigma, c.pre_sweeps, c.post_sweeps) for a in range(self.grid.dim)]
            else:
                self._hv = []
            self._hp = Hierarchy(self.grid, CELL, 0.0, c.pre_sweeps, c.post_sweeps)
        return self._hv, self._hp

    # -- operator ---------------------------------------------------------
    def apply_fields(self, v, p, inhom: bool = False):
        g = self.grid
        c0, c1 = self.params.c0, self.params.c1
        gp = gradient(p, g, inhom)
        mom = []
        for a in range(g.dim):
            lap = laplacian(v[a], g, a, inhom)
            mom.append(zero_inactive(c0 * v[a] - c1 * lap / g.h ** 2 + gp[a], g, a))
        return mom, -divergence(v, g, inhom)

    def apply(self, x: np.ndarray) -> np.ndarray:
        v, p = self.unpack(x)
        return self.pack(*self.apply_fields(v, p))

    def boundary_rhs(self) -> np.ndarray:
        """Affine part of the operator: subtract it from the rhs to impose
        inhomogeneous boundary data."""
        z = [np.zeros(self.grid.shape(a)) for a in range(self.grid.dim)]
        return self.pack(*self.apply_fields(z, np.zeros(self.grid.n), inhom=True))

    # -- preconditioner ----------------------------------------------------
    def precond_fields(self, gv, hp, lower_triangular: bool | None = None):
        lt = self.config.use_lower_triangular_stokes if lower_triangular is None else lower_triangular
        g = self.grid
        c0, c1 = self.params.c0, self.params.c1
        hv, hpo = self.hierarchies
        gv, _ = self.project(list(gv), hp)
        if c1 > 0:
            vt = [hv[a].vcycle(gv[a] / c1) for a in range(g.dim)]
        else:
            vt = [zero_inactive(gv[a] / c0, g, a) for a in range(g.dim)]
        if self.velocity_null:
            vt = [c - c.mean() for c in vt]
        q = -(divergence(vt, g) + hp)
        if self.pressure_null:
            q = q - q.mean()
        phi = hpo.vcycle(-q / g.h ** 2)  # ~ Lp^-1 q
        p = -c0 * g.h ** 2 * phi + c1 * q
        if not lt:
            gphi = gradient(phi, g)
            vt = [vt[a] + g.h ** 2 * gphi[a] for a in range(g.dim)]
        self.precond_count += 1
        return self.project(vt, p)

    def precond(self, x: np.ndarray, lower_triangular: bool | None = None) -> np.ndarray:
        gv, hp = self.unpack(x)
        return self.pack(*self.precond_fields(gv, hp, lower_triangular))

    # -- solvers ------------------------------------------------------------
    def solve(self, b: np.ndarray, x0=None, tol: float | None = None, ns: int | None = None,
              callback=None) -> KrylovResult:
        """Solve ``L x = b``.  With ``ns`` set, exactly ``ns`` preconditioned
        iterations are performed (inexact inner solve)."""
        c = self.config
        ns = c.ns_inner if (ns is None and tol is None) else ns
        kind = c.inner
        if kind in ("fft", "direct") and ns is None:
            x = self.solve_fft(b) if kind == "fft" else self.solve_direct(b)
            return KrylovResult(x, True, 0, [0.0], 0)
        if ns is not None:
            return fgmres(self.apply, b, self.precond, x0=x0, tol=0.0, restart=max(ns, 1), maxiter=ns,
                          callback=callback)
        return fgmres(self.apply, b, self.precond, x0=x0, tol=c.stokes_tol if tol is None else tol,
                      restart=c.restart, maxiter=c.maxiter, callback=callback)

    def solve_fft(self, b: np.ndarray) -> np.ndarray:
        """Exact solve on a fully periodic grid by diagonalisation with the DFT."""
        g = self.grid
        if not g.fully_periodic:
            raise ValueError("spectral solve needs a fully periodic grid")
        gv, hp = self.unpack(b)
        c0 = self.params.c0
        if self._symbols is None:
            self._symbols = self._fft_symbols()
        G, D, DG, zero, a, asafe = self._symbols
        gh = [np.fft.fftn(x) for x in gv]
        hh = np.fft.fftn(hp)
        ph = (a * hh + sum(D[k] * gh[k] for k in range(g.dim))) / DG
        ph[zero] = 0.0
        vh = [(gh[k] - G[k] * ph) / asafe for k in range(g.dim)]
        if c0 == 0.0:
            for x in vh:
                x[zero] = 0.0
        v = [np.real(np.fft.ifftn(x)) for x in vh]
        p = np.real(np.fft.ifftn(ph))
        return self.pack(v, p)

    def _fft_symbols(self):
        g = self.grid
        c0, c1, h = self.params.c0, self.params.c1, g.h
        th = np.meshgrid(*[2 * np.pi * np.fft.fftfreq(n) for n in g.n], indexing="ij", sparse=True)
        lam = sum(2 * np.cos(t) - 2 for t in th)
        a = c0 - c1 * lam / h ** 2
        G = [(1 - np.exp(-1j * t)) / h for t in th]
        D = [(np.exp(1j * t) - 1) / h for t in th]
        DG = lam / h ** 2
        zero = DG == 0
        DG = np.where(zero, 1.0, DG)
        asafe = np.where(a == 0, 1.0, a)
        return G, D, DG, zero, a, asafe

    def assembled(self) -> sp.csr_matrix:
        def op(f):
            mom, cont = self.apply_fields(f[:-1], f[-1])
            return [*mom, cont]
        return assemble(op, self.grid, self.grid.kinds())

    def _factor(self):
        A = self.assembled().tolil()
        L = self.layout
        for k, kind in enumerate(L.kinds):
            act = active_mask(self.grid, kind)
            if act is not None:
                for i in np.flatnonzero(~act.ravel()):
                    A[L.offsets[k] + i, L.offsets[k] + i] = 1.0
        pins = []
        if self.velocity_null:
            pins += [L.offsets[k] for k in range(self.grid.dim)]
        if self.pressure_null:
            pins.append(L.offsets[self.grid.dim])
        for i in pins:
            A[i, :] = 0.0
            A[i, i] = 1.0
        self._pins = pins
        return spla.splu(sp.csc_matrix(A), permc_spec="COLAMD")

    def prepare(self):
        """Build the cached direct factorisation now rather than on the first solve."""
        if self.config.inner == "direct" and self._lu is None:
            self._lu = self._factor()

    def solve_direct(self, b: np.ndarray) -> np.ndarray:
        """Exact solve with a (cached) sparse LU factorisation."""
        if self._lu is None:
            self._lu = self._factor()
        rhs = np.array(b, dtype=float)
        rhs[self._pins] = 0.0
        x = self._lu.solve(rhs)
        v, p = self.unpack(x)
        v = [zero_inactive(c.copy(), self.grid, k) for k, c in enumerate(v)]
        return self.pack(*self.project(v, p))

    def solve_exact(self, b: np.ndarray) -> np.ndarray:
        return self.solve_fft(b) if self.grid.fully_periodic else self.solve_direct(b)


def stokes_apply(x, grid: GridSpec, params: StokesParams) -> np.ndarray:
    return StokesSolver(grid, params).apply(x)


def stokes_precond_apply(x, grid: GridSpec, params: StokesParams, lower_triangular=False) -> np.ndarray:
    return StokesSolver(grid, params).precond(x, lower_triangular)


def solve_stokes(b, grid: GridSpec, params: StokesParams, config: StokesConfig | None = None, **kw):
    return StokesSolver(grid, params, config).solve(b, **kw)
