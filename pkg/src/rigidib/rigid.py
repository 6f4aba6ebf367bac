"""Rigid bodies as Lagrange-multiplier constraints on the fluid.

The constrained system for velocity ``v``, pressure ``p`` and marker forces
``lam`` (force units, force exerted *on the fluid*) is

    [ A   G  -S ] [v  ]   [g]
    [-D   0   0 ] [p  ] = [h]
    [-J   0   0 ] [lam]   [W]

with ``W = -V`` for markers moving at prescribed velocity ``V``.  It is solved
with flexible GMRES, preconditioned by a block factorisation in which the
Stokes sub-problem is solved inexactly (a fixed number of inner GMRES
iterations) and the Schur complement ``M = J L^-1 S`` is replaced by a dense
approximate mobility.

For steady Stokes in a fully periodic box, ``S`` is replaced by
``S - vol^-1 1^T`` (net force balanced by a uniform body force) and the mean
velocity is pinned to zero.

Also here: the direct-forcing splitting baseline, IMEX time stepping with
explicit AB2 advection, a driver to steady state under a body force, and
pointwise traction estimates.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .advection import advection, advective_cfl
from .grid import CELL, GridSpec, Layout, laplacian, zero_inactive
from .kernels import IBOperator, KernelKind, MarkerSet
from .krylov import fgmres
from .mobility.dense import DenseMobility, assemble_mobility, exact_mobility
from .mobility.fits import MobilityFit, load_default_fit
from .mobility.pair import rpy_pair
from .stokes import StokesConfig, StokesParams, StokesSolver

log = logging.getLogger(__name__)

VARIANTS = ("lower_triangular", "full")
SOURCES = ("fit", "rpy", "exact")
INNER = ("gmres", "fft", "direct")


class SpacingWarning(UserWarning):
    """Marker spacing far from the recommended ``s/h ~ 2``."""


class CFLWarning(UserWarning):
    """Advective Courant number above the stability guideline."""


@dataclass
class SchurPrecondConfig:
    """Outer solver and preconditioner settings.

    ``ns_inner`` is the number of inner Stokes iterations per preconditioner
    solve (default 2 for fully periodic grids, 4 otherwise); ``ns_second`` is
    used for the second solve of the full variant (defaults to ``ns_inner``).
    ``inner`` = ``"fft"`` / ``"direct"`` replaces the inner iterations by exact
    solves.  ``svd_cutoff`` switches the mobility solve to a filtered
    eigen-decomposition (default: Cholesky, falling back to the filter).
    """
    ns_inner: int | None = None
    ns_second: int | None = None
    precond_variant: str = "lower_triangular"
    mobility_source: str = "fit"
    svd_cutoff: float | None = None
    outer_tol: float = 1e-9
    outer_restart: int = 100
    outer_maxiter: int = 2000
    inner: str = "gmres"
    kernel: str = "peskin4"
    pre_sweeps: int = 2
    post_sweeps: int = 2

    def __post_init__(self):
        if self.precond_variant not in VARIANTS:
            raise ValueError(f"precond_variant must be one of {VARIANTS}")
        if self.mobility_source not in SOURCES:
            raise ValueError(f"mobility_source must be one of {SOURCES}")
        if self.inner not in INNER:
            raise ValueError(f"inner must be one of {INNER}")
        for name in ("ns_inner", "ns_second"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ValueError(f"{name} must be >= 1")
        self.kernel = KernelKind(self.kernel).value


SolverConfig = SchurPrecondConfig


@dataclass
class ConstrainedState:
    v: list
    p: np.ndarray
    lam: np.ndarray

    @classmethod
    def zeros(cls, grid: GridSpec, n_markers: int) -> "ConstrainedState":
        return cls([np.zeros(grid.shape(a)) for a in range(grid.dim)], np.zeros(grid.n),
                   np.zeros((n_markers, grid.dim)))

    def copy(self) -> "ConstrainedState":
        return ConstrainedState([c.copy() for c in self.v], self.p.copy(), self.lam.copy())

    @property
    def total_force(self) -> np.ndarray:
        """Net force applied to the fluid by the markers (the body feels minus this)."""
        return self.lam.sum(axis=0)


@dataclass
class SolveResult:
    state: ConstrainedState
    converged: bool
    iterations: int
    residuals: list
    ps_per_iteration: list        # Stokes-preconditioner applications in each outer iteration
    ps_total: int

    def log_rows(self):
        rows = [(0, 0, self.residuals[0])]
        for k, (n, r) in enumerate(zip(self.ps_per_iteration, self.residuals[1:]), start=1):
            rows.append((k, n, r))
        return rows

    def write_log(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["outer_iter", "ps_applications", "residual"])
            for k, n, r in self.log_rows():
                w.writerow([k, n, repr(float(r))])


def marker_spacing(pos) -> float:
    """Smallest pairwise distance between markers."""
    pos = np.asarray(pos, dtype=float)
    if len(pos) < 2:
        return math.inf
    d, _ = cKDTree(pos).query(pos, k=2)
    return float(d[:, 1].min())


class ConstrainedSystem:
    """Operator, preconditioner and solvers for one grid, parameter set and
    fixed marker configuration."""

    def __init__(self, grid: GridSpec, params: StokesParams, markers, config: SchurPrecondConfig | None = None,
                 fit: MobilityFit | None = None, mobility=None):
        self.grid, self.params = grid, params
        self.config = cfg = config or SchurPrecondConfig()
        self.markers = markers if isinstance(markers, MarkerSet) else MarkerSet(markers)
        self.n_markers = len(self.markers)
        self.ib = IBOperator(grid, self.markers.pos, cfg.kernel)
        self.stokes = StokesSolver(grid, params, StokesConfig(inner=cfg.inner, pre_sweeps=cfg.pre_sweeps,
                                                              post_sweeps=cfg.post_sweeps))
        self.periodic_steady = self.stokes.velocity_null
        self.layout = Layout(grid, grid.kinds(), extra=self.n_markers * grid.dim)
        default_ns = 2 if grid.fully_periodic else 4
        self.ns = cfg.ns_inner or default_ns
        self.ns2 = cfg.ns_second or self.ns
        self._fit = fit
        self._mob = None
        if mobility is not None:
            self._mob = mobility if isinstance(mobility, DenseMobility) else self._factor(mobility)
        if self.n_markers > 1:
            ratio = marker_spacing(self.markers.pos) / grid.h
            if ratio < 0.99 or ratio > 3.0:
                warnings.warn(f"marker spacing s/h = {ratio:.2f}; s/h ~ 2 is recommended", SpacingWarning,
                              stacklevel=2)

    # -- packing -----------------------------------------------------------
    def pack(self, v, p, lam) -> np.ndarray:
        return self.layout.pack([*v, p, np.asarray(lam, float).ravel()])

    def unpack(self, x):
        parts = self.layout.unpack(x)
        d = self.grid.dim
        return parts[:d], parts[d], parts[d + 1].reshape(self.n_markers, d)

    def state(self, x) -> ConstrainedState:
        v, p, lam = self.unpack(x)
        return ConstrainedState([c.copy() for c in v], p.copy(), lam.copy())

    def vector(self, s: ConstrainedState) -> np.ndarray:
        return self.pack(s.v, s.p, s.lam)

    # -- operator -------------------------------------------------------------
    def spread(self, lam) -> list:
        if self.periodic_steady:
            return self.ib.spread_mean_subtracted(lam)
        return self.ib.spread(lam)

    def interpolate(self, v, inhom: bool = False) -> np.ndarray:
        return self.ib.interpolate(v, inhom)

    def apply_fields(self, v, p, lam, inhom: bool = False):
        """Blocks ``(A v + G p - S lam, -D v, -J v)`` (affine boundary terms
        included when ``inhom`` is set)."""
        mom, cont = self.stokes.apply_fields(v, p, inhom)
        sl = self.spread(lam)
        mom = [mom[a] - sl[a] for a in range(self.grid.dim)]
        return mom, cont, -self.ib.interpolate(v, inhom)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.pack(*self.apply_fields(*self.unpack(x)))

    def affine(self) -> np.ndarray:
        """Boundary-data contribution of the operator applied to zero."""
        z = ConstrainedState.zeros(self.grid, self.n_markers)
        return self.pack(*self.apply_fields(z.v, z.p, z.lam, inhom=True))

    def residual(self, s: ConstrainedState, g=None, h=None, W=None) -> np.ndarray:
        return self.pack(*self.apply_fields(s.v, s.p, s.lam, inhom=True)) - self._rhs_raw(g, h, W)

    def _rhs_raw(self, g, h, W):
        grid = self.grid
        g = [np.zeros(grid.shape(a)) for a in range(grid.dim)] if g is None else \
            [zero_inactive(np.asarray(c, float), grid, a) for a, c in enumerate(g)]
        h = np.zeros(grid.n) if h is None else np.asarray(h, float)
        W = -self.markers.vel if W is None else np.asarray(W, float).reshape(self.n_markers, grid.dim)
        return self.pack(g, h, W)

    def rhs(self, g=None, h=None, W=None) -> np.ndarray:
        """Right-hand side of the linear system with boundary data moved over.

        ``W`` defaults to ``-V`` from the marker velocities.  In null-space
        cases the momentum (periodic steady) and continuity (no stress
        boundary) rows are projected onto the consistent subspace.
        """
        b = self._rhs_raw(g, h, W) - self.affine()
        v, p, lam = self.unpack(b)
        if self.periodic_steady:
            v = [c - c.mean() for c in v]
        if self.stokes.pressure_null:
            p = p - p.mean()
        return self.pack(v, p, lam)

    # -- mobility --------------------------------------------------------------
    @property
    def fit(self) -> MobilityFit:
        if self._fit is None:
            self._fit = load_default_fit(self.grid.dim, self.config.kernel)
        return self._fit

    def _factor(self, M) -> DenseMobility:
        c = self.config.svd_cutoff
        if c is not None:
            return DenseMobility(M, "svd", c)
        return DenseMobility(M, "auto")

    def _box(self):
        g = self.grid
        return np.array([g.lengths[a] if g.periodic(a) else np.inf for a in range(g.dim)])

    def mobility_matrix(self, source: str | None = None) -> np.ndarray:
        """Dense approximate (``fit``, ``rpy``) or exact mobility of the markers."""
        source = source or self.config.mobility_source
        g, prm = self.grid, self.params
        eta = prm.c1
        pos = self.ib.pos
        if source == "exact":
            return self.exact_mobility()
        if source == "rpy":
            if g.dim != 3:
                raise ValueError("the RPY tensor is three-dimensional")
            try:
                a = self.fit.a_over_h * g.h
            except FileNotFoundError:
                a = 1.255 * g.h
            return assemble_mobility(pos, lambda r: rpy_pair(r, a, eta), self._box())
        beta = prm.beta(g.h)
        if math.isinf(beta):
            if g.dim == 3:
                l = float(g.lengths[0]) if self.periodic_steady else None
            else:
                per = [g.lengths[a] for a in range(g.dim) if g.periodic(a)]
                l = float(max(per) if per else max(g.lengths))
        else:
            l = None
        return assemble_mobility(pos, self.fit.pair(beta, eta, g.h, l), self._box())

    def exact_mobility(self) -> np.ndarray:
        """``J L^-1 S`` by one exact fluid solve per marker force component."""
        def solve_velocity(f):
            z = np.zeros(self.grid.n)
            x = self.stokes.solve_exact(self.stokes.pack(f, z))
            return self.stokes.unpack(x)[0]
        return exact_mobility(self.ib, solve_velocity, spread=self.spread)

    @property
    def mobility(self) -> DenseMobility:
        if self._mob is None:
            self._mob = self._factor(self.mobility_matrix())
        return self._mob

    # -- preconditioner ----------------------------------------------------------
    def _fluid_solve(self, gv, hp, ns):
        st = self.stokes
        b = st.pack(gv, hp)
        if self.config.inner in ("fft", "direct"):
            x = st.solve_fft(b) if self.config.inner == "fft" else st.solve_direct(b)
        else:
            x = st.solve(b, ns=ns).x
        return st.unpack(x)

    def precond_fields(self, gv, hp, W):
        """Schur-complement preconditioner applied to the blocks ``(g, h, W)``."""
        v, p = self._fluid_solve(gv, hp, self.ns)
        dV = -(self.ib.interpolate(v) + W)
        lam = self.mobility.solve(dV)
        if self.config.precond_variant == "full":
            sl = self.spread(lam)
            v, p = self._fluid_solve([gv[a] + sl[a] for a in range(self.grid.dim)], hp, self.ns2)
        return v, p, lam

    def precond(self, x: np.ndarray) -> np.ndarray:
        return self.pack(*self.precond_fields(*self.unpack(x)))

    # -- solvers -------------------------------------------------------------------
    def solve(self, g=None, h=None, W=None, x0: ConstrainedState | None = None, tol: float | None = None,
              log_path=None) -> SolveResult:
        """Solve the constrained problem with preconditioned FGMRES."""
        cfg = self.config
        b = self.rhs(g, h, W)
        _ = self.mobility  # factorise before counting preconditioner applications
        st = self.stokes
        start = st.precond_count
        marks = []

        def cb(it, rel):
            marks.append(st.precond_count)

        res = fgmres(self.apply, b, self.precond, x0=None if x0 is None else self.vector(x0),
                     tol=cfg.outer_tol if tol is None else tol, restart=cfg.outer_restart,
                     maxiter=cfg.outer_maxiter, callback=cb)
        per = list(np.diff([start] + marks).astype(int))
        out = SolveResult(self.state(res.x), res.converged, res.iterations, list(res.residuals), per,
                          st.precond_count - start)
        if not res.converged:
            log.warning("constrained solve did not converge: residual %.3e after %d iterations",
                        res.residuals[-1], res.iterations)
        if log_path is not None:
            out.write_log(log_path)
        return out

    def solve_unconstrained(self, g=None, h=None, tol: float = 1e-11):
        """Fluid solve ignoring the markers; returns ``(v, p)``."""
        grid, st = self.grid, self.stokes
        g = [np.zeros(grid.shape(a)) for a in range(grid.dim)] if g is None else list(g)
        h = np.zeros(grid.n) if h is None else h
        b = st.pack(g, h) - st.boundary_rhs()
        vv, pp = st.unpack(b)
        vv = [zero_inactive(c, grid, a) for a, c in enumerate(vv)]
        if st.velocity_null:
            vv = [c - c.mean() for c in vv]
        if st.pressure_null:
            pp = pp - pp.mean()
        b = st.pack(vv, pp)
        if self.config.inner in ("fft", "direct"):
            x = st.solve_exact(b)
        else:
            x = st.solve(b, tol=tol).x
        v, p = st.unpack(x)
        return [c.copy() for c in v], p.copy()

    def splitting_solve(self, g=None, h=None, W=None) -> ConstrainedState:
        """Direct-forcing baseline: fluid solve without the body, slip estimate,
        and a local velocity correction (no-slip holds only approximately)."""
        prm, grid = self.params, self.grid
        if prm.steady:
            raise ValueError("the splitting scheme needs a finite time step")
        W = -self.markers.vel if W is None else np.asarray(W, float).reshape(self.n_markers, grid.dim)
        v, p = self.solve_unconstrained(g, h)
        dV = -(self.ib.interpolate(v, inhom=True) + W)
        lam = prm.c0 * grid.h ** grid.dim * dV
        corr = self.ib.spread(dV)
        v = [v[a] + grid.h ** grid.dim * corr[a] for a in range(grid.dim)]
        return ConstrainedState(v, p, lam)

    # -- diagnostics ------------------------------------------------------------------
    def slip(self, s: ConstrainedState, W=None) -> np.ndarray:
        """``J v + W`` (zero when the no-slip constraint holds)."""
        W = -self.markers.vel if W is None else np.asarray(W, float).reshape(self.n_markers, self.grid.dim)
        return self.ib.interpolate(s.v, inhom=True) + W

    def divergence_norm(self, s: ConstrainedState) -> float:
        from .grid import divergence
        return float(np.abs(divergence(s.v, self.grid, inhom=True)).max())


# ----------------------------------------------------------------------------
# functional wrappers

def constrained_apply(state: ConstrainedState, system: ConstrainedSystem):
    """Residual blocks ``(A v + G p - S lam, -D v, -J v)`` of the homogeneous operator."""
    return system.apply_fields(state.v, state.p, state.lam)


def schur_precond_apply(g, h, W, system: ConstrainedSystem) -> ConstrainedState:
    v, p, lam = system.precond_fields(list(g), h, np.asarray(W, float).reshape(system.n_markers, -1))
    return ConstrainedState(list(v), p, lam)


def solve_constrained(grid: GridSpec, params: StokesParams, markers, config: SchurPrecondConfig | None = None,
                      g=None, h=None, W=None, **kw) -> SolveResult:
    return ConstrainedSystem(grid, params, markers, config, **kw).solve(g, h, W)


def splitting_step(state: ConstrainedState, system: ConstrainedSystem, body_force=None) -> ConstrainedState:
    """One time step of the splitting baseline without advection."""
    return TimeStepper(system, scheme="splitting", advect=False).step(state, body_force)


# ----------------------------------------------------------------------------
# time stepping

class TimeStepper:
    """IMEX stepping: viscous terms with the ``kappa`` rule built into ``A``,
    advection explicit (AB2 after a forward-Euler start).  Bodies are
    stationary; each step is one constrained solve (``monolithic``) or one
    direct-forcing step (``splitting``)."""

    def __init__(self, system: ConstrainedSystem, scheme: str = "monolithic", advect: bool = True,
                 cfl_limit: float = 0.5):
        if system.params.steady:
            raise ValueError("time stepping needs a finite time step")
        if scheme not in ("monolithic", "splitting"):
            raise ValueError("scheme must be 'monolithic' or 'splitting'")
        self.system, self.scheme, self.advect = system, scheme, advect
        self.cfl_limit = cfl_limit
        self._prev_adv = None
        self.last_result: SolveResult | None = None

    def explicit_rhs(self, state: ConstrainedState, body_force=None) -> list:
        sys, grid, prm = self.system, self.system.grid, self.system.params
        d = grid.dim
        g = [prm.c0 * state.v[a] for a in range(d)]
        ke = (1.0 - prm.kappa) * prm.eta
        if ke != 0.0:
            for a in range(d):
                g[a] = g[a] + ke * laplacian(state.v[a], grid, a, inhom=True) / grid.h ** 2
        if self.advect:
            cfl = advective_cfl(state.v, grid, prm.dt)
            if cfl > self.cfl_limit:
                warnings.warn(f"advective CFL {cfl:.3f} exceeds {self.cfl_limit}", CFLWarning, stacklevel=3)
            n_now = advection(state.v, grid, inhom=True)
            if self._prev_adv is None:
                adv = n_now
            else:
                adv = [1.5 * n_now[a] - 0.5 * self._prev_adv[a] for a in range(d)]
            self._prev_adv = n_now
            g = [g[a] - prm.rho * adv[a] for a in range(d)]
        if body_force is not None:
            f = np.broadcast_to(np.asarray(body_force, float), (d,))
            g = [g[a] + f[a] for a in range(d)]
        return [zero_inactive(c, grid, a) for a, c in enumerate(g)]

    def step(self, state: ConstrainedState, body_force=None) -> ConstrainedState:
        g = self.explicit_rhs(state, body_force)
        if self.scheme == "splitting":
            return self.system.splitting_solve(g)
        res = self.system.solve(g, x0=state)
        self.last_result = res
        if not res.converged:
            raise RuntimeError("constrained solve failed to converge")
        return res.state


def advance_time(state: ConstrainedState, system: ConstrainedSystem, n_steps: int = 1, body_force=None,
                 scheme: str = "monolithic", advect: bool = True) -> ConstrainedState:
    stepper = TimeStepper(system, scheme, advect)
    for _ in range(n_steps):
        state = stepper.step(state, body_force)
    return state


@dataclass
class DriveResult:
    state: ConstrainedState
    mean_velocity: np.ndarray
    force: np.ndarray              # vol * f, the total force applied to the fluid
    marker_force: np.ndarray       # sum of lam
    k: float
    steps: int
    steady: bool
    history: list = field(default_factory=list)

    @property
    def force_balance(self) -> float:
        """``|vol f + sum lam| / |vol f|``."""
        return float(np.linalg.norm(self.force + self.marker_force) / np.linalg.norm(self.force))


def mean_velocity(v, grid: GridSpec) -> np.ndarray:
    return np.array([float(np.mean(c)) for c in v])


def steady_state_drive(system: ConstrainedSystem, body_force, stop_tol: float = 1e-6, window: int = 50,
                       max_steps: int = 20000, state: ConstrainedState | None = None,
                       scheme: str = "monolithic", advect: bool = True, progress=None) -> DriveResult:
    """March a periodic system driven by a uniform body force to steady state.

    Steady means ``||v^{n+1} - v^n|| / (||v^{n+1}|| dt) < stop_tol`` for
    ``window`` consecutive steps.  If that never happens within ``max_steps``
    the flow is flagged as unsteady and the last-window averages are reported.
    ``state`` warm-starts the march (e.g. from the steady state at a nearby Re).
    """
    grid, prm = system.grid, system.params
    if not grid.fully_periodic:
        raise ValueError("the body-force drive needs a periodic domain")
    f = np.broadcast_to(np.asarray(body_force, float), (grid.dim,)).copy()
    stepper = TimeStepper(system, scheme, advect)
    state = ConstrainedState.zeros(grid, system.n_markers) if state is None else state.copy()
    quiet, hist = 0, []
    recent_v, recent_lam = [], []
    steady = False
    n = 0
    for n in range(1, max_steps + 1):
        new = stepper.step(state, f)
        dv = math.sqrt(sum(float(np.sum((new.v[a] - state.v[a]) ** 2)) for a in range(grid.dim)))
        vn = math.sqrt(sum(float(np.sum(c ** 2)) for c in new.v))
        rate = dv / (max(vn, 1e-300) * prm.dt)
        hist.append(rate)
        state = new
        recent_v.append(mean_velocity(state.v, grid))
        recent_lam.append(state.lam.sum(axis=0))
        if len(recent_v) > window:
            recent_v.pop(0)
            recent_lam.pop(0)
        quiet = quiet + 1 if rate < stop_tol else 0
        if progress is not None:
            progress(n, rate)
        if quiet >= window:
            steady = True
            break
    if steady:
        vbar, lsum = mean_velocity(state.v, grid), state.lam.sum(axis=0)
    else:
        log.warning("no steady state after %d steps; reporting the average over the last %d", n, len(recent_v))
        vbar, lsum = np.mean(recent_v, axis=0), np.mean(recent_lam, axis=0)
    F = grid.volume * f
    k = float(F[0] / (prm.eta * vbar[0])) if vbar[0] != 0 else math.nan
    return DriveResult(state, vbar, F, lsum, k, n, steady, hist)


# ----------------------------------------------------------------------------
# tractions

def traction_estimates(lam, areas) -> np.ndarray:
    """Pointwise tractions ``t_i = lam_i / dA_i``."""
    lam = np.asarray(lam, float)
    areas = np.asarray(areas, float)
    if np.any(areas <= 0):
        raise ValueError("marker areas must be positive")
    return lam / areas[:, None]


def spherical_tractions(pos, t, center=None, axis: int = 0):
    """Flow-aligned spherical components ``(theta, sigma_n, sigma_theta, sigma_phi)``.

    ``theta`` is the polar angle from the ``axis`` direction; ``sigma_theta``
    points towards increasing ``theta``.
    """
    pos = np.asarray(pos, float)
    center = pos.mean(axis=0) if center is None else np.asarray(center, float)
    r = pos - center
    perm = [axis, (axis + 1) % 3, (axis + 2) % 3]
    x, y, z = r[:, perm[0]], r[:, perm[1]], r[:, perm[2]]
    tx, ty, tz = t[:, perm[0]], t[:, perm[1]], t[:, perm[2]]
    rad = np.sqrt(x * x + y * y + z * z)
    theta = np.arccos(np.clip(x / rad, -1, 1))
    phi = np.arctan2(z, y)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    sn = tx * ct + ty * st * cp + tz * st * sp
    sth = -tx * st + ty * ct * cp + tz * ct * sp
    sph = -ty * sp + tz * cp
    return theta, sn, sth, sph
