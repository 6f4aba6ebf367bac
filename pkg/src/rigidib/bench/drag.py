"""Drag of periodic arrays: hydrodynamic radii, the steady 2D drag curve,
finite-Re drag in 2D and 3D, and mobility spectra of shells."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..geometry import circle_shell, filled_sphere, icosphere_shell, nearest_neighbour_spacing, polar_disk
from ..grid import GridSpec
from ..kernels import MarkerSet
from ..mobility.dense import condition_number
from ..mobility.radius import drag_lubrication_2d, drag_periodic_2d, hydrodynamic_radius
from ..rigid import ConstrainedSystem, SchurPrecondConfig, steady_state_drive
from ..stokes import StokesParams
from .common import BenchReport, Timer


# ----------------------------------------------------------------------------
# body models (positions relative to the body centre, grid spacing h)

@dataclass(frozen=True)
class BodyModel:
    """A marker model described in units of the grid spacing.

    ``kind`` is ``shell`` (icosphere of ``level``), ``filled`` (filled sphere on
    an icosphere surface of ``level``), ``ring`` (2D circle of ``count``
    markers) or ``disk`` (2D polar disk whose surface ring has ``count``
    markers).  ``spacing`` is the surface marker spacing over ``h``.
    """
    kind: str
    level: int = 3
    count: int = 39
    spacing: float = 2.0

    @property
    def dim(self) -> int:
        return 3 if self.kind in ("shell", "filled") else 2

    def radius(self, h: float = 1.0) -> float:
        s = self.spacing * h
        if self.dim == 3:
            return s / nearest_neighbour_spacing(self.level)
        return s / (2.0 * math.sin(math.pi / self.count))

    def positions(self, h: float = 1.0, center=None) -> np.ndarray:
        c = np.zeros(self.dim) if center is None else np.asarray(center, float)
        R, s = self.radius(h), self.spacing * h
        if self.kind == "shell":
            return icosphere_shell(self.level, R, c)
        if self.kind == "filled":
            return filled_sphere(self.level, R, s, c)
        if self.kind == "ring":
            return circle_shell(self.count, R, c)
        if self.kind == "disk":
            return polar_disk(R, s, c)
        raise ValueError(f"unknown body kind {self.kind!r}")

    @property
    def label(self) -> str:
        n = len(self.positions())
        return f"{self.kind}-{n}"


MODELS = {
    "shell12": BodyModel("shell", level=1),
    "shell42": BodyModel("shell", level=2),
    "shell162": BodyModel("shell", level=3),
    "shell642": BodyModel("shell", level=4),
    "filled162": BodyModel("filled", level=3),
    "shell39": BodyModel("ring", count=39),
    "disk37": BodyModel("disk", count=37),
}


def get_model(name: str) -> BodyModel:
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown body model {name!r}; choose from {sorted(MODELS)}") from None


# ----------------------------------------------------------------------------
# steady periodic drag

def periodic_system(rel_pos, n, h: float = 1.0, params: StokesParams | None = None,
                    config: SchurPrecondConfig | None = None, velocity=None) -> ConstrainedSystem:
    """One body at the centre of a fully periodic box of ``n`` cells per side."""
    rel_pos = np.asarray(rel_pos, float)
    d = rel_pos.shape[1]
    grid = GridSpec((n,) * d if np.isscalar(n) else tuple(n), h)
    pos = rel_pos + 0.5 * grid.lengths
    V = np.zeros(d)
    V[0] = 1.0
    if velocity is not None:
        V = np.asarray(velocity, float)
    ms = MarkerSet(pos, np.tile(V, (len(pos), 1)))
    if config is None:
        config = SchurPrecondConfig(inner="fft", mobility_source="exact" if d == 2 else "fit")
    return ConstrainedSystem(grid, params or StokesParams(rho=0.0, eta=1.0), ms, config)


def periodic_drag(rel_pos, n, h: float = 1.0, config: SchurPrecondConfig | None = None, eta: float = 1.0):
    """``F / (eta V)`` on a body translating along x at unit speed through a
    periodic array (steady Stokes).  Returns the drag and the solve result."""
    sys = periodic_system(rel_pos, n, h, StokesParams(rho=0.0, eta=eta), config)
    res = sys.solve()
    if not res.converged:
        raise RuntimeError("periodic drag solve did not converge")
    # sum(lam) is the force the body exerts on the fluid: along V, equal in
    # size to the drag the body feels
    return float(res.state.total_force[0]) / eta, res, sys


def measure_radius(rel_pos, n, h: float = 1.0, config: SchurPrecondConfig | None = None) -> float:
    """Hydrodynamic radius from the periodic drag law."""
    rel_pos = np.asarray(rel_pos, float)
    F, _, _ = periodic_drag(rel_pos, n, h, config)
    return hydrodynamic_radius(F, n * h, rel_pos.shape[1])


def radius_table_3d(levels=(2, 3, 4), cells_per_radius: float = 4.5, spacing: float = 2.0,
                    config: SchurPrecondConfig | None = None, log=print):
    """Rows ``(markers, R_g/h, n, R_h/h, R_h/R_g)`` for icosphere shells with
    ``s = spacing * h`` in boxes about ``cells_per_radius`` radii wide."""
    rows = []
    for k in levels:
        m = BodyModel("shell", level=k, spacing=spacing)
        Rg = m.radius()
        n = int(2 * math.ceil(cells_per_radius * Rg / 2))
        Rh = measure_radius(m.positions(), n, 1.0, config)
        rows.append((len(m.positions()), Rg, n, Rh, Rh / Rg))
        log(f"shell k={k}: N={rows[-1][0]}, R_g={Rg:.3f}h, box {n}^3, R_h/R_g = {Rh / Rg:.4f}")
    return rows


# ----------------------------------------------------------------------------
# 2D drag curve

DEFAULT_PHI = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)


def bench_drag2d(phis=DEFAULT_PHI, model: str = "shell39", eps_lub=(0.1, 0.05), log=print) -> BenchReport:
    """Steady drag of a square array of cylinders against the dilute and the
    lubrication laws.  ``R_h`` is measured in the most dilute array."""
    rep = BenchReport("drag2d")
    body = get_model(model)
    rel = body.positions()
    Rg = body.radius()
    with Timer() as tm:
        phi0 = min(phis)
        n0 = int(round(Rg * math.sqrt(math.pi / phi0)))
        Rh = measure_radius(rel, n0)
        for _ in range(2):  # re-size the dilute box with the measured radius
            n_new = int(round(Rh * math.sqrt(math.pi / phi0)))
            if n_new == n0:
                break
            n0 = n_new
            Rh = measure_radius(rel, n0)
        log(f"{body.label}: R_g = {Rg:.3f}h, R_h = {Rh:.3f}h, R_h/R_g = {Rh / Rg:.4f}")
        targets = [("phi", p) for p in phis] + [("eps", e) for e in eps_lub]
        rows, done = [], set()
        for what, val in targets:
            n = int(round(Rh * math.sqrt(math.pi / val))) if what == "phi" else int(round(2 * Rh / (1 - val)))
            if n in done:
                continue
            done.add(n)
            F, res, _ = periodic_drag(rel, n)
            phi = math.pi * Rh ** 2 / n ** 2
            eps = 1.0 - 2.0 * Rh / n
            dil = float(drag_periodic_2d(Rh, n))
            lub = float(drag_lubrication_2d(phi)) if eps > 0 else math.nan
            rows.append([n, phi, eps, F, dil, F / dil, lub, F / lub, res.iterations])
            log(f"box {n}^2: phi={phi:.4f} eps={eps:.4f} F/(eta V)={F:.4f} dilute={dil:.4f} lub={lub:.4f}")
    rep.elapsed = tm.elapsed
    rep.tables["drag2d.csv"] = (["box_cells", "phi", "eps", "drag[F/(eta*V)]", "dilute_law", "ratio_dilute",
                                 "lubrication_law", "ratio_lubrication", "outer_iterations"], rows)
    rep.tables["radius.csv"] = (["model", "markers", "R_g[h]", "R_h[h]", "R_h/R_g"],
                                [[model, len(rel), Rg, Rh, Rh / Rg]])
    rep.data.update(R_h=Rh, R_g=Rg, rows=rows)
    rep.check(f"{model} R_h/R_g", Rh / Rg, 1.0, 1.1)
    dil_err = max(abs(r[5] - 1) for r in rows if r[1] <= 0.1 + 1e-12)
    rep.check("max |drag/dilute - 1| for phi <= 0.1", dil_err, 0.0, 0.03)
    closest = min(rows, key=lambda r: abs(r[2] - 0.05))
    rep.check(f"drag/lubrication at eps = {closest[2]:.3f}", closest[7], 1 / 1.5, 1.5)
    return rep


# ----------------------------------------------------------------------------
# finite-Re drag of periodic arrays

def fit_quadratic(Re, k):
    """Least-squares ``k = k0 + k2 Re^2``."""
    Re, k = np.asarray(Re, float), np.asarray(k, float)
    A = np.column_stack([np.ones_like(Re), Re ** 2])
    (k0, k2), *_ = np.linalg.lstsq(A, k, rcond=None)
    return float(k0), float(k2)


def bench_finite_re_2d(res=(0.5, 1.0, 1.5, 2.0, 2.5, 3.0), n: int = 64, phi: float = 0.193,
                       model: str = "disk37", cfl: float = 0.1, stop_tol: float = 1e-6, window: int = 50,
                       max_steps: int = 20000, log=print) -> BenchReport:
    """Square array of filled cylinders at finite Re: ``k = F / (eta vbar)``
    with ``F`` the body force per cell; fits ``k0 + k2 Re^2``."""
    rep = BenchReport("finite_re_2d")
    base = get_model(model)
    with Timer() as tm:
        # choose the marker spacing so that the array has the target solid fraction
        Rh_target = math.sqrt(phi * n * n / math.pi)
        body = base
        for _ in range(4):
            rel = body.positions()
            Rh = measure_radius(rel, 4 * n)
            scale = Rh_target / Rh
            if abs(scale - 1) < 2e-3:
                break
            body = BodyModel(base.kind, base.level, base.count, body.spacing * (1 + (scale - 1) * 1.05))
        rel = body.positions()
        Rh = measure_radius(rel, 4 * n)
        phi_real = math.pi * Rh ** 2 / n ** 2
        log(f"{body.label}: s/h = {body.spacing:.3f}, R_h = {Rh:.3f}h, phi = {phi_real:.4f}")
        k0_steady, r0, _ = periodic_drag(rel, n)
        log(f"steady k0 = {k0_steady:.4f}")
        rows = []
        state = None
        prev_k = k0_steady
        for Re_t in sorted(res):
            U = Re_t / Rh  # rho = eta = h = 1
            dt = cfl / U
            prm = StokesParams(rho=1.0, eta=1.0, dt=dt)
            sys = periodic_system(rel, n, 1.0, prm, SchurPrecondConfig(inner="fft", mobility_source="exact"),
                                 velocity=np.zeros(2))
            f = np.array([prev_k * U / (n * n), 0.0])
            out = steady_state_drive(sys, f, stop_tol=stop_tol, window=window, max_steps=max_steps, state=state)
            ubar = out.mean_velocity[0]
            Re = ubar * Rh
            rows.append([Re_t, Re, out.k, dt, out.steps, int(out.steady), out.force_balance])
            log(f"Re {Re:.4f}: k = {out.k:.4f}, steps = {out.steps}, steady = {out.steady}")
            state, prev_k = out.state, out.k
    rep.elapsed = tm.elapsed
    k0, k2 = fit_quadratic([r[1] for r in rows], [r[2] for r in rows])
    rep.tables["finite_re_2d.csv"] = (["Re_target", "Re", "k[F/(eta*vbar)]", "dt", "steps", "steady",
                                       "force_balance"], rows)
    rep.tables["fit.csv"] = (["phi", "R_h[h]", "k0_steady", "k0_fit", "k2_fit"],
                             [[phi_real, Rh, k0_steady, k0, k2]])
    rep.data.update(k0=k0, k2=k2, k0_steady=k0_steady, phi=phi_real, R_h=Rh, rows=rows)
    rep.check("fitted k0", k0, 45.0, 53.0)
    rep.check("fitted k2", k2, 0.17, 0.31)
    return rep


def bench_drag3d(res=(0.01, 0.3, 0.5, 0.7, 1.0), n: int = 16, phi: float = 0.5236, model: str = "shell162",
                 cfl: float = 0.1, stop_tol: float = 1e-6, window: int = 50, max_steps: int = 20000,
                 log=print) -> BenchReport:
    """Simple cubic array of spheres: steady ``k0 = F / (6 pi eta R_h V)`` and the
    finite-Re ``k(Re)`` from a body-force drive."""
    rep = BenchReport("drag3d")
    base = get_model(model)
    big = 4 * n
    with Timer() as tm:
        Rh_target = (3 * phi / (4 * math.pi)) ** (1 / 3) * n
        body = base
        for _ in range(4):
            Rh = measure_radius(body.positions(), big)
            scale = Rh_target / Rh
            if abs(scale - 1) < 2e-3:
                break
            body = BodyModel(base.kind, base.level, base.count, body.spacing * (1 + (scale - 1) * 1.05))
        rel = body.positions()
        Rh = measure_radius(rel, big)
        phi_real = 4 / 3 * math.pi * Rh ** 3 / n ** 3
        exact = SchurPrecondConfig(inner="fft", mobility_source="exact")
        F0, _, _ = periodic_drag(rel, n, config=exact)
        k0 = F0 / (6 * math.pi * Rh)
        log(f"{body.label}: s/h = {body.spacing:.3f}, R_h = {Rh:.3f}h, phi = {phi_real:.4f}, k0 = {k0:.4f}")
        rows = []
        state, prev_k = None, k0
        for Re_t in sorted(res):
            U = Re_t / Rh
            dt = cfl / U
            prm = StokesParams(rho=1.0, eta=1.0, dt=dt)
            sys = periodic_system(rel, n, 1.0, prm, exact, velocity=np.zeros(3))
            f = np.array([prev_k * 6 * math.pi * Rh * U / n ** 3, 0.0, 0.0])
            out = steady_state_drive(sys, f, stop_tol=stop_tol, window=window, max_steps=max_steps, state=state)
            ubar = out.mean_velocity[0]
            k = out.k / (6 * math.pi * Rh)
            rows.append([Re_t, ubar * Rh, k, k - k0, dt, out.steps, int(out.steady), out.force_balance])
            log(f"Re {ubar * Rh:.4f}: k = {k:.5f}, k - k0 = {k - k0:.3e}, steps = {out.steps}")
            state, prev_k = out.state, k
    rep.elapsed = tm.elapsed
    rep.tables["drag3d.csv"] = (["Re_target", "Re", "k[F/(6*pi*eta*R_h*vbar)]", "k_minus_k0", "dt", "steps",
                                 "steady", "force_balance"], rows)
    rep.tables["k0.csv"] = (["model", "markers", "s/h", "R_h[h]", "phi", "k0"],
                            [[model, len(rel), body.spacing, Rh, phi_real, k0]])
    rep.data.update(k0=k0, phi=phi_real, R_h=Rh, rows=rows)
    rep.check("k0", k0, 40.0, 48.0)
    win = [r for r in rows if 0.3 - 1e-9 <= r[0] <= 1.0 + 1e-9 and r[3] > 0]
    if len(win) >= 2:
        slope = np.polyfit(np.log([r[1] for r in win]), np.log([r[3] for r in win]), 1)[0]
        rep.check("slope of log(k - k0) vs log Re on [0.3, 1]", slope, 1.7, 2.1)
    low = [r for r in rows if r[0] <= 0.01 + 1e-12]
    if low:
        rep.check("|k(Re=0.01) - k0| / k0", abs(low[0][3]) / k0, 0.0, 0.01)
    return rep


# ----------------------------------------------------------------------------
# mobility spectra

def bench_spectrum(level: int = 3, ratios=(1.0, 1.5, 2.0), n: int = 32, null_rel: float = 0.1,
                   log=print) -> BenchReport:
    """Exact steady periodic mobility of an icosphere shell at several marker
    spacings: sorted spectra, condition numbers without the compression mode,
    the number of near-null modes (eigenvalues an order of magnitude or more
    below the median, ``null_rel``) and the overlap of the softest mode with
    uniform radial compression."""
    rep = BenchReport("spectrum")
    spectra, rows = {}, []
    with Timer() as tm:
        for q in ratios:
            body = BodyModel("shell", level=level, spacing=q)
            sys = periodic_system(body.positions(), n, 1.0, StokesParams(rho=0.0),
                                  SchurPrecondConfig(inner="fft", mobility_source="exact"))
            M = sys.exact_mobility()
            ev, vec = np.linalg.eigh(0.5 * (M + M.T))
            radial = body.positions()
            radial = (radial / np.linalg.norm(radial, axis=1, keepdims=True)).ravel()
            overlap = abs(float(vec[:, 0] @ radial)) / np.linalg.norm(radial)
            spectra[q] = ev
            med = float(np.median(ev))
            n_null = int(np.sum(ev < null_rel * med))
            cond = condition_number(M, skip=1)
            rows.append([q, len(body.positions()), body.radius(), ev[0], ev[1], ev[-1], cond, n_null, overlap])
            log(f"s/h = {q:g}: lambda_min = {ev[0]:.3e}, lambda_2 = {ev[1]:.3e}, lambda_max = {ev[-1]:.3e}, "
                f"cond (no compression mode) = {cond:.3e}, near-null = {n_null}, radial overlap = {overlap:.3f}")
    rep.elapsed = tm.elapsed
    rep.tables["spectrum_summary.csv"] = (["s/h", "markers", "R_g[h]", "lambda_1", "lambda_2", "lambda_max",
                                           "cond_without_compression", "near_null_modes",
                                           "softest_mode_radial_overlap"], rows)
    srt = sorted(spectra)
    rep.tables["spectra.csv"] = (["index"] + [f"eig_s/h={q:g}" for q in srt],
                                 [[i] + [spectra[q][i] for q in srt] for i in range(len(spectra[srt[0]]))])
    rep.data.update(spectra=spectra, rows=rows)
    by = {r[0]: r for r in rows}
    if 1.0 in by and 2.0 in by:
        rep.check("cond(s/h=1) / cond(s/h=2)", by[1.0][6] / by[2.0][6], 10.0, math.inf)
        rep.check("near-null modes at s/h=2", by[2.0][7], 1, 1)
    return rep
