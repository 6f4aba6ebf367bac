"""Steady Stokes flow between two concentric spheres: closed-form reference
solution and the convergence study of a fixed inner shell inside a moving
outer shell.

The closed form follows the classical solution for a sphere of radius ``a``
at rest inside a spherical cavity of radius ``b = a / lambda``.  Written in
terms of the parameter ``V``, the fluid at the cavity wall moves rigidly with
velocity ``-V`` along the symmetry axis.  The azimuthal velocity uses the
coefficient ``2A/5`` on the ``r^2`` term, the value required by the stream
function (it makes ``v`` vanish at ``r = a`` and equal to the rigid cavity
motion at ``r = b``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..geometry import icosphere, icosphere_shell, marker_areas, nearest_neighbour_spacing
from ..grid import CELL, GridSpec, VelocityDirichlet, active_mask
from ..kernels import MarkerSet, concat_markers
from ..mobility.radius import hydrodynamic_radius
from ..rigid import ConstrainedSystem, SchurPrecondConfig, spherical_tractions, traction_estimates
from ..stokes import StokesParams
from .common import BenchReport, Timer, rate


@dataclass
class ConcentricAnalytic:
    a: float
    b: float
    V: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        lam = self.a / self.b
        if not 0.0 < lam < 1.0:
            raise ValueError("need 0 < a < b")
        self.lam = lam
        self.alpha = 1 - 2.25 * lam + 2.5 * lam ** 3 - 2.25 * lam ** 5 + lam ** 6
        al, a, V = self.alpha, self.a, self.V
        self.K = (1 - lam ** 5) / al
        self.A = -15.0 * V / (4.0 * a * a) * (lam ** 3 - lam ** 5) / al
        self.B = 1.5 * V * a * (1 - lam ** 5) / al
        self.C = 0.5 * V * (1 + 1.25 * lam ** 3 - 2.25 * lam ** 5) / al
        self.D = 0.25 * V * a ** 3 * (1 - lam ** 3) / al

    @property
    def cavity_velocity(self) -> float:
        """Velocity of the outer wall along the axis (``-V``)."""
        return -self.V

    def eval(self, r, theta):
        """``(v_r, v_theta, pi)`` between the spheres (``pi_inf = 0``)."""
        r = np.asarray(r, dtype=float)
        if np.any(r < self.a * (1 - 1e-12)) or np.any(r > self.b * (1 + 1e-12)):
            raise ValueError("r outside [a, b]")
        A, B, C, D, mu = self.A, self.B, self.C, self.D, self.eta
        c, s = np.cos(theta), np.sin(theta)
        vr = -c * (A / 5 * r ** 2 - B / r + 2 * C + 2 * D / r ** 3)
        vt = s * (2 * A / 5 * r ** 2 - B / (2 * r) + 2 * C - D / r ** 3)
        p = mu * B * c / r ** 2 - 2 * mu * A * r * c
        return vr, vt, p

    def traction(self, theta):
        """``(sigma_n, sigma_theta)`` of ``sigma . n`` on the inner sphere."""
        A, B, mu, a = self.A, self.B, self.eta, self.a
        return (mu * np.cos(theta) * (2 * A * a - B / a ** 2),
                mu * np.sin(theta) * (A * a + B / a ** 2))

    def drag(self) -> float:
        return -6.0 * math.pi * self.eta * self.a * self.V * self.K

    def fields(self, points, axis: int = 0):
        """Cartesian velocity and pressure at arbitrary points (relative to the
        common centre), extended by rest inside ``a`` and rigid motion outside ``b``."""
        x = np.asarray(points, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        rs = np.where(r > 0, r, 1.0)
        ct = x[..., axis] / rs
        theta = np.arccos(np.clip(ct, -1, 1))
        mid = (r >= self.a) & (r <= self.b)
        rc = np.clip(r, self.a, self.b)
        vr, vt, p = self.eval(rc, theta)
        rhat = x / rs[..., None]
        e = np.zeros(x.shape[-1])
        e[axis] = 1.0
        # theta-hat = (cos(theta) rhat - e) / sin(theta)
        st = np.sin(theta)
        sts = np.where(st > 1e-12, st, 1.0)
        that = (ct[..., None] * rhat - e) / sts[..., None]
        v = vr[..., None] * rhat + vt[..., None] * that
        v = np.where(mid[..., None], v, 0.0)
        v = np.where((r > self.b)[..., None], self.cavity_velocity * e, v)
        p = np.where(mid, p, 0.0)
        return v, p


def concentric_eval(r, theta, cfg: ConcentricAnalytic):
    return cfg.eval(r, theta)


def concentric_traction(theta, cfg: ConcentricAnalytic):
    return cfg.traction(theta)


def concentric_drag(cfg: ConcentricAnalytic) -> float:
    return cfg.drag()


def _k_of_lambda(lam):
    return (1 - lam ** 5) / (1 - 2.25 * lam + 2.5 * lam ** 3 - 2.25 * lam ** 5 + lam ** 6)


def inner_radius_from_drag(force_over_eta_v: float, R1: float) -> float:
    """Cavity radius ``R2`` such that the concentric drag matches the measured one."""
    K = force_over_eta_v / (6.0 * math.pi * R1)
    if K <= 1.0:
        raise ValueError("drag below the unbounded Stokes value")
    lam = brentq(lambda l: _k_of_lambda(l) - K, 1e-6, 0.95)
    return R1 / lam


# ----------------------------------------------------------------------------
# benchmark

LEVELS = ((30, 1, 3), (60, 2, 4), (120, 3, 5), (240, 4, 6))  # grid, inner level, outer level


def periodic_shell_radius(level: int, radius: float, n: int, h: float, config: SchurPrecondConfig | None = None):
    """Hydrodynamic radius of an icosphere shell from the drag of a simple
    cubic array (one shell per periodic cell of ``n`` cells)."""
    grid = GridSpec((n,) * 3, h)
    centre = 0.5 * grid.lengths
    pos = icosphere_shell(level, radius, centre)
    cfg = config or SchurPrecondConfig(inner="fft", kernel="peskin4")
    ms = MarkerSet(pos, np.tile([1.0, 0.0, 0.0], (len(pos), 1)))
    sys = ConstrainedSystem(grid, StokesParams(rho=0.0, eta=1.0), ms, cfg)
    res = sys.solve()
    if not res.converged:
        raise RuntimeError("periodic drag solve failed")
    F = res.state.total_force
    return hydrodynamic_radius(F[0], grid.lengths[0], 3), res


def error_norms(num, ref):
    """Relative L1, L2, Linf norms of ``num - ref`` (lists of arrays)."""
    d = np.concatenate([np.ravel(a - b) for a, b in zip(num, ref)])
    r = np.concatenate([np.ravel(b) for b in ref])
    return (float(np.abs(d).sum() / np.abs(r).sum()),
            float(np.sqrt((d ** 2).sum() / (r ** 2).sum())),
            float(np.abs(d).max() / np.abs(r).max()))


def run_concentric_level(n: int, inner_level: int, outer_level: int, kernel: str = "peskin4",
                         config: SchurPrecondConfig | None = None, log=print):
    """One resolution of the two-shell problem; returns a dict of results."""
    s_unit = nearest_neighbour_spacing(outer_level)
    # geometry from the outer shell: l = 4.15 R2, s ~ 2h on the outer shell
    R2g = 1.0
    l = 4.15 * R2g
    h = l / n
    R1g = R2g / 4.0
    grid_bc = tuple((VelocityDirichlet((1.0, 0.0, 0.0)), VelocityDirichlet((1.0, 0.0, 0.0))) for _ in range(3))
    grid = GridSpec((n, n, n), h, grid_bc)
    centre = 0.5 * grid.lengths
    v_in, f_in = icosphere(inner_level)
    v_out, f_out = icosphere(outer_level)
    inner = MarkerSet(R1g * v_in + centre, np.zeros((len(v_in), 3)), marker_areas(R1g * v_in, f_in))
    outer = MarkerSet(R2g * v_out + centre, np.tile([1.0, 0.0, 0.0], (len(v_out), 1)),
                      marker_areas(R2g * v_out, f_out))
    ms = concat_markers([inner, outer])
    n_in = len(inner)
    log(f"level {n}^3: markers {n_in}+{len(outer)}, s_out/h = {R2g * s_unit / h:.2f}, "
        f"s_in/h = {R1g * nearest_neighbour_spacing(inner_level) / h:.2f}")
    # hydrodynamic radius of the inner shell from a periodic array at the same h
    R1, _ = periodic_shell_radius(inner_level, R1g, n, h, SchurPrecondConfig(inner="fft", kernel=kernel))
    cfg = config or SchurPrecondConfig(kernel=kernel)
    sys = ConstrainedSystem(grid, StokesParams(rho=0.0, eta=1.0), ms, cfg)
    res = sys.solve()
    st = res.state
    F_in = st.lam[:n_in].sum(axis=0)
    # the inner sphere feels minus the force its markers apply to the fluid
    R2 = inner_radius_from_drag(-F_in[0], R1)
    ref = ConcentricAnalytic(R1, R2, V=-1.0)
    # compare unknowns only: boundary-normal faces carry the prescribed wall value
    vnum, vref = [], []
    for a in range(3):
        pts = np.stack(grid.mesh(a), axis=-1) - centre
        m = active_mask(grid, a)
        m = np.ones(grid.shape(a), dtype=bool) if m is None else m
        vnum.append(st.v[a][m])
        vref.append(ref.fields(pts)[0][..., a][m])
    pts = np.stack(grid.mesh(CELL), axis=-1) - centre
    pref = ref.fields(pts)[1]
    pref = pref - pref.mean()
    p = st.p - st.p.mean()
    ev = error_norms(vnum, vref)
    ep = error_norms([p], [pref])
    t = -traction_estimates(st.lam[:n_in], inner.area)
    theta, sn, sth, sph = spherical_tractions(inner.pos, t, centre, axis=0)
    an, at = ref.traction(theta)
    return dict(n=n, markers=f"{len(outer)}-{n_in}", h=h, R1g=R1g, R2g=R2g, R1=R1, R2=R2,
                drag_inner=-F_in[0], drag_theory=ref.drag(), iterations=res.iterations, ps=res.ps_total,
                converged=res.converged, ev=ev, ep=ep,
                traction=(theta, sn, sth, sph, an, at))


def bench_concentric(levels: int = 2, kernel: str = "peskin4", config: SchurPrecondConfig | None = None,
                     log=print) -> BenchReport:
    rep = BenchReport("concentric")
    with Timer() as tm:
        results = [run_concentric_level(*LEVELS[i], kernel=kernel, config=config, log=log)
                   for i in range(levels)]
    rep.elapsed = tm.elapsed
    rows_v, rows_p, rows_r, rows_t = [], [], [], []
    for i, r in enumerate(results):
        rv = ["", "", ""] if i == 0 else [rate(results[i - 1]["ev"][k], r["ev"][k]) for k in range(3)]
        rp = ["", "", ""] if i == 0 else [rate(results[i - 1]["ep"][k], r["ep"][k]) for k in range(3)]
        rows_v.append([r["markers"], r["n"], r["ev"][0], rv[0], r["ev"][1], rv[1], r["ev"][2], rv[2]])
        rows_p.append([r["markers"], r["n"], r["ep"][0], rp[0], r["ep"][1], rp[1], r["ep"][2], rp[2]])
        rows_r.append([r["markers"], r["n"], r["R1"] / r["R1g"], r["R2"] / r["R2g"], r["drag_inner"],
                       r["iterations"], r["ps"]])
        th, sn, sth, sph, an, at = r["traction"]
        rows_t += [[r["markers"], a, b, c, d, e, f] for a, b, c, d, e, f in zip(th, sn, sth, sph, an, at)]
    hdr = ["markers", "grid", "L1_rel", "L1_rate", "L2_rel", "L2_rate", "Linf_rel", "Linf_rate"]
    rep.tables["velocity_errors.csv"] = (hdr, rows_v)
    rep.tables["pressure_errors.csv"] = (hdr, rows_p)
    rep.tables["radii.csv"] = (["markers", "grid", "R1h_over_R1g", "R2h_over_R2g", "inner_drag[eta*V*R2g]",
                                "outer_iterations", "ps_applications"], rows_r)
    rep.tables["tractions.csv"] = (["markers", "theta[rad]", "sigma_n", "sigma_theta", "sigma_phi",
                                    "sigma_n_theory", "sigma_theta_theory"], rows_t)
    rep.data["results"] = results
    rep.check("velocity L1 error at 30^3", results[0]["ev"][0], 0.0, 0.08)
    if levels >= 2:
        rep.check("velocity L1 rate", rows_v[1][3], 0.9, 2.0)
        rep.check("velocity L2 rate", rows_v[1][5], 0.9, math.inf)
        rep.check("pressure Linf rate", rows_p[1][7], -math.inf, 0.4)
    return rep
