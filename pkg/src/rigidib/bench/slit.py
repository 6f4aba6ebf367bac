"""A sphere translating parallel to the walls of a slit channel: effective
radius from the series mobility of a sphere between two plane walls."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from ..grid import GridSpec, Periodic, VelocityDirichlet
from ..kernels import MarkerSet, KernelKind
from ..rigid import ConstrainedSystem, SchurPrecondConfig
from ..stokes import StokesParams
from .common import BenchReport, Timer
from .drag import BodyModel, measure_radius

# parallel-mobility series coefficients of x = R / H for H = d/2 and H = d/4
SLIT_SERIES = {
    0.5: (1.0, -1.004, 0.0, 0.418, 0.21, -0.169),
    0.25: (1.0, -0.6526, 0.0, 0.1475, -0.131, -0.0644),
}


def slit_mobility(R: float, H: float, ratio: float, eta: float = 1.0) -> float:
    """Parallel mobility of a sphere of radius ``R`` at distance ``H`` from the
    nearer wall of a slit with ``H = ratio * d`` (``ratio`` 0.5 or 0.25)."""
    try:
        c = SLIT_SERIES[ratio]
    except KeyError:
        raise ValueError("series available for H/d = 0.5 and 0.25 only") from None
    x = R / H
    return float(np.polyval(c[::-1], x)) / (6.0 * math.pi * eta * R)


def slit_radius(mobility: float, H: float, ratio: float, eta: float = 1.0) -> float:
    """Invert :func:`slit_mobility` for ``R`` on ``0 < R < 0.6 H``."""
    f = lambda R: slit_mobility(R, H, ratio, eta) - mobility
    lo, hi = 1e-6 * H, 0.6 * H
    if f(lo) * f(hi) > 0:
        raise ValueError("measured mobility outside the range of the series")
    return brentq(f, lo, hi, xtol=1e-13 * H)


def slit_drag(body: BodyModel, n_xy: int, n_z: int, ratio: float, h: float = 1.0,
              config: SchurPrecondConfig | None = None):
    """Drag ``F / (eta V)`` of the body moving along x at height ``ratio * d``."""
    wall = VelocityDirichlet()
    grid = GridSpec((n_xy, n_xy, n_z), h, ((Periodic(), Periodic()), (Periodic(), Periodic()), (wall, wall)))
    d = n_z * h
    H = ratio * d
    center = np.array([0.5 * n_xy * h, 0.5 * n_xy * h, H])
    pos = body.positions(h, center)
    cfg = config or SchurPrecondConfig()
    support = 0.5 * KernelKind(cfg.kernel).width * h
    if pos[:, 2].min() < support or pos[:, 2].max() > d - support:
        raise ValueError("body too close to a wall: kernel support overlaps the boundary")
    ms = MarkerSet(pos, np.tile([1.0, 0.0, 0.0], (len(pos), 1)))
    sys = ConstrainedSystem(grid, StokesParams(rho=0.0, eta=1.0), ms, cfg)
    res = sys.solve()
    if not res.converged:
        raise RuntimeError("slit solve did not converge")
    return float(res.state.total_force[0]), H, res


def _multigrid_size(n: float) -> int:
    """Nearest multiple of 8, so the multigrid hierarchy can coarsen."""
    return max(8, 8 * int(round(n / 8)))


def bench_slit(levels=(1, 2), ratios=(0.5, 0.25), l_over_d=(1.0, 1.5, 2.0, 3.0), d_over_rh: float = 8.0,
               config: SchurPrecondConfig | None = None, log=print) -> BenchReport:
    """``R_L / R_h`` from the slit series as the periodic length ``L`` grows."""
    rep = BenchReport("slit")
    rows = []
    with Timer() as tm:
        for k in levels:
            body = BodyModel("shell", level=k)
            Rg = body.radius()
            Rh = measure_radius(body.positions(), int(2 * math.ceil(4.5 * Rg / 2)))
            n_z = _multigrid_size(d_over_rh * Rh)
            for ratio in ratios:
                for q in l_over_d:
                    n_xy = _multigrid_size(q * n_z)
                    F, H, res = slit_drag(body, n_xy, n_z, ratio, 1.0, config)
                    RL = slit_radius(1.0 / F, H, ratio)
                    rows.append([len(body.positions()), Rg, Rh, ratio, n_z, n_xy, n_xy / n_z, F, RL, RL / Rh,
                                 res.iterations])
                    log(f"N={len(body.positions())} H/d={ratio} L/d={n_xy / n_z:.2f}: R_L/R_h = {RL / Rh:.4f} "
                        f"({res.iterations} iterations)")
    rep.elapsed = tm.elapsed
    rep.tables["slit.csv"] = (["markers", "R_g[h]", "R_h[h]", "H/d", "d[h]", "L[h]", "L/d", "drag[F/(eta*V)]",
                               "R_L[h]", "R_L/R_h", "outer_iterations"], rows)
    rep.data["rows"] = rows
    # |R_L / R_h - 1| should shrink as L grows, for every model and height
    for k in levels:
        for ratio in ratios:
            sel = [r for r in rows if r[0] == len(BodyModel("shell", level=k).positions()) and r[3] == ratio]
            if len(sel) >= 2:
                dev = [abs(r[9] - 1) for r in sorted(sel, key=lambda r: r[6])]
                rep.check(f"N={sel[0][0]} H/d={ratio}: |R_L/R_h-1| at largest L minus at smallest L",
                          dev[-1] - dev[0], -math.inf, 0.0)
    return rep
