"""Generation of pair-mobility samples and least-squares fits of the fit forms.

Samples come from exact (spectral) solves of the unconstrained fluid problem in
a periodic box: markers are scattered at random in a small sub-box, a unit force
is applied to one marker and one direction at a time, and the velocity is
interpolated at every marker.  Each pair then yields the parallel and
perpendicular mobilities ``mu_par = rhat.M.rhat`` and
``mu_perp = (tr M - mu_par)/(d - 1)``.

Mobilities of finite-``beta`` samples are reported normalised by ``beta/(eta h)``
(so the inviscid limit ``beta = 0`` stays finite); steady samples are reported
in units of ``1/(eta h)`` (3D) or ``1/eta`` (2D).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from ..grid import GridSpec
from ..kernels import IBOperator, KernelKind
from ..stokes import StokesParams, StokesSolver
from . import fits as F

BETA_NODES_3D = (0.0, 0.1, 0.25, 0.5, 1.0, 10.0, 100.0, 1000.0)
BETA_NODES_2D = (0.0, 0.1, 0.25, 0.5, 1.0, 5.0, 10.0)


@dataclass
class Samples:
    dim: int
    kernel: str
    beta: float
    box: float                       # periodic cell size in units of h
    r: np.ndarray                    # pair distances / h
    mu_par: np.ndarray
    mu_perp: np.ndarray
    self_mu: np.ndarray              # diagonal blocks, tr M_ii / d

    def write_csv(self, path, mode="w"):
        with open(path, mode, newline="") as fh:
            w = csv.writer(fh)
            if mode == "w":
                w.writerow(["r_over_h", "beta", "mu_par", "mu_perp"])
            for s in self.self_mu:
                w.writerow([0.0, self.beta, repr(float(s)), repr(float(s))])
            for r, a, b in zip(self.r, self.mu_par, self.mu_perp):
                w.writerow([repr(float(r)), self.beta, repr(float(a)), repr(float(b))])


def _params(beta: float) -> StokesParams:
    if math.isinf(beta):
        return StokesParams(rho=0.0, eta=1.0)
    # scaled operator I - beta L: mobilities come out already divided by beta/(eta h)
    return StokesParams(rho=1.0, eta=beta, dt=1.0)


def mobility_samples(dim: int = 3, n: int = 64, kernel="peskin4", beta: float = math.inf,
                     n_markers: int = 40, seed: int = 0, subbox: float = 1.0 / 8.0) -> Samples:
    """Exact pair mobilities of random markers in a periodic box of ``n^dim`` cells (h = 1)."""
    rng = np.random.default_rng(seed)
    grid = GridSpec((n,) * dim, 1.0)
    solver = StokesSolver(grid, _params(beta))
    side = n * subbox
    pos = n / 2.0 + (rng.random((n_markers, dim)) - 0.5) * side
    ib = IBOperator(grid, pos, KernelKind(kernel))
    zero_p = np.zeros(grid.n)

    def velocity(fd):
        x = solver.solve_fft(solver.pack(fd, zero_p))
        return solver.unpack(x)[0]

    from .dense import exact_mobility
    M = exact_mobility(ib, velocity, symmetrize=True)
    blocks = M.reshape(n_markers, dim, n_markers, dim).transpose(0, 2, 1, 3)
    iu, ju = np.triu_indices(n_markers, 1)
    d = pos[iu] - pos[ju]
    r = np.linalg.norm(d, axis=1)
    rh = d / r[:, None]
    B = blocks[iu, ju]
    par = np.einsum("ka,kab,kb->k", rh, B, rh)
    perp = (np.trace(B, axis1=1, axis2=2) - par) / (dim - 1)
    self_mu = np.trace(blocks[np.arange(n_markers), np.arange(n_markers)], axis1=1, axis2=2) / dim
    return Samples(dim, KernelKind(kernel).value, beta, float(n), r, par, perp, self_mu)


# ----------------------------------------------------------------------------
# least squares helpers

def _multistart(resid, lo, hi, n_starts, rng, x0=None):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    best = None
    starts = [] if x0 is None else [np.clip(x0, lo + 1e-12, hi - 1e-12)]
    flo = np.where(np.isfinite(lo), lo, -5.0)
    fhi = np.where(np.isfinite(hi), hi, 5.0)
    for _ in range(n_starts):
        u = rng.random(len(lo))
        pos = flo >= 0
        x = flo + u * (fhi - flo)
        # log-uniform start for non-negative parameters
        x[pos] = np.exp(np.log(np.maximum(flo[pos], 1e-3)) + u[pos] * (np.log(fhi[pos]) - np.log(np.maximum(flo[pos], 1e-3))))
        starts.append(np.clip(x, lo + 1e-12, hi - 1e-12))
    for x in starts:
        try:
            res = least_squares(resid, x, bounds=(lo, hi), method="trf", max_nfev=4000, x_scale="jac")
        except (ValueError, FloatingPointError):
            continue
        if np.isfinite(res.cost) and (best is None or res.cost < best.cost):
            best = res
    if best is None:
        raise RuntimeError("all fit starts failed")
    return best.x


# ----------------------------------------------------------------------------
# 3D

def fit_steady_3d(s: Samples, n_starts: int = 12, seed: int = 0, weight_break: float = 10.0):
    """Fit ``(a/h, b0..b6)`` of the steady 3D forms to samples."""
    l = s.box
    corr = F.PERIODIC_3D / (6.0 * np.pi * l)
    a = 1.0 / (6.0 * np.pi * (np.mean(s.self_mu) + corr))
    x = s.r
    ft_d = 8.0 * np.pi * x * (s.mu_perp + corr)
    gt_d = 8.0 * np.pi * x * (s.mu_par - s.mu_perp)
    scale = np.abs(ft_d) + np.abs(gt_d) + 1e-3

    def resid(b):
        ft, gt = F.steady3d_tilde(x, a, b)
        xb = np.array([F.BREAK_3D])
        fl = xb / (0.75 * a + b[0] * xb ** 2)
        fr = b[1] * xb * np.exp(-b[2] * xb) + (b[3] * xb ** 2 + xb ** 4) / (1 + b[4] * xb ** 2 + xb ** 4)
        return np.concatenate([(ft - ft_d) / scale, (gt - gt_d) / scale, weight_break * (fl - fr)])

    lo = [0.0, -20.0, 0.0, -20.0, -1.9, 1e-6, 0.0]
    hi = [20.0, 20.0, 20.0, 100.0, 100.0, 200.0, 200.0]
    b = _multistart(resid, lo, hi, n_starts, np.random.default_rng(seed))
    return a, b


def fit_phi0_3d(betas, phi0, a_over_h, z0, seed=0):
    betas, phi0 = np.asarray(betas, float), np.asarray(phi0, float)

    def resid(zz):
        z = np.array([z0, *zz])
        return (F.phi0_3d(betas, z, a_over_h) - phi0) / phi0

    zz = _multistart(resid, [0.0, 1e-6, 0.0], [100.0, 100.0, 100.0], 12, np.random.default_rng(seed))
    return np.array([z0, *zz])


def fit_beta_3d(s: Samples, phi0: float, n_starts: int = 12, seed: int = 0, x0=None):
    """Fit ``a0..a9, b0..b5`` at one ``beta`` node; ``phi0`` comes from the self law."""
    x = s.r
    ft_d = -4.0 * np.pi * x ** 3 * s.mu_perp
    gt_d = 4.0 * np.pi * x ** 3 * (s.mu_par - s.mu_perp) / 3.0
    scale = np.abs(ft_d) + 3.0 * np.abs(gt_d) + 1e-6
    beta = s.beta

    def resid(p):
        ft, gt = F.beta3d_tilde(x, beta, phi0, p[:10], p[10:])
        return np.concatenate([(ft - ft_d) / scale, 3.0 * (gt - gt_d) / scale])

    lo = [0.0, 0.0, 0.0, 0.0, 0.0, -50.0, 0.0, -50.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1e-6]
    hi = [50.0] * 5 + [50.0, 20.0, 50.0, 50.0, 50.0] + [50.0] * 5 + [500.0]
    return _multistart(resid, lo, hi, n_starts, np.random.default_rng(seed), x0)


# ----------------------------------------------------------------------------
# 2D

def fit_steady_2d(s: Samples, n_starts: int = 12, seed: int = 0):
    l = s.box
    f0 = np.mean(s.self_mu)
    a = l / (3.708 * np.exp(4.0 * np.pi * f0))
    x = s.r
    ft_d = -4.0 * np.pi * (s.mu_perp - f0)
    gt_d = 4.0 * np.pi * (s.mu_par - s.mu_perp)
    scale = 4.0 * np.pi * (np.abs(s.mu_perp) + np.abs(s.mu_par - s.mu_perp)) + 1e-6

    def resid(p):
        ft, gt = F.steady2d_tilde(x, p[:5], p[5:])
        return np.concatenate([(ft - ft_d) / scale, (gt - gt_d) / scale])

    lo = [-50.0, -50.0, 0.0, 0.0, 0.0, -50.0, 1e-6, 0.0, 0.0]
    hi = [50.0, 50.0, 50.0, 50.0, 50.0, 50.0, 50.0, 50.0, 50.0]
    p = _multistart(resid, lo, hi, n_starts, np.random.default_rng(seed))
    return a, p


def fit_phi0_2d(betas, phi0, z0, seed=0):
    betas, phi0 = np.asarray(betas, float), np.asarray(phi0, float)

    def resid(zz):
        z = np.array([z0, *zz])
        return (F.phi0_2d(betas, z) - phi0) / phi0

    zz = _multistart(resid, [0.0] * 4, [100.0] * 4, 12, np.random.default_rng(seed))
    return np.array([z0, *zz])


def fit_beta_2d(s: Samples, phi0: float, n_starts: int = 12, seed: int = 0, x0=None):
    x = s.r
    ft_d = -2.0 * np.pi * x ** 2 * s.mu_perp
    gt_d = np.pi * x ** 2 * (s.mu_par - s.mu_perp)
    scale = 0.5 * np.abs(ft_d) + np.abs(gt_d) + 1e-6
    beta = s.beta

    def resid(p):
        ft, gt = F.beta2d_tilde(x, beta, phi0, p[0:3], p[3:5], p[5:9], p[9:12])
        return np.concatenate([(ft - ft_d) / (2.0 * scale), (gt - gt_d) / scale])

    lo = [1e-3, -50.0, 0.0, 0.0, 0.0, 1e-3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
    hi = [100.0, 50.0, 50.0, 50.0, 50.0, 100.0, 100.0, 100.0, 100.0, 20.0, 20.0, 20.0]
    return _multistart(resid, lo, hi, n_starts, np.random.default_rng(seed), x0)


# ----------------------------------------------------------------------------

def fit_mobility_data(samples, form: str, **kw):
    """Dispatch to the fit routine of ``form`` ('steady3d', 'beta3d', 'steady2d', 'beta2d')."""
    table = {"steady3d": fit_steady_3d, "beta3d": fit_beta_3d, "steady2d": fit_steady_2d, "beta2d": fit_beta_2d}
    return table[form](samples, **kw)


def relative_residuals(fit: F.MobilityFit, s: Samples, rmin: float = 0.0, rmax: float = np.inf):
    """Relative errors of the fitted ``mu_par`` and ``mu_perp`` against samples
    (normalised like the samples)."""
    m = (s.r >= rmin) & (s.r <= rmax)
    x = s.r[m]
    if math.isinf(s.beta):
        f, g = fit.evaluate(x, math.inf, l=s.box)
    else:
        if s.beta == 0:
            raise ValueError("residuals need beta > 0 or steady samples")
        f, g = fit.evaluate(x, s.beta)
        f, g = f / s.beta, g / s.beta
    rp = np.abs(f + g - s.mu_par[m]) / np.abs(s.mu_par[m])
    rq = np.abs(f - s.mu_perp[m]) / np.abs(s.mu_perp[m])
    return np.concatenate([rp, rq])


@dataclass
class FitConfig:
    dim: int = 3
    kernel: str = "peskin4"
    n_steady: int = 128
    n_beta: int = 64
    n_markers: int = 60
    betas: tuple = field(default_factory=lambda: BETA_NODES_3D)
    n_starts: int = 12
    seed: int = 0


def build_fit(cfg: FitConfig, log=print, sample_sink=None) -> F.MobilityFit:
    """Generate samples and fit all forms for one kernel / dimension."""
    samples = [mobility_samples(cfg.dim, cfg.n_steady, cfg.kernel, math.inf, cfg.n_markers, cfg.seed)]
    samples += [mobility_samples(cfg.dim, cfg.n_beta, cfg.kernel, beta, cfg.n_markers, cfg.seed + 1)
                for beta in cfg.betas]
    if sample_sink:
        for smp in samples:
            sample_sink(smp)
    return fit_samples(samples, cfg, log)


def fit_samples(samples, cfg: FitConfig, log=print) -> F.MobilityFit:
    """Fit the steady forms to the steady samples and, when finite-``beta``
    samples are present, the self-mobility law and one row per ``beta`` node."""
    d = cfg.dim
    st = next(s for s in samples if math.isinf(s.beta))
    if d == 3:
        a, b = fit_steady_3d(st, cfg.n_starts, cfg.seed)
    else:
        a, b = fit_steady_2d(st, cfg.n_starts, cfg.seed)
    log(f"steady {d}D: a/h = {a:.4f}")
    fit = F.MobilityFit(d, KernelKind(cfg.kernel).value, float(a), 0.0, np.asarray(b),
                        meta={"n_steady": cfg.n_steady, "n_beta": cfg.n_beta, "n_markers": cfg.n_markers,
                              "seed": cfg.seed})
    finite = sorted((s for s in samples if not math.isinf(s.beta)), key=lambda s: s.beta)
    if not finite:
        return fit
    if finite[0].beta != 0:
        raise ValueError("finite-beta fits need inviscid (beta = 0) samples")
    betas = np.array([s.beta for s in finite])
    phi = np.array([np.mean(s.self_mu) for s in finite])
    # inviscid self mobility: phi0(0) = (d-1)/d * h^d / V_m
    fit.c_v = float(2.0 / (3.0 * phi[0])) if d == 3 else float(1.0 / (2.0 * phi[0]))
    if d == 3:
        fit.z = fit_phi0_3d(betas, phi, a, 1.0 / phi[0], cfg.seed)    # phi0(0) = 1 / z0
    else:
        fit.z = fit_phi0_2d(betas, phi, phi[0], cfg.seed)            # phi0(0) = z0
    log(f"c_V = {fit.c_v:.4f}, z = {np.round(fit.z, 5)}")
    rows, prev = [], None
    for s in finite:
        ph = float(fit.phi0(s.beta))
        if d == 3:
            row = fit_beta_3d(s, ph, cfg.n_starts, cfg.seed, prev)
        else:
            row = fit_beta_2d(s, ph, cfg.n_starts, cfg.seed, prev)
        rows.append(row)
        prev = row
        log(f"beta = {s.beta:g}: fitted")
    fit.nodes = betas
    fit.coef = np.array(rows)
    return fit


def read_samples_csv(path, dim: int, kernel: str, n_steady: int, n_beta: int) -> list:
    """Samples written by :meth:`Samples.write_csv`, one :class:`Samples` per ``beta``
    (rows with ``r = 0`` are self mobilities)."""
    with open(path, newline="") as fh:
        rows = np.array([[float(v) for v in r] for r in list(csv.reader(fh))[1:] if r])
    out = []
    for beta in dict.fromkeys(rows[:, 1]):
        blk = rows[rows[:, 1] == beta]
        self_rows, pair = blk[blk[:, 0] == 0], blk[blk[:, 0] > 0]
        out.append(Samples(dim, KernelKind(kernel).value, float(beta),
                           float(n_steady if math.isinf(beta) else n_beta),
                           pair[:, 0], pair[:, 2], pair[:, 3], self_rows[:, 2]))
    return out


def fit_quality(fit: F.MobilityFit, samples, rmin: float = 2.0, rmax: float = 20.0):
    """Rows ``(beta, median, 90th percentile)`` of the relative residuals."""
    rows = []
    for s in samples:
        if s.beta == 0:
            continue
        r = relative_residuals(fit, s, rmin, rmax)
        rows.append((s.beta, float(np.median(r)), float(np.percentile(r, 90))))
    return rows


def run_fit(cfg: FitConfig, out_dir, log=print, samples_csv=None):
    """Build a fit, write ``fit_<kernel>_<dim>d.txt`` and the sample CSV to
    ``out_dir`` and return ``(fit, fit_path, csv_path, quality rows)``.

    With ``samples_csv`` the samples are read from that file instead of being
    regenerated (only the least-squares fits are redone)."""
    from pathlib import Path
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if samples_csv is not None:
        samples = read_samples_csv(samples_csv, cfg.dim, cfg.kernel, cfg.n_steady, cfg.n_beta)
        fit = fit_samples(samples, cfg, log)
    else:
        samples = []
        fit = build_fit(cfg, log=log, sample_sink=samples.append)
    path = out / f"fit_{fit.kernel}_{cfg.dim}d.txt"
    fit.save(path)
    csv_path = out / f"samples_{fit.kernel}_{cfg.dim}d.csv"
    if samples_csv is None or Path(samples_csv).resolve() != csv_path.resolve():
        for i, s in enumerate(samples):
            s.write_csv(csv_path, "w" if i == 0 else "a")
    return fit, path, csv_path, fit_quality(fit, samples)
