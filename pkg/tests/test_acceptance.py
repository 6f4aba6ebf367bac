"""Acceptance gate: one test and one printed PASS/FAIL line per criterion.

Tolerances are pinned here and never adjusted to make a run pass.  Criteria 7,
8, 10 and 11 (and the finite-Re study) take minutes to tens of minutes on a
single core; they are marked ``slow`` but run by default.
"""
import math

import numpy as np
import pytest

from rigidib.bench.common import rate
from rigidib.bench.concentric import ConcentricAnalytic, bench_concentric
from rigidib.bench.drag import (BodyModel, bench_drag2d, bench_finite_re_2d, bench_spectrum, periodic_system,
                                radius_table_3d)
from rigidib.bench.flows import bench_nozzle, bench_wake
from rigidib.grid import CELL, GridSpec, divergence, gradient
from rigidib.kernels import IBOperator, KernelKind, kernel_phi
from rigidib.krylov import gmres
from rigidib.mobility import assemble_mobility, rpy_pair
from rigidib.mobility.fitting import FitConfig, run_fit
from rigidib.multigrid import Hierarchy
from rigidib.rigid import SchurPrecondConfig
from rigidib.stokes import StokesParams


@pytest.fixture
def gate(capsys):
    """``gate(number, title, checks)`` prints one line and asserts every check.

    ``checks`` is a list of ``(description, passed)`` pairs."""
    def report(number, title, checks):
        ok = all(bool(p) for _, p in checks)
        detail = "; ".join(f"{d}{'' if p else ' [FAIL]'}" for d, p in checks)
        with capsys.disabled():
            print(f"\nCRITERION {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}", flush=True)
        assert ok, f"criterion {number} failed: {detail}"
    return report


def _shell162_system(config):
    body = BodyModel("shell", level=3, spacing=2.0)
    return periodic_system(body.positions(), 32, 1.0, StokesParams(rho=0.0, eta=1.0), config)


# ----------------------------------------------------------------------------

def test_criterion_01_adjointness(gate):
    rng = np.random.default_rng(1)
    grid = GridSpec((16, 16, 16), 0.7)
    worst = 0.0
    for kind in KernelKind:
        for _ in range(100):
            n = int(rng.integers(1, 20))
            ib = IBOperator(grid, rng.random((n, 3)) * grid.lengths, kind)
            v = [rng.standard_normal(grid.shape(k)) for k in range(3)]
            lam = rng.standard_normal((n, 3))
            lhs = np.vdot(lam, ib.interpolate(v))
            rhs = grid.h ** 3 * sum(np.vdot(a, b) for a, b in zip(v, ib.spread(lam)))
            vn = math.sqrt(sum(float(np.vdot(a, a)) for a in v))
            worst = max(worst, abs(lhs - rhs) / (vn * np.linalg.norm(lam)))
    gate(1, "adjointness of J and S", [(f"max |L.(Jv) - h^3 v.(SL)| / (|v||L|) = {worst:.2e} <= 1e-12",
                                       worst <= 1e-12)])


def test_criterion_02_no_slip_exactness(gate):
    sys = _shell162_system(SchurPrecondConfig(outer_tol=1e-9))
    res = sys.solve()
    slip = float(np.abs(sys.slip(res.state)).max())          # |V| = 1
    div = sys.divergence_norm(res.state)
    gate(2, "no-slip exactness (162-marker shell, 32^3, tol 1e-9)",
         [(f"converged in {res.iterations} iterations", res.converged),
          (f"|Jv - V|_inf / |V| = {slip:.2e} <= 1e-8", slip <= 1e-8),
          (f"|Dv|_inf = {div:.2e} <= 1e-8", div <= 1e-8)])


def test_criterion_03_preconditioner_efficiency(gate):
    sys = _shell162_system(SchurPrecondConfig(precond_variant="lower_triangular", ns_inner=2,
                                              mobility_source="fit", outer_tol=1e-9))
    res = sys.solve()
    exact = _shell162_system(SchurPrecondConfig(mobility_source="exact", inner="fft", outer_tol=1e-9))
    res_x = exact.solve()
    gate(3, "preconditioner efficiency",
         [(f"fit mobility, N_s = 2: residual {res.residuals[-1]:.1e} <= 1e-9",
           res.converged and res.residuals[-1] <= 1e-9),
          (f"{res.ps_total} Stokes-preconditioner applications <= 200", res.ps_total <= 200),
          (f"exact mobility, exact inner solves: {res_x.iterations} outer iterations <= 2",
           res_x.converged and res_x.iterations <= 2)])


def test_criterion_04_hydrodynamic_radius_3d(gate):
    rows = radius_table_3d(levels=(2, 3, 4), log=lambda *_: None)
    ratios = [r[4] for r in rows]
    ref = (1.22, 1.09, 1.04)
    checks = [(f"k={k}: R_h/R_g = {q:.4f} (ref {r:.2f} +- 0.15)", abs(q - r) <= 0.15)
              for k, q, r in zip((2, 3, 4), ratios, ref)]
    checks.append(("monotone decrease toward 1", all(a > b for a, b in zip(ratios, ratios[1:]))
                   and ratios[-1] > 1.0))
    gate(4, "hydrodynamic radius of icosphere shells", checks)


def test_criterion_05_drag_curve_2d(gate):
    rep = bench_drag2d(log=lambda *_: None)
    rows = rep.data["rows"]
    dil = max(abs(r[5] - 1) for r in rows if r[1] <= 0.1 + 1e-12)
    lub = min(rows, key=lambda r: abs(r[2] - 0.05))
    gate(5, "2D drag curve",
         [(f"max dilute-law error for phi <= 0.1: {100 * dil:.2f}% <= 3%", dil <= 0.03),
          (f"drag / lubrication asymptote at eps = {lub[2]:.3f}: {lub[7]:.3f} within a factor 1.5",
           1 / 1.5 <= lub[7] <= 1.5)])


@pytest.mark.slow
def test_criterion_06_finite_re_2d(gate):
    rep = bench_finite_re_2d(log=lambda *_: None)
    k0, k2 = rep.data["k0"], rep.data["k2"]
    phi = rep.data["phi"]
    gate(6, f"finite-Re square array (phi = {phi:.3f}, 64^2)",
         [(f"k0 = {k0:.2f} in 49 +- 4", abs(k0 - 49) <= 4), (f"k2 = {k2:.3f} in 0.24 +- 0.07", abs(k2 - 0.24) <= 0.07)])


@pytest.mark.slow
def test_criterion_07_wake(gate):
    rep = bench_wake(res=(10.0,), log=lambda *_: None)
    Re, k, Lw = rep.data["rows"][0][:3]
    gate(7, "wake behind a column of cylinders at Re = 10",
         [(f"k = {k:.3f} in [2.8, 3.2]", 2.8 <= k <= 3.2),
          (f"wake length / R_h = {Lw:.3f} in [2.3, 2.9]", 2.3 <= Lw <= 2.9)])


@pytest.mark.slow
def test_criterion_08_concentric_shells(gate):
    rep = bench_concentric(levels=2, log=lambda *_: None)
    r0, r1 = rep.data["results"]
    v1, v2 = rate(r0["ev"][0], r1["ev"][0]), rate(r0["ev"][1], r1["ev"][1])
    pinf = rate(r0["ep"][2], r1["ep"][2])
    gate(8, "concentric shells, 30^3 -> 60^3",
         [(f"velocity L1 rate {v1:.2f} >= 0.9", v1 >= 0.9), (f"velocity L2 rate {v2:.2f} >= 0.9", v2 >= 0.9),
          (f"pressure Linf rate {pinf:.2f} <= 0.4", pinf <= 0.4)])


@pytest.mark.filterwarnings("ignore::rigidib.rigid.SpacingWarning")  # s/h = 1 is the point of the study
def test_criterion_09_conditioning(gate):
    rep = bench_spectrum(level=3, ratios=(1.0, 2.0), log=lambda *_: None)
    by = {r[0]: r for r in rep.data["rows"]}
    ratio = by[1.0][6] / by[2.0][6]
    gate(9, "mobility conditioning of the 162-marker shell",
         [(f"cond(s/h=1) / cond(s/h=2) = {ratio:.0f} >= 10", ratio >= 10),
          (f"near-null modes at s/h = 2: {by[2.0][7]} (radial overlap {by[2.0][8]:.3f}) == 1", by[2.0][7] == 1)])


@pytest.mark.slow
def test_criterion_10_splitting_contrast(gate):
    rep = bench_nozzle(res=(19.0,), log=lambda *_: None)
    mono = next(r for r in rep.data["rows"] if r[1] == "monolithic")
    split = next(r for r in rep.data["rows"] if r[1] == "splitting")
    gate(10, f"nozzle at Re ~ 19 (monolithic Re {mono[2]:.1f})",
         [(f"monolithic flux ratio {mono[5]:.4f} > 0.99", mono[5] > 0.99),
          (f"splitting flux ratio {split[5]:.4f} <= 0.97 (dt {mono[4] / split[4]:.1f}x smaller)", split[5] <= 0.97)])


@pytest.mark.slow
def test_criterion_11_fit_quality(gate, tmp_path):
    cfg = FitConfig(dim=3, kernel="peskin4", n_steady=128, n_markers=60, betas=())
    fit, *_, quality = run_fit(cfg, tmp_path, log=lambda *_: None)
    med = quality[0][1]
    gate(11, "regenerated 3D steady fit (128^3)",
         [(f"median relative residual on 2 <= r/h <= 20: {100 * med:.2f}% < 5%", med < 0.05),
          (f"a/h = {fit.a_over_h:.4f} in [1.15, 1.35]", 1.15 <= fit.a_over_h <= 1.35)])


def test_criterion_12_property_suite(gate):
    rng = np.random.default_rng(12)
    checks = []
    # partition of unity
    s = rng.random(50)
    j = np.arange(-4, 5)
    pu = max(abs(kernel_phi(x - j, k).sum() - 1) for k in KernelKind for x in s)
    checks.append((f"partition of unity {pu:.0e}", pu < 1e-13))
    # gradient / divergence adjointness
    g = GridSpec((12, 10, 8), 0.5)
    p = rng.standard_normal(g.n)
    v = [rng.standard_normal(g.shape(k)) for k in range(3)]
    adj = abs(sum(np.vdot(a, b) for a, b in zip(gradient(p, g), v)) + np.vdot(p, divergence(v, g)))
    checks.append((f"G = -D^T {adj:.0e}", adj < 1e-10))
    # multigrid contraction
    _, hist = Hierarchy(GridSpec((32, 32), 1.0), CELL).solve(rng.standard_normal((32, 32)), maxcycles=8)
    mg = float(np.median(np.array(hist[1:]) / np.array(hist[:-1])))
    checks.append((f"V-cycle contraction {mg:.2f}", mg < 0.3))
    # GMRES on a 10-eigenvalue system
    q, _ = np.linalg.qr(rng.standard_normal((50, 50)))
    lam = np.repeat(np.arange(1.0, 11.0), 5)
    A = q @ np.diag(lam) @ q.T
    res = gmres(lambda x: A @ x, rng.standard_normal(50), tol=1e-10)
    checks.append((f"GMRES iterations {res.iterations}", res.converged and res.iterations <= 10))
    # mobility symmetry and RPY positive definiteness
    sys = periodic_system(BodyModel("shell", level=2).positions(), 16, 1.0, StokesParams(rho=0.0),
                          SchurPrecondConfig(inner="fft", mobility_source="exact"))
    M = sys.exact_mobility()
    asym = float(np.abs(M - M.T).max() / np.abs(M).max())
    checks.append((f"exact mobility asymmetry {asym:.0e}", asym < 1e-10))
    mins = min(np.linalg.eigvalsh(assemble_mobility(rng.random((20, 3)) * 5, lambda r: rpy_pair(r, 1.0))).min()
               for _ in range(20))
    checks.append((f"RPY min eigenvalue {mins:.1e}", mins > 0))
    # closed-form concentric solution: small-ratio limit and no-slip on the inner sphere
    c = ConcentricAnalytic(1.0, 1e5)
    th = np.linspace(0, math.pi, 7)
    vr, vt, _ = ConcentricAnalytic(1.0, 3.0).eval(np.ones_like(th), th)
    checks.append((f"K(lambda->0) = {c.K:.6f}", abs(c.K - 1) < 1e-4))
    checks.append(("no-slip at r = a", np.abs(vr).max() < 1e-12 and np.abs(vt).max() < 1e-12))
    gate(12, "property suite", checks)
