import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from rigidib.grid import GridSpec
from rigidib.kernels import IBOperator
from rigidib.mobility import (MobilityFit, assemble_mobility, brinkmanlet_pair, drag_periodic_2d,
                              drag_periodic_3d, exact_mobility, factorize, hydrodynamic_radius,
                              load_default_fit, oseen_pair, rpy_pair)
from rigidib.mobility.fitting import mobility_samples, relative_residuals
from rigidib.stokes import StokesParams, StokesSolver

positions = arrays(np.float64, (8, 3), elements=st.floats(0.0, 4.0, allow_nan=False))


@given(positions)
def test_rpy_is_positive_definite(pos):
    M = assemble_mobility(pos, lambda r: rpy_pair(r, a=1.0))
    assert np.allclose(M, M.T)
    assert np.linalg.eigvalsh(M).min() > -1e-12


def test_rpy_continuous_at_contact():
    eps = 1e-9
    f0, g0 = rpy_pair(2.0 - eps, 1.0)
    f1, g1 = rpy_pair(2.0 + eps, 1.0)
    assert np.isclose(f0, f1, atol=1e-8) and np.isclose(g0, g1, atol=1e-8)
    assert np.isclose(rpy_pair(0.0, 1.0)[0], 1 / (6 * np.pi))


def test_brinkmanlet_reduces_to_oseen_for_large_beta():
    r = np.array([1.0, 3.0, 10.0])
    f, g = brinkmanlet_pair(r, beta=1e12)
    fo, go = oseen_pair(r)
    assert np.allclose(f, fo, rtol=1e-4) and np.allclose(g, go, rtol=1e-4)


def test_brinkmanlet_series_branch_matches_closed_form():
    beta = 1.0
    r_lo, r_hi = 0.999e-3, 1.001e-3
    for a, b in zip(brinkmanlet_pair(r_lo, beta), brinkmanlet_pair(r_hi, beta)):
        assert np.isclose(a * r_lo, b * r_hi, rtol=1e-4)


def test_exact_mobility_symmetric_and_positive(rng):
    grid = GridSpec((16, 16, 16), 1.0)
    solver = StokesSolver(grid, StokesParams(rho=0.0, eta=1.0))
    ib = IBOperator(grid, 4 + 8 * rng.random((6, 3)))
    zero_p = np.zeros(grid.n)
    M = exact_mobility(ib, lambda f: solver.unpack(solver.solve_fft(solver.pack(f, zero_p)))[0],
                       symmetrize=False)
    assert np.allclose(M, M.T, atol=1e-12 * np.abs(M).max())
    assert np.linalg.eigvalsh(M).min() > 0


@pytest.mark.parametrize("method", ["cholesky", "svd", "auto"])
def test_dense_solve(method, rng):
    A = rng.standard_normal((12, 12))
    M = A @ A.T + np.eye(12)
    b = rng.standard_normal(12)
    assert np.allclose(M @ factorize(M, method).solve(b), b)


def test_svd_filter_discards_null_mode(rng):
    v = rng.standard_normal(6)
    M = np.eye(6) - np.outer(v, v) / (v @ v)
    f = factorize(M, "svd")
    assert f.discarded == 1
    assert np.allclose(M @ f.solve(M @ v + 1.0), M @ (np.ones(6)), atol=1e-10)


@given(st.floats(0.2, 3.0), st.floats(12.0, 60.0))          # R/l <= 0.25
def test_drag_law_inversion_roundtrip_3d(R, l):
    assert np.isclose(hydrodynamic_radius(drag_periodic_3d(R, l), l, 3), R, rtol=1e-10)


@given(st.floats(0.5, 4.0), st.floats(20.0, 60.0))
def test_drag_law_inversion_roundtrip_2d(R, l):
    assert np.isclose(hydrodynamic_radius(drag_periodic_2d(R, l), l, 2), R, rtol=1e-10)


def test_dilute_drag_tends_to_stokes():
    assert np.isclose(drag_periodic_3d(1.0, 1e6), 6 * np.pi, rtol=1e-5)


def test_fit_text_roundtrip():
    fit = load_default_fit(3)
    back = MobilityFit.from_text(fit.to_text())
    r = np.linspace(0.5, 20, 30)
    for beta in (math.inf, 0.3, 20.0):
        assert np.allclose(back.evaluate(r, beta), fit.evaluate(r, beta))


def test_shipped_3d_fit_matches_fresh_samples():
    fit = load_default_fit(3)
    s = mobility_samples(3, 32, "peskin4", math.inf, n_markers=20, seed=7, subbox=0.25)
    r = relative_residuals(fit, s, 2.0, 6.0)
    assert np.median(r) < 0.05          # small box: the periodic correction is crude beyond r ~ l/5
    assert 1.15 <= fit.a_over_h <= 1.35


def test_fit_self_mobility_matches_stokes_radius():
    fit = load_default_fit(3)
    f, g = fit.evaluate(np.array([0.0]))
    assert np.isclose(f[0], 1 / (6 * np.pi * fit.a_over_h))


@given(st.floats(0.5, 40.0))
def test_fit_finite_beta_pair_is_bounded_by_self(r):
    fit = load_default_fit(3)
    for beta in (0.1, 1.0, 100.0):
        f0, _ = fit.evaluate(np.array([0.0]), beta)
        f, g = fit.evaluate(np.array([r]), beta)
        assert abs(f[0]) <= f0[0] * 1.01 and abs(f[0] + g[0]) <= f0[0] * 1.01


def test_self_mobility_law_limits():
    fit = load_default_fit(3)
    # inviscid limit: phi0(0) = 2 h^3 / (3 V_m) with V_m = c_V h^3
    assert np.isclose(fit.phi0(0.0), 2.0 / (3.0 * fit.c_v), rtol=1e-12)
    # Stokes limit: phi0 -> 1 / (6 pi (a/h) beta)
    beta = 1e8
    assert np.isclose(fit.phi0(beta) * beta, 1.0 / (6 * np.pi * fit.a_over_h), rtol=1e-3)


def test_self_mobility_law_tracks_fresh_samples():
    fit = load_default_fit(3)
    for beta in (0.3, 3.0):
        s = mobility_samples(3, 16, "peskin4", beta, n_markers=4, seed=5, subbox=0.5)
        assert np.isclose(np.mean(s.self_mu), fit.phi0(beta), rtol=0.1)
