import numpy as np
import pytest
from hypothesis import given, strategies as st

from rigidib.grid import CELL, GridSpec, Periodic, VelocityDirichlet, NormalStress
from rigidib.krylov import fgmres, gmres
from rigidib.multigrid import Hierarchy, prolong, restrict

WALL = VelocityDirichlet()


def _operator_with_eigenvalues(eigs, rng):
    n = 40
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.asarray(eigs)[rng.integers(0, len(eigs), n)]
    lam[: len(eigs)] = eigs
    A = q @ np.diag(lam) @ q.T
    return A


@given(st.lists(st.floats(0.5, 20.0), min_size=10, max_size=10, unique=True), st.integers(0, 2 ** 31))
def test_gmres_terminates_on_ten_eigenvalue_system(eigs, seed):
    rng = np.random.default_rng(seed)
    if min(np.diff(np.sort(eigs))) < 1e-2:
        eigs = list(np.linspace(0.5, 20, 10))
    A = _operator_with_eigenvalues(eigs, rng)
    b = rng.standard_normal(len(A))
    res = gmres(lambda x: A @ x, b, tol=1e-10, restart=50)
    assert res.converged and res.iterations <= 10
    assert np.linalg.norm(A @ res.x - b) <= 1e-8 * np.linalg.norm(b)


def test_fgmres_with_varying_preconditioner(rng):
    n = 60
    A = np.diag(np.linspace(1, 100, n)) + 0.1 * rng.standard_normal((n, n))
    b = rng.standard_normal(n)
    calls = []

    def prec(r):                                   # inexact, changes every call
        calls.append(1)
        return r / np.diag(A) * (1 + 0.05 * np.sin(len(calls)))

    res = fgmres(lambda x: A @ x, b, prec, tol=1e-10, restart=30)
    assert res.converged
    assert np.linalg.norm(A @ res.x - b) <= 1e-9 * np.linalg.norm(b)
    assert res.precond_applications == len(calls)


def test_gmres_restart_still_converges(rng):
    n = 50
    A = np.eye(n) * 3 + rng.standard_normal((n, n)) / np.sqrt(n)
    b = rng.standard_normal(n)
    res = gmres(lambda x: A @ x, b, tol=1e-10, restart=5, maxiter=500)
    assert res.converged and res.iterations > 5
    assert np.allclose(A @ res.x, b, atol=1e-8)


def test_zero_rhs_returns_zero():
    res = gmres(lambda x: 2 * x, np.zeros(5))
    assert res.converged and np.all(res.x == 0)


CASES = {
    "periodic_poisson": (GridSpec((32, 32), 1.0), CELL, 0.0),
    "wall_helmholtz_u": (GridSpec((32, 32), 0.5, ((WALL, WALL), (WALL, WALL))), 0, 0.4),
    "wall_poisson_u": (GridSpec((32, 32), 1.0, ((WALL, WALL), (WALL, WALL))), 1, 0.0),
    "stress_poisson_p": (GridSpec((32, 16), 1.0, ((NormalStress(1.0), NormalStress(0.0)), (WALL, WALL))),
                         CELL, 0.0),
    "periodic_3d": (GridSpec((16, 16, 16), 1.0), 2, 0.0),
}


@pytest.mark.parametrize("case", list(CASES))
def test_vcycle_contraction(case, rng):
    grid, kind, sigma = CASES[case]
    H = Hierarchy(grid, kind, sigma)
    b = rng.standard_normal(grid.shape(kind))
    _, hist = H.solve(b, tol=1e-9, maxcycles=30)
    rates = np.array(hist[1:]) / np.array(hist[:-1])
    assert hist[-1] < 1e-9
    assert np.median(rates) < 0.3          # V(2,2): ~0.1 in 2D, ~0.2 in 3D


def test_restriction_is_scaled_prolongation_transpose(rng):
    fine = GridSpec((16, 16), 0.5, ((WALL, WALL), (Periodic(), Periodic())))
    coarse = fine.coarsen()
    for kind in (CELL, 0, 1):
        ec = rng.standard_normal(coarse.shape(kind))
        rf = rng.standard_normal(fine.shape(kind))
        lhs = np.vdot(prolong(ec, coarse, kind), rf)
        rhs = 2 ** fine.dim * np.vdot(ec, restrict(rf, coarse, kind))
        assert np.isclose(lhs, rhs, rtol=1e-11)
