import numpy as np
import pytest

from rigidib.grid import GridSpec, NormalStress, Periodic, VelocityDirichlet, divergence
from rigidib.stokes import StokesConfig, StokesParams, StokesSolver

WALL = VelocityDirichlet()


def _rhs(solver, grid, rng):
    v = [rng.standard_normal(grid.shape(k)) for k in range(grid.dim)]
    return solver.pack(v, np.zeros(grid.n))


@pytest.mark.parametrize("params", [StokesParams(rho=0.0, eta=1.0), StokesParams(rho=1.0, eta=0.5, dt=0.2)],
                         ids=["steady", "unsteady"])
def test_fft_direct_and_iterative_solves_agree(params, rng):
    grid = GridSpec((16, 16), 0.5)
    b = _rhs(StokesSolver(grid, params), grid, rng)
    b_v, _ = StokesSolver(grid, params).unpack(b)
    b = StokesSolver(grid, params).pack([x - x.mean() for x in b_v], np.zeros(grid.n))
    xs = [StokesSolver(grid, params, StokesConfig(inner=inner, stokes_tol=1e-12)).solve(b).x
          for inner in ("fft", "direct", "gmres")]
    S = StokesSolver(grid, params)
    for x in xs:
        assert np.linalg.norm(S.apply(x) - b) <= 1e-9 * np.linalg.norm(b)
    v0 = S.unpack(xs[0])[0]
    for x in xs[1:]:
        for a, c in zip(v0, S.unpack(x)[0]):
            assert np.allclose(a, c, atol=1e-8)


def test_channel_with_walls_gives_poiseuille():
    n, h, dp = 32, 1.0 / 32, 8.0
    grid = GridSpec((8, n), h, ((NormalStress(dp), NormalStress(0.0)), (WALL, WALL)))
    S = StokesSolver(grid, StokesParams(rho=0.0, eta=1.0), StokesConfig(inner="direct"))
    x = S.solve(S.boundary_rhs()).x
    v, p = S.unpack(x)
    L = grid.lengths[0]
    y = grid.coords(0, 1)
    G = dp / L
    u = v[0][grid.n[0] // 2]
    # plane Poiseuille (eta = 1, width 1); the linear ghost-cell wall shifts the
    # discrete parabola by the constant G h^2 / 8
    assert np.allclose(u, G / 2 * y * (1 - y) + G * h ** 2 / 8, rtol=1e-10, atol=1e-10)
    assert np.abs(divergence(v, grid, inhom=True)).max() < 1e-9


@pytest.mark.parametrize("inner", ["gmres", "fft"])
def test_projection_preconditioner_converges_in_few_iterations(inner, rng):
    grid = GridSpec((32, 32), 1.0)
    params = StokesParams(rho=1.0, eta=1.0, dt=1.0)
    S = StokesSolver(grid, params, StokesConfig(stokes_tol=1e-10, inner=inner))
    b = _rhs(S, grid, rng)
    x = S.solve(b).x
    assert np.linalg.norm(S.apply(x) - b) <= 1e-9 * np.linalg.norm(b)


def test_params_beta_roundtrip():
    p = StokesParams.from_beta(0.25, h=0.5, eta=2.0, rho=3.0)
    assert np.isclose(p.beta(0.5), 0.25)
    assert StokesParams(rho=0.0, eta=1.0).steady
    assert np.isinf(StokesParams(rho=0.0, eta=1.0).beta(1.0))
