import numpy as np
import pytest
from hypothesis import given, strategies as st

from rigidib.grid import (CELL, GridSpec, NormalStress, Periodic, VelocityDirichlet, assemble, divergence,
                          extend, fold, gradient, laplacian, zero_inactive)

WALL = VelocityDirichlet()


def grids():
    per = (Periodic(), Periodic())
    yield GridSpec((8, 8), 0.5)
    yield GridSpec((8, 6), 1.0, (per, (WALL, WALL)))
    yield GridSpec((8, 8), 1.0, ((NormalStress(1.0), NormalStress(0.0)), (WALL, WALL)))
    yield GridSpec((4, 4, 4), 1.0, (per, per, (WALL, WALL)))


def _random_faces(grid, rng):
    return [rng.standard_normal(grid.shape(k)) for k in range(grid.dim)]


def _face_weights(grid, k):
    """Control-volume weights: faces on a stress boundary own half a cell."""
    w = np.ones(grid.shape(k))
    for side, idx in ((0, 0), (1, -1)):
        if isinstance(grid.bc[k][side], NormalStress):
            w[(slice(None),) * k + (idx,)] = 0.5
    return w


@pytest.mark.parametrize("grid", list(grids()), ids=lambda g: "x".join(map(str, g.n)))
def test_gradient_is_minus_divergence_adjoint(grid, rng):
    for _ in range(5):
        p = rng.standard_normal(grid.n)
        v = _random_faces(grid, rng)
        v = [zero_inactive(vk, grid, k) for k, vk in enumerate(v)]   # wall faces carry no unknowns
        g = gradient(p, grid)
        lhs = sum(np.vdot(gk * _face_weights(grid, k), vk) for k, (gk, vk) in enumerate(zip(g, v)))
        rhs = -np.vdot(p, divergence(v, grid))
        assert abs(lhs - rhs) <= 1e-10 * (np.linalg.norm(p) * sum(np.linalg.norm(x) for x in v))


def test_extend_fold_adjoint(rng):
    for grid in grids():
        for k in grid.kinds():
            u = rng.standard_normal(grid.shape(k))
            e = extend(u, grid, k)
            w = rng.standard_normal(e.shape)
            assert np.isclose(np.vdot(e, w), np.vdot(u, fold(w, grid, k)), rtol=1e-11, atol=1e-11)


@given(st.integers(0, 3), st.integers(0, 3))
def test_periodic_laplacian_of_plane_wave(kx, ky):
    n, h = 16, 0.25
    grid = GridSpec((n, n), h)
    x, y = grid.mesh(CELL)
    u = np.cos(2 * np.pi * (kx * x + ky * y) / (n * h))
    sym = sum(-4 * np.sin(np.pi * k / n) ** 2 for k in (kx, ky))
    assert np.allclose(laplacian(u, grid, CELL), sym * u, atol=1e-11)


def test_periodic_laplacian_symmetric():
    grid = GridSpec((6, 6), 1.0)
    A = assemble(lambda f: [laplacian(f[0], grid, CELL)], grid, [CELL]).toarray()
    assert np.allclose(A, A.T)
    assert np.allclose(A.sum(axis=1), 0.0)


def test_coarsen_halves_cells():
    g = GridSpec((16, 8), 0.5)
    c = g.coarsen()
    assert c.n == (8, 4) and c.h == 1.0
    assert np.allclose(c.lengths, g.lengths)
