import numpy as np
import pytest
from hypothesis import given, strategies as st

from rigidib.grid import GridSpec, Periodic, VelocityDirichlet, NormalStress
from rigidib.kernels import IBOperator, KernelKind, MarkerSet, concat_markers, kernel_phi

KINDS = list(KernelKind)
shift = st.floats(0.0, 1.0, allow_nan=False)


@pytest.mark.parametrize("kind", KINDS)
@given(s=shift)
def test_partition_of_unity_and_first_moment(kind, s):
    j = np.arange(-4, 5)
    w = kernel_phi(s - j, kind)
    assert np.isclose(w.sum(), 1.0, atol=1e-13)
    assert np.isclose(((s - j) * w).sum(), 0.0, atol=1e-13)


@pytest.mark.parametrize("kind", ["peskin4", "six"])
@given(s=shift)
def test_even_odd_split(kind, s):
    j = np.arange(-4, 5)
    w = kernel_phi(s - j, kind)
    assert np.isclose(w[j % 2 == 0].sum(), 0.5, atol=1e-13)


@pytest.mark.parametrize("kind", ["peskin3", "peskin4", "six"])
@given(s=shift)
def test_sum_of_squares_is_constant(kind, s):
    j = np.arange(-4, 5)
    w = kernel_phi(s - j, kind)
    ref = kernel_phi(0.0 - j, kind)
    assert np.isclose((w ** 2).sum(), (ref ** 2).sum(), atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_support_and_symmetry(kind):
    r = np.linspace(-5, 5, 1001)
    phi = kernel_phi(r, kind)
    assert np.all(phi[np.abs(r) >= KernelKind(kind).width / 2] == 0.0)
    assert np.allclose(phi, phi[::-1])


def _boundaries():
    per = (Periodic(), Periodic())
    wall = VelocityDirichlet()
    return {
        "periodic": (per, per),
        "walls": ((wall, wall), (wall, wall)),
        "stress": ((NormalStress(2.0), NormalStress(0.0)), (wall, wall)),
    }


@pytest.mark.parametrize("bc", list(_boundaries()))
@pytest.mark.parametrize("kind", KINDS)
def test_spread_is_scaled_adjoint_of_interpolation(bc, kind, rng):
    grid = GridSpec((12, 10), 0.5, _boundaries()[bc])
    pos = rng.random((7, 2)) * grid.lengths
    ib = IBOperator(grid, pos, kind)
    for _ in range(5):
        v = [rng.standard_normal(grid.shape(k)) for k in range(2)]
        lam = rng.standard_normal((7, 2))
        lhs = np.vdot(lam, ib.interpolate(v))
        rhs = grid.h ** 2 * sum(np.vdot(a, b) for a, b in zip(v, ib.spread(lam)))
        assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(lam) * sum(np.linalg.norm(x) for x in v)


def test_interpolation_reproduces_linear_fields_in_periodic_interior(rng):
    grid = GridSpec((16, 16, 16), 1.0)
    pos = 4 + 8 * rng.random((5, 3))
    ib = IBOperator(grid, pos, "peskin4")
    v = [grid.mesh(k)[1] * 0.3 + 1.0 for k in range(3)]      # v_k = 1 + 0.3 y
    u = ib.interpolate(v)
    assert np.allclose(u, (1 + 0.3 * pos[:, 1])[:, None], atol=1e-12)


def test_spread_conserves_total_force(rng):
    grid = GridSpec((16, 16), 0.5)
    F = rng.standard_normal((9, 2))
    ib = IBOperator(grid, rng.random((9, 2)) * grid.lengths, "six")
    f = ib.spread(F)
    assert np.allclose([fk.sum() * grid.h ** 2 for fk in f], F.sum(axis=0))


def test_marker_csv_roundtrip(tmp_path, rng):
    ms = concat_markers([MarkerSet(rng.random((3, 3)), rng.random((3, 3))), MarkerSet(rng.random((2, 3)))])
    ms.write_csv(tmp_path / "m.csv")
    back = MarkerSet.read_csv(tmp_path / "m.csv")
    assert np.array_equal(back.pos, ms.pos) and np.array_equal(back.body, [0, 0, 0, 1, 1])
