import numpy as np
import pytest
from hypothesis import given, strategies as st

from rigidib.geometry import (circle_shell, filled_sphere, icosphere, icosphere_shell, marker_areas, min_spacing,
                              nearest_neighbour_spacing, polar_disk, radius_of_gyration)


@pytest.mark.parametrize("level,count", [(1, 12), (2, 42), (3, 162), (4, 642), (5, 2562)])
def test_icosphere_counts(level, count):
    v, f = icosphere(level)
    assert len(v) == count
    assert len(v) - 3 * len(f) // 2 + len(f) == 2          # Euler characteristic of a sphere
    assert np.allclose(np.linalg.norm(v, axis=1), 1.0)


@pytest.mark.parametrize("level", [2, 3, 4])
def test_icosphere_is_quasi_uniform(level):
    v, f = icosphere(level)
    e = np.concatenate([np.linalg.norm(v[f[:, i]] - v[f[:, (i + 1) % 3]], axis=1) for i in range(3)])
    assert e.max() / e.min() < 1.3


def test_vertex_areas_sum_to_polyhedron_area():
    v, f = icosphere(4)
    a = marker_areas(v, f)
    assert a.min() > 0
    assert np.isclose(a.sum(), 4 * np.pi, rtol=0.01)       # flat facets slightly undershoot the sphere


@given(st.floats(1.0, 20.0), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_shell_radius_and_center(R, cx, cy, cz):
    pos = icosphere_shell(3, R, (cx, cy, cz))
    assert np.allclose(pos.mean(axis=0), (cx, cy, cz), atol=1e-9 * R)
    assert np.isclose(radius_of_gyration(pos), R)


def test_filled_sphere_keeps_spacing():
    R, s = 4.0, 1.0
    pos = filled_sphere(3, R, s)
    assert np.linalg.norm(pos, axis=1).max() <= R * (1 + 1e-12)
    assert min_spacing(pos) >= 0.75 * s
    assert len(pos) > 162


@given(st.integers(6, 200), st.floats(0.5, 50.0))
def test_circle_shell_spacing(n, R):
    pos = circle_shell(n, R)
    assert np.isclose(min_spacing(pos), 2 * R * np.sin(np.pi / n))


def test_polar_disk_rings():
    s = 2.0
    pos = polar_disk(4 * s, s)
    r = np.linalg.norm(pos, axis=1)
    assert np.isclose(r.max(), 4 * s)
    assert np.sum(r < 1e-12) == 1
    assert min_spacing(pos) > 0.7 * s


def test_nearest_neighbour_spacing_scales_like_level():
    s = [nearest_neighbour_spacing(k) for k in (2, 3, 4)]
    assert 1.8 < s[0] / s[1] < 2.2 and 1.8 < s[1] / s[2] < 2.2
