"""Closed-form flow between concentric spheres: limits, boundary conditions and
consistency with the Stokes equations (checked by finite differences)."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import trapezoid

from rigidib.bench.concentric import (ConcentricAnalytic, concentric_drag, concentric_eval, concentric_traction,
                                      inner_radius_from_drag)

lams = st.floats(0.05, 0.8)


def test_small_lambda_recovers_isolated_stokes_drag():
    c = ConcentricAnalytic(1.0, 1e4, V=1.0)
    assert np.isclose(c.K, 1.0, rtol=1e-3)
    assert np.isclose(concentric_drag(c), -6 * math.pi, rtol=1e-3)


def test_quarter_ratio_value():
    c = ConcentricAnalytic(1.0, 4.0)
    K = (1 - 4.0 ** -5) / (1 - 9 / 16 + 5 / 128 - 9 / 4096 + 1 / 4096)
    assert np.isclose(c.K, K, rtol=1e-14)
    assert np.isclose(K, 2.104938, atol=1e-6)


@given(lams, st.floats(0.0, math.pi))
def test_no_slip_on_inner_sphere(lam, theta):
    c = ConcentricAnalytic(1.0, 1.0 / lam, V=0.7)
    vr, vt, _ = concentric_eval(1.0, theta, c)
    assert abs(vr) < 1e-12 and abs(vt) < 1e-12


@given(lams, st.floats(0.0, math.pi))
def test_outer_sphere_moves_rigidly(lam, theta):
    c = ConcentricAnalytic(1.0, 1.0 / lam, V=0.7)
    vr, vt, _ = concentric_eval(1.0 / lam, theta, c)
    # rigid translation with velocity -V along the axis
    assert np.isclose(vr, -0.7 * math.cos(theta), atol=1e-12)
    assert np.isclose(vt, 0.7 * math.sin(theta), atol=1e-12)


def _stokes_residual(c, x, eps=1e-4):
    """``eta Lap v - grad p`` and ``div v`` at a Cartesian point (axis = x)."""
    def v(p):
        return c.fields(p[None], axis=0)[0][0]

    def pr(p):
        return c.fields(p[None], axis=0)[1][0]

    lap = np.zeros(3)
    grad = np.zeros(3)
    div = 0.0
    for k in range(3):
        e = np.zeros(3)
        e[k] = eps
        lap += (v(x + e) - 2 * v(x) + v(x - e)) / eps ** 2
        grad[k] = (pr(x + e) - pr(x - e)) / (2 * eps)
        div += (v(x + e)[k] - v(x - e)[k]) / (2 * eps)
    return c.eta * lap - grad, div


@pytest.mark.parametrize("lam", [0.25, 0.5])
def test_fields_satisfy_stokes_equations(lam, rng):
    c = ConcentricAnalytic(1.0, 1.0 / lam, V=-1.0, eta=1.3)
    for _ in range(5):
        d = rng.standard_normal(3)
        x = d / np.linalg.norm(d) * (1.0 + (1.0 / lam - 1.0) * rng.uniform(0.2, 0.8))
        mom, div = _stokes_residual(c, x)
        assert np.abs(mom).max() < 1e-4 and abs(div) < 1e-6          # O(eps^2) truncation


def test_traction_integrates_to_drag():
    c = ConcentricAnalytic(0.8, 3.0, V=1.3, eta=0.7)
    th = np.linspace(0, math.pi, 4001)
    sn, stt = concentric_traction(th, c)
    # axial component of sigma.n: sigma_n cos(theta) - sigma_theta sin(theta)
    fz = (sn * np.cos(th) - stt * np.sin(th)) * 2 * math.pi * c.a ** 2 * np.sin(th)
    assert np.isclose(trapezoid(fz, th), c.drag(), rtol=1e-6)


@given(st.floats(0.1, 0.7))
def test_radius_inversion_roundtrip(lam):
    c = ConcentricAnalytic(1.0, 1.0 / lam, V=-1.0)
    assert np.isclose(inner_radius_from_drag(c.drag(), 1.0), 1.0 / lam, rtol=1e-9)


def test_eval_rejects_points_outside_the_gap():
    with pytest.raises(ValueError):
        ConcentricAnalytic(1.0, 2.0).eval(2.5, 0.0)
    with pytest.raises(ValueError):
        ConcentricAnalytic(2.0, 1.0)
