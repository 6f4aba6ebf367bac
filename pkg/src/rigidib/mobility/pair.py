"""Closed-form pairwise mobility laws ``M_ij = f(r) I + g(r) rhat rhat^T``."""
from __future__ import annotations

import numpy as np


def rpy_pair(r, a: float, eta: float = 1.0):
    """Rotne-Prager-Yamakawa tensor for two spheres of radius ``a`` (3D).

    Returns ``(f, g)``; the overlapping branch (``r <= 2a``) keeps the tensor
    positive definite.
    """
    r = np.asarray(r, dtype=float)
    c = 1.0 / (6.0 * np.pi * eta * a)
    far = r > 2.0 * a
    rs = np.where(far, r, 1.0)
    f = np.where(far, c * (0.75 * a / rs + 0.5 * a ** 3 / rs ** 3), c * (1.0 - 9.0 * r / (32.0 * a)))
    g = np.where(far, c * (0.75 * a / rs - 1.5 * a ** 3 / rs ** 3), c * (3.0 * r / (32.0 * a)))
    return f, g


def oseen_pair(r, eta: float = 1.0, dim: int = 3):
    """Free-space Stokeslet.  In 2D the isotropic part is defined up to a constant
    and ``-ln r / (4 pi eta)`` is returned."""
    r = np.asarray(r, dtype=float)
    if dim == 3:
        f = 1.0 / (8.0 * np.pi * eta * r)
        return f, f.copy()
    return -np.log(r) / (4.0 * np.pi * eta), np.full_like(r, 1.0 / (4.0 * np.pi * eta))


def brinkmanlet_pair(r, beta: float, h: float = 1.0, eta: float = 1.0):
    """Green's function of ``(rho/dt - eta Lap) v + grad p = F delta`` in 3D,
    with screening ``alpha^2 = 1 / (beta h^2)``.  Singular at ``r = 0``."""
    r = np.asarray(r, dtype=float)
    if np.isinf(beta):
        return oseen_pair(r, eta)
    alpha = 1.0 / (np.sqrt(beta) * h)
    x = alpha * r
    small = x < 1e-3
    xs = np.where(small, 1.0, x)
    ex = np.exp(-xs)
    fb = np.where(small, 0.5 / x - 2.0 / 3.0 + 3.0 * x / 8.0 - 2.0 * x ** 2 / 15.0,
                  (ex * (1.0 + xs + xs ** 2) - 1.0) / xs ** 3)
    gb = np.where(small, 0.5 / x - x / 8.0 + x ** 2 / 15.0,
                  (3.0 - ex * (3.0 + 3.0 * xs + xs ** 2)) / xs ** 3)
    c = alpha / (4.0 * np.pi * eta)
    return c * fb, c * gb


def inviscid_far_field(r, dt: float, rho: float, dim: int = 3):
    """Potential-flow dipole reached when viscosity is negligible (beta -> 0)."""
    r = np.asarray(r, dtype=float)
    if dim == 3:
        return -dt / (4.0 * np.pi * rho * r ** 3), 3.0 * dt / (4.0 * np.pi * rho * r ** 3)
    return -dt / (2.0 * np.pi * rho * r ** 2), dt / (np.pi * rho * r ** 2)
