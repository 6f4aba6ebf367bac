"""Drag laws for periodic arrays and their inversion for the hydrodynamic radius."""
from __future__ import annotations

import numpy as np
from scipy.optimize import brentq


def drag_periodic_3d(R, l):
    """``F / (eta V)`` for a simple cubic array of spheres (dilute expansion)."""
    x = np.asarray(R, dtype=float) / l
    return 6.0 * np.pi * np.asarray(R) / (1.0 - 2.8373 * x + 4.19 * x ** 3 - 27.4 * x ** 6)


def drag_periodic_2d(R, l):
    """``F / (eta V)`` per unit length for a square array of cylinders."""
    phi = np.pi * np.asarray(R, dtype=float) ** 2 / l ** 2
    return 4.0 * np.pi / (-np.log(np.sqrt(phi)) - 0.738 + phi - 0.887 * phi ** 2 + 2.038 * phi ** 3)


def drag_lubrication_2d(phi):
    """Close-packing asymptote of the square array, ``eps = 1 - sqrt(4 phi / pi)``."""
    eps = 1.0 - np.sqrt(4.0 * np.asarray(phi, dtype=float) / np.pi)
    return 9.0 * np.pi / 2.0 ** 1.5 * eps ** -2.5


def hydrodynamic_radius(drag_over_eta_v: float, l: float, dim: int = 3) -> float:
    """Invert the periodic drag law for the radius of the equivalent rigid body.

    ``drag_over_eta_v`` is ``F / (eta V)`` measured for one body per periodic cell
    of side ``l`` moving at speed ``V`` relative to the fluid.
    """
    k = float(drag_over_eta_v)
    if not k > 0:
        raise ValueError("drag must be positive")
    if dim == 3:
        fn = lambda R: drag_periodic_3d(R, l) - k
        hi = 0.3 * l  # the expansion is monotone well past this point
    else:
        fn = lambda R: drag_periodic_2d(R, l) - k
        hi = l * np.sqrt(0.35 / np.pi)
    lo = 1e-9 * l
    if fn(hi) < 0:
        raise ValueError("drag exceeds the range where the periodic drag law is invertible")
    return brentq(fn, lo, hi, xtol=1e-14 * l, rtol=1e-14)
