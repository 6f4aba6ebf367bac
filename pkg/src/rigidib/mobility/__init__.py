"""Pair mobility laws, empirical fits and dense mobility matrices."""
from .dense import (DenseMobility, assemble_mobility, condition_number, exact_mobility, factorize,
                    mob_solve, pair_geometry, spectrum)
from .fits import MobilityFit, fit_eval, load_default_fit
from .pair import brinkmanlet_pair, inviscid_far_field, oseen_pair, rpy_pair
from .radius import drag_lubrication_2d, drag_periodic_2d, drag_periodic_3d, hydrodynamic_radius

__all__ = [
    "DenseMobility", "MobilityFit", "assemble_mobility", "brinkmanlet_pair", "condition_number",
    "drag_lubrication_2d", "drag_periodic_2d", "drag_periodic_3d", "exact_mobility", "factorize",
    "fit_eval", "hydrodynamic_radius", "inviscid_far_field", "load_default_fit", "mob_solve",
    "oseen_pair", "pair_geometry", "rpy_pair", "spectrum",
]
