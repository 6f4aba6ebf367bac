"""Rigid-body immersed-boundary Stokes / Navier-Stokes solver on staggered grids."""
