"""Dense mobility matrices: assembly from pair laws, exact columns, solves and spectra."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla


def pair_geometry(pos, box=None):
    """Pairwise separation vectors ``x_i - x_j``.

    With ``box`` given, the minimum image is taken along every axis whose box
    length is finite and positive (``inf`` or ``0`` marks a non-periodic axis).
    """
    pos = np.asarray(pos, dtype=float)
    d = pos[:, None, :] - pos[None, :, :]
    if box is not None:
        box = np.broadcast_to(np.asarray(box, dtype=float), (pos.shape[1],))
        for a, L in enumerate(box):
            if np.isfinite(L) and L > 0:
                d[..., a] -= L * np.round(d[..., a] / L)
    return d


def assemble_mobility(pos, pair: Callable, box=None, self_term: float | None = None) -> np.ndarray:
    """``M_ij = f(r) I + g(r) rhat rhat^T`` as a ``(N d) x (N d)`` matrix.

    ``pair(r)`` returns ``(f, g)`` for an array of distances.  The diagonal
    blocks use ``pair(0)`` unless ``self_term`` is given.
    """
    d = pair_geometry(pos, box)
    n, dim = d.shape[0], d.shape[2]
    r = np.linalg.norm(d, axis=-1)
    f, g = pair(r)
    f, g = np.array(f, dtype=float), np.array(g, dtype=float)
    diag = np.arange(n)
    if self_term is not None:
        f[diag, diag] = self_term
    g[diag, diag] = 0.0
    rs = np.where(r > 0, r, 1.0)
    rh = d / rs[..., None]
    M = f[..., None, None] * np.eye(dim) + g[..., None, None] * rh[..., :, None] * rh[..., None, :]
    return M.transpose(0, 2, 1, 3).reshape(n * dim, n * dim)


def exact_mobility(ib, solve_velocity: Callable, symmetrize: bool = True,
                   spread: Callable | None = None) -> np.ndarray:
    """``M = J L^-1 S`` column by column.

    ``solve_velocity(force_density_list)`` must return the face velocity of the
    unconstrained fluid problem driven by that force density.  ``spread``
    overrides ``ib.spread`` (e.g. with the mean-subtracted variant).
    """
    n, dim = ib.n_markers, ib.grid.dim
    spread = ib.spread if spread is None else spread
    M = np.empty((n * dim, n * dim))
    for j in range(n * dim):
        F = np.zeros((n, dim))
        F.flat[j] = 1.0
        v = solve_velocity(spread(F))
        M[:, j] = ib.interpolate(v).ravel()
    if symmetrize:
        M = 0.5 * (M + M.T)
    return M


@dataclass
class DenseMobility:
    """Factorised approximate mobility: Cholesky or a filtered eigen pseudo-inverse."""
    M: np.ndarray
    method: str = "cholesky"
    svd_cutoff: float = 1e-8

    def __post_init__(self):
        self.M = np.asarray(self.M, dtype=float)
        if self.method == "auto":
            try:
                self._chol = sla.cho_factor(self.M, lower=True)
                self.method = "cholesky"
                return
            except np.linalg.LinAlgError:
                self.method = "svd"
        if self.method == "cholesky":
            self._chol = sla.cho_factor(self.M, lower=True)
        elif self.method == "svd":
            w, V = np.linalg.eigh(0.5 * (self.M + self.M.T))
            keep = w > self.svd_cutoff * w.max()
            self._w, self._V = w[keep], V[:, keep]
            self.discarded = int((~keep).sum())
        else:
            raise ValueError(f"unknown factorisation {self.method!r}")

    def solve(self, b: np.ndarray) -> np.ndarray:
        shape = np.shape(b)
        b = np.asarray(b, dtype=float).ravel()
        if self.method == "cholesky":
            x = sla.cho_solve(self._chol, b)
        else:
            x = self._V @ ((self._V.T @ b) / self._w)
        return x.reshape(shape)


def factorize(M, method: str = "cholesky", svd_cutoff: float = 1e-8) -> DenseMobility:
    return DenseMobility(M, method, svd_cutoff)


def mob_solve(fact: DenseMobility, b) -> np.ndarray:
    return fact.solve(b)


def spectrum(M: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the symmetric part of ``M``."""
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def condition_number(M: np.ndarray, skip: int = 0) -> float:
    """``lambda_max / lambda_(skip+1)``: ``skip`` near-null modes are ignored."""
    w = spectrum(M)
    return float(w[-1] / w[skip])
