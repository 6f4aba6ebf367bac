"""Restarted GMRES and flexible GMRES with right preconditioning.

Arnoldi uses modified Gram-Schmidt followed by one classical reorthogonalisation
pass.  Residual histories are relative to ``||b||`` and start with the initial
residual, so ``residuals[k]`` is the residual after ``k`` iterations.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

Op = Callable[[np.ndarray], np.ndarray]


@dataclass
class KrylovResult:
    x: np.ndarray
    converged: bool
    iterations: int
    residuals: list = field(default_factory=list)
    precond_applications: int = 0


def _givens(a, b):
    if b == 0.0:
        return 1.0, 0.0
    r = np.hypot(a, b)
    return a / r, b / r


def _solve_cycle(apply_A, precond, r0, beta, bnorm, restart, tol, budget, flexible, history, cb, it0):
    n = r0.size
    m = min(restart, budget)
    V = np.empty((m + 1, n))
    Z = np.empty((m, n)) if flexible else None
    H = np.zeros((m + 1, m))
    cs, sn = np.zeros(m), np.zeros(m)
    g = np.zeros(m + 1)
    g[0] = beta
    V[0] = r0 / beta
    k = 0
    napp = 0
    for j in range(m):
        z = precond(V[j])
        napp += 1
        if flexible:
            Z[j] = z
        w = apply_A(z)
        for i in range(j + 1):  # modified Gram-Schmidt
            H[i, j] = np.dot(V[i], w)
            w -= H[i, j] * V[i]
        corr = V[:j + 1] @ w  # one reorthogonalisation pass
        w -= corr @ V[:j + 1]
        H[:j + 1, j] += corr
        H[j + 1, j] = np.linalg.norm(w)
        breakdown = H[j + 1, j] <= 1e-14 * max(abs(H[:j + 1, j]).max(), 1e-300)
        if not breakdown:
            V[j + 1] = w / H[j + 1, j]
        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = t
        cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
        H[j, j] = cs[j] * H[j, j] + sn[j] * H[j + 1, j]
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]
        k = j + 1
        rel = abs(g[j + 1]) / bnorm
        history.append(rel)
        if cb is not None:
            cb(it0 + k, rel)
        if rel <= tol or breakdown:
            break
    y = np.linalg.solve(np.triu(H[:k, :k]), g[:k]) if k else np.zeros(0)
    if flexible:
        dx = y @ Z[:k]
    else:
        dx = precond(y @ V[:k])
        napp += 1
    return dx, k, napp


def _krylov(apply_A: Op, b, precond: Optional[Op], x0, tol, restart, maxiter, callback, flexible):
    b = np.asarray(b, dtype=float)
    precond = precond if precond is not None else (lambda v: v.copy())
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return KrylovResult(np.zeros_like(b), True, 0, [0.0], 0)
    r = b - apply_A(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    history = [beta / bnorm]
    maxiter = 10 * b.size if maxiter is None else int(maxiter)
    its, napp = 0, 0
    while history[-1] > tol and its < maxiter and beta > 0:
        dx, k, nap = _solve_cycle(apply_A, precond, r, beta, bnorm, restart, tol, maxiter - its,
                                  flexible, history, callback, its)
        x += dx
        its += k
        napp += nap
        if history[-1] <= tol or its >= maxiter or k == 0:
            break
        r = b - apply_A(x)
        beta = np.linalg.norm(r)
        history[-1] = beta / bnorm  # true residual at restart
    return KrylovResult(x, history[-1] <= tol, its, history, napp)


def gmres(apply_A: Op, b, precond: Optional[Op] = None, x0=None, tol: float = 1e-9,
          restart: int = 100, maxiter: int | None = None, callback=None) -> KrylovResult:
    """Right-preconditioned restarted GMRES (``precond`` must be a fixed linear map)."""
    return _krylov(apply_A, b, precond, x0, tol, restart, maxiter, callback, flexible=False)


def fgmres(apply_A: Op, b, precond: Optional[Op] = None, x0=None, tol: float = 1e-9,
           restart: int = 100, maxiter: int | None = None, callback=None) -> KrylovResult:
    """Flexible GMRES: the preconditioner may change between iterations."""
    return _krylov(apply_A, b, precond, x0, tol, restart, maxiter, callback, flexible=True)
