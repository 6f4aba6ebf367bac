"""Empirical pair-mobility fits for the discrete immersed-boundary fluid solver.

Each fit maps a marker separation ``x = r/h`` to ``(f, g)`` such that
``M_ij ~ f I + g rhat rhat^T``.  Four families are supported:

* 3D steady Stokes (``beta = inf``), normalised by the Oseen tensor;
* 3D finite ``beta``, normalised by the inviscid potential dipole, with a
  self-mobility law ``phi0(beta)`` interpolating between the inviscid limit
  (set by the kernel volume ``c_V h^3``) and the steady limit ``1/(6 pi eta a)``;
* the two 2D counterparts (steady needs the periodic cell size ``l`` because the
  2D self-mobility grows like ``ln l``).

Coefficients for finite ``beta`` are tabulated on a set of nodes and linearly
interpolated.  Fits are stored as small INI-style text files.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
BREAK_3D = 0.8
PERIODIC_3D = 2.84  # leading periodic correction of the Oseen tensor, in units of 1/(6 pi eta l)


# ----------------------------------------------------------------------------
# 3D

def steady3d_tilde(x, a_over_h, b):
    """Normalised steady forms ``(f~, g~)`` as functions of ``x = r/h``."""
    x = np.asarray(x, dtype=float)
    near = x < BREAK_3D
    fn = x / (0.75 * a_over_h + b[0] * x ** 2)
    x2, x4 = x * x, x ** 4
    ff = b[1] * x * np.exp(-b[2] * x) + (b[3] * x2 + x4) / (1.0 + b[4] * x2 + x4)
    ft = np.where(near, fn, ff)
    gt = x ** 3 / (b[5] + b[6] * x2 + x ** 3)
    return ft, gt


def phi0_3d(beta, z, a_over_h):
    """Normalised self-mobility ``eta h f(0) / beta``."""
    beta = np.asarray(beta, dtype=float)
    sb = np.sqrt(beta)
    return (1.0 + z[1] * sb + z[2] * beta) / (z[0] + z[3] * beta + 6.0 * np.pi * a_over_h * z[2] * beta ** 2)


def beta3d_tilde(x, beta, phi0, a, b):
    x = np.asarray(x, dtype=float)
    x3, x5, x7 = x ** 3, x ** 5, x ** 7
    if beta > 0:
        ea = np.exp(-a[3] * x / np.sqrt(beta)) / (2.0 * beta)
        eb = np.exp(-b[0] * x / np.sqrt(beta)) / (6.0 * beta)
    else:
        ea = eb = np.zeros_like(x)
    num = phi0 * (-4.0 * np.pi * x3 + a[4] * (x5 - x7 * ea))
    den = 1.0 + a[0] * x + a[1] * x * x + a[2] * x3 + a[4] * x5 * phi0
    ft = num / den + (a[5] * x ** 4 * np.exp(-a[6] * x) + a[7] * x ** 4) / (1.0 + a[8] * x3 + a[9] * x5)
    gt = phi0 * b[5] * (x5 + x7 * eb) / (1.0 + b[1] * x + b[2] * x * x + b[3] * x3 + b[4] * x ** 4 + b[5] * phi0 * x5)
    return ft, gt


# ----------------------------------------------------------------------------
# 2D

def steady2d_tilde(x, a, b):
    x = np.asarray(x, dtype=float)
    xs = np.where(x > 0, x, 1.0)
    lx = np.where(x > 0, np.log(xs), 0.0)
    x2, x3 = x * x, x ** 3
    ft = (a[0] * x2 + a[1] * x3 + a[2] * x3 * lx) / (1.0 + a[3] * x + a[4] * x2 + a[2] * x3)
    gt = (b[0] * x2 + b[1] * x3) / (1.0 + b[2] * x + b[3] * x2 + b[1] * x3)
    return ft, gt


def phi0_2d(beta, z):
    beta = np.asarray(beta, dtype=float)
    bl = np.where(beta > 0, beta ** 3 * np.log(np.where(beta > 0, beta, 1.0)), 0.0)
    return (z[0] + z[1] * bl) / (1.0 + z[2] * beta + z[3] * beta ** 2 + z[4] * beta ** 4)


def beta2d_tilde(x, beta, phi0, a, b, c, p):
    """``a = (a0, a2, a3)``, ``b = (b1, b2)``, ``c = (c0..c3)``, ``p = (p1..p3)``.

    The quadratic coefficient ``a1 = -2 pi phi0`` is fixed by continuity of
    ``f`` at ``x = 0``.
    """
    x = np.asarray(x, dtype=float)
    xs = np.where(x > 0, x, 1.0)
    lx = np.where(x > 0, np.log(xs), 0.0)
    x2, x3, x4 = x * x, x ** 3, x ** 4
    a1 = -2.0 * np.pi * phi0
    if beta > 0:
        sb = np.sqrt(beta)
        t1 = x3 * lx / (beta * (a[0] + 2.0 * x)) * np.exp(-p[0] * x / sb)
        u1 = x3 / (beta * (c[0] + 4.0 * x)) * np.exp(-p[1] * x / sb)
    else:
        t1 = u1 = np.zeros_like(x)
    ft = t1 + (a1 * x2 + a[1] * x3 + a[2] * x4) / (1.0 + b[0] * x2 + b[1] * x3 + a[2] * x4)
    gt = u1 + x3 / (np.exp(-p[2] * x) * (c[1] + c[2] * x + c[3] * x2) + x3)
    return ft, gt


# ----------------------------------------------------------------------------

@dataclass
class MobilityFit:
    """Fitted coefficients for one kernel and dimension."""
    dim: int
    kernel: str
    a_over_h: float                      # hydrodynamic radius of a single marker
    c_v: float                           # inviscid kernel volume V_m / h^d
    steady: np.ndarray                   # 3D: b0..b6; 2D: a0..a4 + b0..b3
    nodes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    z: np.ndarray = field(default_factory=lambda: np.zeros(0))
    coef: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))  # one row per node
    meta: dict = field(default_factory=dict)

    # -- evaluation -----------------------------------------------------------
    def phi0(self, beta):
        if self.dim == 3:
            return phi0_3d(beta, self.z, self.a_over_h)
        return phi0_2d(beta, self.z)

    def _row(self, beta):
        nodes = self.nodes
        if beta <= nodes[0]:
            return self.coef[0]
        if beta >= nodes[-1]:
            return self.coef[-1]
        k = int(np.searchsorted(nodes, beta) - 1)
        t = (beta - nodes[k]) / (nodes[k + 1] - nodes[k])
        return (1 - t) * self.coef[k] + t * self.coef[k + 1]

    def has_beta(self) -> bool:
        return len(self.nodes) > 0

    def evaluate(self, r, beta=math.inf, eta=1.0, h=1.0, l=None):
        """``(f, g)`` at distances ``r`` for viscous CFL number ``beta``."""
        r = np.asarray(r, dtype=float)
        x = r / h
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        if self.dim == 3:
            if math.isinf(beta) or (self.has_beta() and beta > self.nodes[-1]) or not self.has_beta():
                if not math.isinf(beta) and not self.has_beta():
                    raise ValueError("this fit has no finite-beta table")
                ft, gt = steady3d_tilde(xs, self.a_over_h, self.steady)
                corr = PERIODIC_3D / (6.0 * np.pi * eta * l) if l else 0.0
                f = np.where(pos, ft / (8.0 * np.pi * eta * xs * h), 1.0 / (6.0 * np.pi * eta * self.a_over_h * h)) - corr
                g = np.where(pos, gt / (8.0 * np.pi * eta * xs * h), 0.0)
                return f, g
            row = self._row(beta)
            ph = float(self.phi0(beta))
            ft, gt = beta3d_tilde(xs, beta, ph, row[:10], row[10:16])
            s = beta / (eta * h)
            f = np.where(pos, -s * ft / (4.0 * np.pi * xs ** 3), s * ph)
            g = np.where(pos, 3.0 * s * gt / (4.0 * np.pi * xs ** 3), 0.0)
            return f, g
        if math.isinf(beta):
            if l is None:
                raise ValueError("the 2D steady fit needs the periodic cell size l")
            f0 = np.log(l / (3.708 * self.a_over_h * h)) / (4.0 * np.pi * eta)
            ft, gt = steady2d_tilde(xs, self.steady[:5], self.steady[5:9])
            f = np.where(pos, f0 - ft / (4.0 * np.pi * eta), f0)
            g = np.where(pos, gt / (4.0 * np.pi * eta), 0.0)
            return f, g
        if not self.has_beta():
            raise ValueError("this fit has no finite-beta table")
        row = self._row(beta)
        ph = float(self.phi0(beta))
        ft, gt = beta2d_tilde(xs, beta, ph, row[0:3], row[3:5], row[5:9], row[9:12])
        f = np.where(pos, -beta / (2.0 * np.pi * eta * xs ** 2) * ft, beta * ph / eta)
        g = np.where(pos, beta / (np.pi * eta * xs ** 2) * gt, 0.0)
        return f, g

    def pair(self, beta=math.inf, eta=1.0, h=1.0, l=None):
        return lambda r: self.evaluate(r, beta, eta, h, l)

    # -- persistence ----------------------------------------------------------
    def to_text(self) -> str:
        cp = configparser.ConfigParser()
        cp["meta"] = {"dim": str(self.dim), "kernel": self.kernel, **{k: str(v) for k, v in self.meta.items()}}
        cp["steady"] = {"a_over_h": repr(self.a_over_h), "c_v": repr(self.c_v),
                        "coef": " ".join(repr(float(v)) for v in self.steady)}
        if self.has_beta():
            sec = {"nodes": " ".join(repr(float(v)) for v in self.nodes),
                   "z": " ".join(repr(float(v)) for v in self.z)}
            for i, row in enumerate(self.coef):
                sec[f"row{i}"] = " ".join(repr(float(v)) for v in row)
            cp["beta"] = sec
        buf = io.StringIO()
        buf.write(f"# pair-mobility fit: {self.dim}D, kernel {self.kernel}\n")
        cp.write(buf)
        return buf.getvalue()

    def save(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "MobilityFit":
        cp = configparser.ConfigParser()
        cp.read_string(text)
        vec = lambda s: np.array([float(v) for v in s.split()])
        meta = dict(cp["meta"])
        dim, kernel = int(meta.pop("dim")), meta.pop("kernel")
        st = cp["steady"]
        fit = cls(dim, kernel, float(st["a_over_h"]), float(st["c_v"]), vec(st["coef"]), meta=meta)
        if cp.has_section("beta"):
            b = cp["beta"]
            fit.nodes = vec(b["nodes"])
            fit.z = vec(b["z"])
            fit.coef = np.array([vec(b[f"row{i}"]) for i in range(len(fit.nodes))])
        return fit

    @classmethod
    def load(cls, path) -> "MobilityFit":
        return cls.from_text(Path(path).read_text())


def default_fit_path(dim: int, kernel: str) -> Path:
    kernel = getattr(kernel, "value", kernel)
    return DATA_DIR / f"fit_{kernel}_{dim}d.txt"


_CACHE: dict = {}


def load_default_fit(dim: int, kernel: str = "peskin4") -> MobilityFit:
    kernel = getattr(kernel, "value", kernel)
    key = (dim, kernel)
    if key not in _CACHE:
        path = default_fit_path(dim, str(kernel))
        if not path.exists():
            raise FileNotFoundError(f"no shipped fit for kernel {kernel} in {dim}D ({path.name})")
        _CACHE[key] = MobilityFit.load(path)
    return _CACHE[key]


def fit_eval(r, beta, fit: MobilityFit, eta=1.0, h=1.0, l=None):
    """Evaluate ``(f, g)`` of a fitted pair mobility."""
    return fit.evaluate(r, beta, eta, h, l)
