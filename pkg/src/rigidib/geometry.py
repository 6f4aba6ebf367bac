"""Marker configurations for rigid bodies: icosphere shells, filled spheres,
circular shells and filled disks, plus surface quadrature weights."""
from __future__ import annotations

import numpy as np


def _icosahedron():
    t = (1.0 + 5.0 ** 0.5) / 2.0
    v = np.array([[-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
                  [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
                  [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1]], dtype=float)
    f = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                  [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                  [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                  [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def icosphere(level: int):
    """Unit icosphere after ``level - 1`` midpoint subdivisions.

    Returns ``(vertices, faces)`` with ``10 * 4**(level-1) + 2`` vertices.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    v, f = _icosahedron()
    verts = list(v)
    for _ in range(level - 1):
        cache = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        nf = []
        for a, b, c in f:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            nf += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        f = np.array(nf)
    return np.array(verts), f


def icosphere_shell(level: int, radius: float, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    v, _ = icosphere(level)
    return radius * v + np.asarray(center, dtype=float)


def marker_areas(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Vertex areas: one third of the area of every incident triangle."""
    v = np.asarray(vertices, dtype=float)
    a = 0.5 * np.linalg.norm(np.cross(v[faces[:, 1]] - v[faces[:, 0]], v[faces[:, 2]] - v[faces[:, 0]]), axis=1)
    out = np.zeros(len(v))
    for k in range(3):
        np.add.at(out, faces[:, k], a / 3.0)
    return out


def min_spacing(pos: np.ndarray) -> float:
    pos = np.asarray(pos, dtype=float)
    d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
    d[np.diag_indices(len(pos))] = np.inf
    return float(d.min())


def mean_edge(level: int) -> float:
    """Mean edge length of the unit icosphere of ``level``."""
    v, f = icosphere(level)
    e = np.concatenate([np.linalg.norm(v[f[:, i]] - v[f[:, (i + 1) % 3]], axis=1) for i in range(3)])
    return float(e.mean())


def nearest_neighbour_spacing(level: int) -> float:
    """Mean nearest-neighbour distance on the unit icosphere of ``level``."""
    v, _ = icosphere(level)
    d = np.linalg.norm(v[:, None] - v[None], axis=-1)
    d[np.diag_indices(len(v))] = np.inf
    return float(d.min(axis=1).mean())


def _rotation(seed: int) -> np.ndarray:
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((3, 3)))
    return q * np.sign(np.diag(r))


def filled_sphere(surface_level: int, radius: float, spacing: float, center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Surface icosphere plus interior concentric layers and a centre marker.

    Interior layers sit at ``radius - j * spacing`` while they stay more than one
    spacing away from the centre; each uses the finest icosphere whose
    nearest-neighbour spacing is at least ``0.8 * spacing``.  Layers are rotated
    to avoid radial alignment.
    """
    center = np.asarray(center, dtype=float)
    layers = [icosphere_shell(surface_level, radius)]
    j = 1
    while radius - j * spacing > spacing * (1.0 + 1e-9):
        rj = radius - j * spacing
        lvl = 1
        for k in range(surface_level, 0, -1):
            if rj * nearest_neighbour_spacing(k) >= 0.8 * spacing:
                lvl = k
                break
        shell = icosphere_shell(lvl, rj) @ _rotation(j).T
        layers.append(shell)
        j += 1
    layers.append(np.zeros((1, 3)))
    return np.vstack(layers) + center


def circle_shell(n: int, radius: float, center=(0.0, 0.0), phase: float = 0.0) -> np.ndarray:
    t = phase + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(t), np.sin(t)]) * radius + np.asarray(center, dtype=float)


def polar_disk(radius: float, spacing: float, center=(0.0, 0.0)) -> np.ndarray:
    """Filled disk: a surface ring with spacing ``spacing`` and inner rings every
    ``spacing`` towards the centre (``round(2 pi r / spacing)`` markers each,
    phases staggered by half a step), plus a centre marker."""
    rings = []
    j = 0
    while radius - j * spacing > 0.5 * spacing:
        rj = radius - j * spacing
        n = max(int(round(2.0 * np.pi * rj / spacing)), 3)
        rings.append(circle_shell(n, rj, phase=(j % 2) * np.pi / n))
        j += 1
    rings.append(np.zeros((1, 2)))
    return np.vstack(rings) + np.asarray(center, dtype=float)


def radius_of_gyration(pos: np.ndarray) -> float:
    pos = np.asarray(pos, dtype=float)
    c = pos.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum((pos - c) ** 2, axis=1))))


def segment_markers(p0, p1, spacing: float, include_end: bool = True) -> np.ndarray:
    """Markers along a straight segment, spaced at most ``spacing`` apart."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    n = max(int(np.ceil(np.linalg.norm(p1 - p0) / spacing)), 1)
    t = np.linspace(0.0, 1.0, n + 1)
    if not include_end:
        t = t[:-1]
    return p0 + t[:, None] * (p1 - p0)
