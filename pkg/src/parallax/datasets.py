"""Small synthetic datasets used by the examples and tests."""

from __future__ import annotations

import numpy as np
from scipy.optimize import least_squares

from .exceptions import InputError
from .geometry import PointCloud

__all__ = ["regular_polygon", "unit_square", "cyclooctane"]


def regular_polygon(n: int = 16, radius: float = 1.0) -> PointCloud:
    """Vertices of a regular ``n``-gon on the circle of the given radius."""
    if n < 3:
        raise InputError("a polygon needs at least 3 vertices")
    t = 2 * np.pi * np.arange(n) / n
    return PointCloud(radius * np.c_[np.cos(t), np.sin(t)])


def unit_square() -> PointCloud:
    return PointCloud(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))


BOND = 1.52
ANGLE = np.deg2rad(115.0)


def _ring_residuals(flat, bond, second):
    P = flat.reshape(8, 3)
    r1 = np.linalg.norm(P - np.roll(P, -1, axis=0), axis=1) - bond
    r2 = np.linalg.norm(P - np.roll(P, -2, axis=0), axis=1) - second
    return np.concatenate([r1, r2])


def _kabsch(P, ref):
    H = P.T @ ref
    U, _, Vt = np.linalg.svd(H)
    s = np.sign(np.linalg.det(U @ Vt))
    D = np.diag([1.0, 1.0, s])
    return P @ (U @ D @ Vt)


def cyclooctane(n: int = 200, seed: int = 0, noise: float = 0.35) -> PointCloud:
    """Ring conformations of an eight-atom ring with fixed bond length and angle.

    Each sample starts from a jittered planar octagon and is projected onto
    the constraint set by least squares, then centered and rotated onto a
    common reference. Rows are the 24 flattened coordinates.
    """
    if n < 1:
        raise InputError("n must be positive")
    rng = np.random.default_rng(seed)
    second = 2 * BOND * np.sin(ANGLE / 2)
    ring_r = BOND / (2 * np.sin(np.pi / 8))
    t = 2 * np.pi * np.arange(8) / 8
    base = np.c_[ring_r * np.cos(t), ring_r * np.sin(t), np.zeros(8)]
    ref = None
    out = []
    while len(out) < n:
        start = base + noise * rng.standard_normal(base.shape)
        sol = least_squares(_ring_residuals, start.ravel(), args=(BOND, second), xtol=1e-12, ftol=1e-12)
        if np.abs(sol.fun).max() > 1e-6:
            continue
        P = sol.x.reshape(8, 3)
        P = P - P.mean(axis=0)
        if ref is None:
            ref = P
        out.append(_kabsch(P, ref).ravel())
    return PointCloud(np.array(out))
