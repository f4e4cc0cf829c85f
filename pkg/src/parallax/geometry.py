"""Euclidean primitives: point clouds, segments, transverse disks, perturbations."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DegenerateEdgeError, InputError

log = logging.getLogger(__name__)

__all__ = [
    "PointCloud",
    "Correspondence",
    "distance",
    "segment_samples",
    "transverse_disk_samples",
    "disk_rim_samples",
    "perturb_pointwise",
    "hausdorff",
    "distance_collisions",
    "load_csv",
    "save_csv",
]


@dataclass(frozen=True)
class PointCloud:
    """A finite dataset X in R^dim.

    Points are stored as a read-only ``(n, dim)`` float array. Index ``i``
    always refers to the same point.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InputError(f"points must be a 2-d array, got shape {pts.shape}")
        if pts.shape[0] == 0:
            raise InputError("point cloud is empty")
        if not np.all(np.isfinite(pts)):
            raise InputError("point coordinates must be finite")
        dup = _first_duplicate(pts)
        if dup is not None:
            raise InputError(f"duplicate points at indices {dup[0]} and {dup[1]}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, i):
        return self.points[i]

    def diameter(self) -> float:
        if len(self) < 2:
            return 0.0
        diff = self.points[:, None, :] - self.points[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    def pairwise_distances(self) -> np.ndarray:
        diff = self.points[:, None, :] - self.points[None, :, :]
        return np.sqrt((diff**2).sum(-1))


def _first_duplicate(pts):
    _, idx, inv = np.unique(pts, axis=0, return_index=True, return_inverse=True)
    if len(idx) == len(pts):
        return None
    inv = np.asarray(inv).ravel()
    seen = {}
    for i, g in enumerate(inv):
        if g in seen:
            return seen[g], i
        seen[g] = i
    return None


@dataclass(frozen=True)
class Correspondence:
    """Bijection ``source index -> target index`` with displacement bound ``kappa``."""

    pairs: tuple
    kappa: float

    def __post_init__(self):
        if self.kappa < 0:
            raise InputError("kappa must be nonnegative")
        src = [p[0] for p in self.pairs]
        dst = [p[1] for p in self.pairs]
        if len(set(src)) != len(src) or len(set(dst)) != len(dst):
            raise InputError("correspondence is not a bijection")

    @classmethod
    def identity(cls, n, kappa):
        return cls(tuple((i, i) for i in range(n)), float(kappa))

    def check(self, X: PointCloud, Xp: PointCloud, atol=1e-12) -> list:
        """Return the pairs whose displacement exceeds ``kappa``."""
        if len(X) != len(Xp) or len(self.pairs) != len(X):
            raise InputError("correspondence does not cover both clouds")
        return [
            (i, j)
            for i, j in self.pairs
            if distance(X[i], Xp[j]) > self.kappa + atol
        ]


def _as_point(p):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise InputError(f"expected a point, got array of shape {p.shape}")
    return p


def distance(p, q) -> float:
    p, q = _as_point(p), _as_point(q)
    if p.shape != q.shape:
        raise InputError(f"dimension mismatch: {p.shape[0]} vs {q.shape[0]}")
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
        raise InputError("coordinates must be finite")
    return float(np.linalg.norm(p - q))


def segment_samples(x, y, scheme="barycenter") -> np.ndarray:
    """Interior points of the segment from ``x`` to ``y``.

    ``scheme`` is ``"barycenter"`` or ``("uniform", m)``; the uniform scheme
    returns the points at parameters ``i/(m+1)`` for ``i = 1..m``.
    """
    x, y = _as_point(x), _as_point(y)
    if x.shape != y.shape:
        raise InputError("dimension mismatch")
    if np.array_equal(x, y):
        raise DegenerateEdgeError("segment endpoints coincide")
    if scheme == "barycenter":
        return ((x + y) / 2.0)[None, :]
    kind, m = _parse_scheme(scheme)
    t = np.arange(1, m + 1, dtype=float) / (m + 1)
    return x[None, :] + t[:, None] * (y - x)[None, :]


def _parse_scheme(scheme):
    if isinstance(scheme, (tuple, list)) and len(scheme) == 2 and scheme[0] == "uniform":
        m = int(scheme[1])
        if m < 1:
            raise InputError("uniform scheme needs m >= 1")
        return "uniform", m
    raise InputError(f"unknown segment scheme {scheme!r}")


def _perpendicular_directions(x, y, count, rng):
    d = y - x
    u = d / np.linalg.norm(d)
    g = rng.standard_normal((count, len(x)))
    g -= np.outer(g @ u, u)
    norms = np.linalg.norm(g, axis=1)
    # a vanishing projection has probability zero; redraw defensively
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        h = rng.standard_normal((int(bad.sum()), len(x)))
        h -= np.outer(h @ u, u)
        g[bad] = h
        norms = np.linalg.norm(g, axis=1)
    return g / norms[:, None]


def transverse_disk_samples(x, y, r, count, rng) -> np.ndarray:
    """Uniform samples from the codimension-1 disk of radius ``r``.

    The disk is centered at the midpoint of ``x`` and ``y`` and lies in the
    hyperplane orthogonal to ``y - x``. Directions and radii come from two
    independent child streams of ``rng`` so that a larger ``count`` with the
    same seed extends the sample rather than replacing it.
    """
    x, y = _as_point(x), _as_point(y)
    n = len(x)
    if n < 2:
        raise InputError("transverse disks need ambient dimension >= 2")
    if np.array_equal(x, y):
        raise DegenerateEdgeError("segment endpoints coincide")
    if r < 0:
        raise InputError("disk radius must be nonnegative")
    rng_dir, rng_rad = _child_streams(rng, 2)
    dirs = _perpendicular_directions(x, y, count, rng_dir)
    radii = r * rng_rad.random(count) ** (1.0 / (n - 1))
    mid = (x + y) / 2.0
    return mid[None, :] + radii[:, None] * dirs


def disk_rim_samples(x, y, r, count, rng) -> np.ndarray:
    """Samples on the boundary sphere (radius exactly ``r``) of the transverse disk."""
    x, y = _as_point(x), _as_point(y)
    if len(x) < 2:
        raise InputError("transverse disks need ambient dimension >= 2")
    if len(x) == 2:
        u = (y - x) / np.linalg.norm(y - x)
        perp = np.array([-u[1], u[0]])
        signs = np.where(np.arange(count) % 2 == 0, 1.0, -1.0)
        dirs = signs[:, None] * perp[None, :]
    else:
        dirs = _perpendicular_directions(x, y, count, rng)
    return ((x + y) / 2.0)[None, :] + r * dirs


def _child_streams(rng, k):
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    return rng.spawn(k)


def perturb_pointwise(X: PointCloud, kappa: float, rng, max_retries: int = 10):
    """Move every point by an independent uniform vector of norm at most ``kappa``.

    Returns the perturbed cloud and the identity correspondence. Retries when the
    perturbation creates coincident points.
    """
    if kappa < 0:
        raise InputError("kappa must be nonnegative")
    if kappa == 0:
        return PointCloud(X.points), Correspondence.identity(len(X), 0.0)
    n, dim = X.points.shape
    for _ in range(max_retries):
        g = rng.standard_normal((n, dim))
        g /= np.linalg.norm(g, axis=1)[:, None]
        rad = kappa * rng.random(n) ** (1.0 / dim)
        moved = X.points + rad[:, None] * g
        try:
            Xp = PointCloud(moved)
        except InputError:
            continue
        return Xp, Correspondence.identity(n, kappa)
    raise InputError(f"perturbation kept producing duplicate points after {max_retries} tries")


def hausdorff(A, B) -> float:
    A = np.asarray(getattr(A, "points", A), dtype=float)
    B = np.asarray(getattr(B, "points", B), dtype=float)
    d = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1))
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def distance_collisions(X: PointCloud, tol: float = 1e-9) -> int:
    """Number of adjacent pairwise-distance values (sorted) closer than ``tol``."""
    if len(X) < 3:
        return 0
    iu = np.triu_indices(len(X), 1)
    d = np.sort(X.pairwise_distances()[iu])
    n = int(np.sum(np.diff(d) <= tol))
    if n:
        log.info("%d pairwise distance collisions within %g", n, tol)
    return n


def load_csv(path) -> PointCloud:
    """Read a dataset: one point per line, comma-separated, ``#`` lines ignored."""
    rows = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                row = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
            if dim is None:
                dim = len(row)
            elif len(row) != dim:
                raise InputError(f"{path}:{lineno}: expected {dim} coordinates, got {len(row)}")
            rows.append(row)
    if not rows:
        raise InputError(f"{path}: no data lines")
    return PointCloud(np.array(rows))


def save_csv(X, path):
    pts = np.asarray(getattr(X, "points", X), dtype=float)
    with open(Path(path), "w", encoding="utf-8") as fh:
        for row in pts:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
