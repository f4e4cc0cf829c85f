"""Rips / flag complexes and single-parameter paths through the parallax bifiltration.

All scales use the radius convention: an edge enters the ambient Rips
filtration at half the Euclidean length of its segment.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .exceptions import InputError, StructuralError
from .geometry import PointCloud

__all__ = ["EdgeTable", "FilteredComplex", "PathSpec", "build_edge_table", "flag_expand", "path_filtration"]


@dataclass(frozen=True)
class EdgeTable:
    """Edges ``(i[k], j[k])`` with ``i < j`` and radius ``rho[k]``, sorted by (rho, i, j)."""

    i: np.ndarray
    j: np.ndarray
    rho: np.ndarray
    n_points: int
    max_radius: float = np.inf

    def __len__(self):
        return len(self.rho)

    def pairs(self):
        return list(zip(self.i.tolist(), self.j.tolist()))

    def index(self) -> dict:
        return {e: k for k, e in enumerate(self.pairs())}


def build_edge_table(X: PointCloud, max_radius: float = np.inf) -> EdgeTable:
    if len(X) < 2:
        raise InputError("need at least two points to build edges")
    if not max_radius > 0:
        raise InputError("max_radius must be positive")
    iu, ju = np.triu_indices(len(X), 1)
    diff = X.points[iu] - X.points[ju]
    rho = 0.5 * np.sqrt((diff**2).sum(-1))
    keep = rho <= max_radius
    iu, ju, rho = iu[keep], ju[keep], rho[keep]
    order = np.lexsort((ju, iu, rho))
    return EdgeTable(iu[order], ju[order], rho[order], len(X), float(max_radius))


@dataclass(frozen=True)
class FilteredComplex:
    """A flag complex with one filtration value per simplex, in reduction order.

    ``simplices`` are ascending vertex tuples, sorted by (value, dim, tuple).
    ``max_dim`` is the largest simplex dimension that was expanded.
    """

    simplices: tuple
    values: np.ndarray
    max_dim: int

    def __len__(self):
        return len(self.simplices)

    def dims(self):
        return [len(s) - 1 for s in self.simplices]

    def validate(self):
        """Raise ``StructuralError`` unless the complex is face-closed and sorted."""
        pos = {}
        prev = None
        for k, (s, v) in enumerate(zip(self.simplices, self.values)):
            if tuple(sorted(s)) != tuple(s) or len(set(s)) != len(s):
                raise StructuralError(f"simplex {s} is not an ascending vertex tuple")
            key = (float(v), len(s) - 1, tuple(s))
            if prev is not None and key < prev:
                raise StructuralError(f"simplex {s} is out of reduction order")
            prev = key
            if len(s) > 1:
                for face in combinations(s, len(s) - 1):
                    if face not in pos:
                        raise StructuralError(f"face {face} of {s} is missing or comes later")
                    if self.values[pos[face]] > v:
                        raise StructuralError(f"face {face} of {s} has a larger value")
            if s in pos:
                raise StructuralError(f"simplex {s} listed twice")
            pos[s] = k
        return self

    def count_by_dim(self):
        counts = [0] * (self.max_dim + 1)
        for s in self.simplices:
            counts[len(s) - 1] += 1
        return counts


def flag_expand(edges: EdgeTable, values=None, max_dim: int = 2) -> FilteredComplex:
    """Clique complex of the finite-valued edges, up to simplices of dimension ``max_dim``.

    ``values`` assigns each edge a filtration value in ``[0, inf]`` (default:
    the Rips radii). Edges valued ``inf`` are left out together with their
    cofaces. Vertices enter at 0 and each simplex enters at the max of its edges.
    """
    if max_dim < 1:
        raise InputError("max_dim must be at least 1")
    vals = edges.rho if values is None else np.asarray(values, dtype=float)
    if vals.shape != edges.rho.shape:
        raise InputError("one filtration value per edge is required")
    if np.any(np.isnan(vals)) or np.any(vals < 0):
        raise InputError("edge filtration values must lie in [0, inf]")

    finite = np.isfinite(vals)
    ev = {}
    nbrs = [set() for _ in range(edges.n_points)]
    for a, b, v in zip(edges.i[finite].tolist(), edges.j[finite].tolist(), vals[finite].tolist()):
        ev[(a, b)] = v
        nbrs[a].add(b)

    entries = [(0.0, 0, (v,)) for v in range(edges.n_points)]
    entries.extend((v, 1, e) for e, v in ev.items())

    # grow cliques one vertex at a time, always appending a larger vertex
    level = [(e, v, nbrs[e[0]] & nbrs[e[1]]) for e, v in ev.items()]
    for d in range(2, max_dim + 1):
        nxt = []
        for simplex, value, common in level:
            top = simplex[-1]
            for w in sorted(c for c in common if c > top):
                val = value
                for a in simplex:
                    ew = ev[(a, w)]
                    if ew > val:
                        val = ew
                s = simplex + (w,)
                entries.append((val, d, s))
                if d < max_dim:
                    nxt.append((s, val, common & nbrs[w]))
        level = nxt

    entries.sort()
    return FilteredComplex(
        tuple(e[2] for e in entries),
        np.array([e[0] for e in entries], dtype=float),
        max_dim,
    )


@dataclass(frozen=True)
class PathSpec:
    """A Rips-like path ``alpha -> (alpha, eps(alpha))`` through the bifiltration.

    ``kind`` is ``"inflexible"`` (eps = 0), ``"diagonal"`` (eps = alpha) or
    ``"piecewise_linear"``; the last interpolates ``breakpoints`` linearly,
    starts at (0, 0) and stays constant after the final breakpoint.
    """

    kind: str
    breakpoints: tuple = ()

    def __post_init__(self):
        if self.kind not in ("inflexible", "diagonal", "piecewise_linear"):
            raise InputError(f"unknown path kind {self.kind!r}")
        if self.kind != "piecewise_linear":
            return
        pts = [(float(a), float(e)) for a, e in self.breakpoints]
        if not pts:
            raise InputError("piecewise-linear path needs breakpoints")
        if pts[0][0] > 0:
            pts.insert(0, (0.0, 0.0))
        if pts[0] != (0.0, 0.0):
            raise InputError("path must satisfy eps(0) = 0")
        for (a0, e0), (a1, e1) in zip(pts, pts[1:]):
            if a1 < a0:
                raise InputError("breakpoint scales must be nondecreasing")
            if e1 < e0:
                raise InputError("eps must be nondecreasing along the path")
        if any(e < 0 for _, e in pts):
            raise InputError("eps must be nonnegative")
        object.__setattr__(self, "breakpoints", tuple(pts))

    @classmethod
    def inflexible(cls):
        return cls("inflexible")

    @classmethod
    def diagonal(cls):
        return cls("diagonal")

    @classmethod
    def piecewise_linear(cls, breakpoints):
        return cls("piecewise_linear", tuple(breakpoints))

    def eps(self, t: float) -> float:
        if self.kind == "inflexible":
            return 0.0
        if self.kind == "diagonal":
            return float(t)
        bp = self.breakpoints
        if t >= bp[-1][0]:
            return bp[-1][1]
        # upper value at a vertical jump
        best = 0.0
        for (a0, e0), (a1, e1) in zip(bp, bp[1:]):
            if a0 <= t <= a1:
                val = e1 if a1 == a0 else e0 + (e1 - e0) * (t - a0) / (a1 - a0)
                best = max(best, val)
        return best

    def first_scale_reaching(self, g: float) -> float:
        """``min {t : eps(t) >= g}``, or ``inf`` if eps never gets there."""
        if g <= 0:
            return 0.0
        if self.kind == "inflexible":
            return np.inf
        if self.kind == "diagonal":
            return float(g)
        bp = self.breakpoints
        for (a0, e0), (a1, e1) in zip(bp, bp[1:]):
            if e1 >= g:
                if e0 >= g or a1 == a0:
                    return a0 if e0 >= g else a1
                return a0 + (g - e0) * (a1 - a0) / (e1 - e0)
        return np.inf

    def first_positive_scale(self) -> float:
        """``inf {t : eps(t) > 0}``."""
        if self.kind == "inflexible":
            return np.inf
        if self.kind == "diagonal":
            return 0.0
        bp = self.breakpoints
        for (a0, e0), (a1, e1) in zip(bp, bp[1:]):
            if e1 > 0:
                return a0 if e0 > 0 or a1 > a0 else a1
        return np.inf

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == "piecewise_linear":
            d["breakpoints"] = [list(p) for p in self.breakpoints]
        return d


def path_filtration(edges: EdgeTable, parallax, path: PathSpec) -> np.ndarray:
    """Entry scale ``min {t : e in P_(t, eps(t))}`` of every edge along ``path``.

    ``parallax`` supplies per-edge arrays ``rho_V``, ``rho_K_lower`` and
    ``blocked`` aligned with ``edges``. A blocked edge has strictly positive
    distortion even when the certified lower bound is zero, so it needs
    ``eps(t) > 0``.
    """
    rho_v = np.asarray(parallax.rho_V, dtype=float)
    rho_k = np.asarray(parallax.rho_K_lower, dtype=float)
    blocked = np.asarray(parallax.blocked, dtype=bool)
    if rho_v.shape != edges.rho.shape or not np.allclose(rho_v, edges.rho, rtol=0, atol=1e-12):
        raise InputError("parallax table and edge table refer to different edges")
    if path.kind == "inflexible":
        return np.where(blocked, np.inf, rho_v)
    if path.kind == "diagonal":
        return rho_k.copy()
    out = np.empty_like(rho_v)
    t_pos = path.first_positive_scale()
    for k in range(len(rho_v)):
        g = rho_k[k] - rho_v[k]
        if not blocked[k]:
            need = 0.0
        elif g > 0:
            need = path.first_scale_reaching(g)
        else:
            need = t_pos
        out[k] = max(rho_k[k], need)
    return out
