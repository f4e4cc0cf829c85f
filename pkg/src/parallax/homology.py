"""Persistent homology over Z/2, transition-map kernels and bottleneck distance."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .complex import FilteredComplex
from .exceptions import InputError

__all__ = ["Dot", "PersistenceDiagram", "persistence", "transition_kernel", "bottleneck"]


@dataclass(frozen=True, order=True)
class Dot:
    dim: int
    birth: float
    death: float
    birth_simplex: tuple = field(default=(), compare=True)
    death_simplex: tuple | None = field(default=None, compare=False)

    @property
    def persistence(self) -> float:
        return self.death - self.birth

    @property
    def is_infinite(self) -> bool:
        return not np.isfinite(self.death)

    def scaled(self, factor):
        return Dot(self.dim, self.birth * factor, self.death * factor, self.birth_simplex, self.death_simplex)


@dataclass(frozen=True)
class PersistenceDiagram:
    """Dots per homology dimension; zero-persistence pairs are never stored."""

    dots: tuple
    max_dim: int
    scale: str = "radius"

    def in_dim(self, dim) -> list:
        return [d for d in self.dots if d.dim == dim]

    def dims(self):
        return list(range(self.max_dim + 1))

    def by_birth_simplex(self, dim=None) -> dict:
        return {d.birth_simplex: d for d in self.dots if dim is None or d.dim == dim}

    def as_array(self, dim) -> np.ndarray:
        pts = [(d.birth, d.death) for d in self.in_dim(dim)]
        return np.array(pts, dtype=float).reshape(-1, 2)

    def to_diameter(self) -> "PersistenceDiagram":
        if self.scale == "diameter":
            return self
        return PersistenceDiagram(tuple(d.scaled(2.0) for d in self.dots), self.max_dim, "diameter")

    def __len__(self):
        return len(self.dots)


def _boundary(simplex, index):
    if len(simplex) == 1:
        return set()
    return {index[f] for f in combinations(simplex, len(simplex) - 1)}


def persistence(cx: FilteredComplex, validate: bool = True) -> PersistenceDiagram:
    """Barcode of a filtered complex by column reduction with clearing.

    Dimensions are reduced from the top down; whenever a column of dimension
    ``d`` gets pivot ``i``, column ``i`` of dimension ``d - 1`` is known to
    reduce to zero and is skipped. Dots are reported for dimensions
    ``0 .. cx.max_dim - 1``.
    """
    if validate:
        cx.validate()
    simplices = cx.simplices
    values = cx.values
    index = {s: k for k, s in enumerate(simplices)}
    by_dim = [[] for _ in range(cx.max_dim + 1)]
    for k, s in enumerate(simplices):
        by_dim[len(s) - 1].append(k)

    reduced = {}  # column index -> reduced column
    pivot_col = {}  # pivot row -> column index
    paired_low = {}
    cleared = set()
    for d in range(cx.max_dim, 0, -1):
        for j in by_dim[d]:
            if j in cleared:
                continue
            col = _boundary(simplices[j], index)
            while col:
                low = max(col)
                other = pivot_col.get(low)
                if other is None:
                    break
                col ^= reduced[other]
            if col:
                low = max(col)
                pivot_col[low] = j
                reduced[j] = col
                paired_low[low] = j
                cleared.add(low)

    dots = []
    for d in range(cx.max_dim):
        for i in by_dim[d]:
            if i in reduced:
                continue  # negative simplex
            j = paired_low.get(i)
            birth = float(values[i])
            if j is None:
                dots.append(Dot(d, birth, np.inf, simplices[i], None))
            elif values[j] > birth:
                dots.append(Dot(d, birth, float(values[j]), simplices[i], simplices[j]))
    dots.sort()
    return PersistenceDiagram(tuple(dots), cx.max_dim - 1)


def transition_kernel(diagram: PersistenceDiagram, dim: int, lam: float, delta: float) -> list:
    """Dots alive at ``lam`` that have died by ``delta``: a basis of ker H_lam -> H_delta."""
    if lam > delta:
        raise InputError("transition kernel needs lam <= delta")
    return [d for d in diagram.in_dim(dim) if d.birth <= lam < d.death <= delta]


def _finite_bottleneck(A, B):
    n, m = len(A), len(B)
    if n == 0 and m == 0:
        return 0.0
    pa = (A[:, 1] - A[:, 0]) / 2 if n else np.zeros(0)
    pb = (B[:, 1] - B[:, 0]) / 2 if m else np.zeros(0)
    cross = np.abs(A[:, None, :] - B[None, :, :]).max(-1) if n and m else np.zeros((n, m))
    cands = np.unique(np.concatenate([cross.ravel(), pa, pb, [0.0]]))

    size = n + m
    diag_block = np.ones((m, n), dtype=bool)

    def feasible(c):
        adj = np.zeros((size, size), dtype=bool)
        adj[:n, :m] = cross <= c
        adj[np.arange(n), m + np.arange(n)] = pa <= c
        adj[n + np.arange(m), np.arange(m)] = pb <= c
        adj[n:, m:] = diag_block
        match = maximum_bipartite_matching(csr_matrix(adj), perm_type="column")
        return bool(np.all(match >= 0))

    lo, hi = 0, len(cands) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cands[lo])


def bottleneck(D1: PersistenceDiagram, D2: PersistenceDiagram, dim=None) -> float:
    """Exact bottleneck distance (L-infinity ground metric, diagonal matching allowed).

    Infinite dots only match infinite dots; differing counts give ``inf``.
    With ``dim=None`` the maximum over all dimensions is returned.
    """
    if D1.scale != D2.scale:
        raise InputError("diagrams use different scale conventions")
    if dim is None:
        dims = sorted({d.dim for d in D1.dots} | {d.dim for d in D2.dots})
        return max((bottleneck(D1, D2, k) for k in dims), default=0.0)
    a_inf = sorted(d.birth for d in D1.in_dim(dim) if d.is_infinite)
    b_inf = sorted(d.birth for d in D2.in_dim(dim) if d.is_infinite)
    if len(a_inf) != len(b_inf):
        return np.inf
    inf_cost = max((abs(x - y) for x, y in zip(a_inf, b_inf)), default=0.0)
    A = np.array([(d.birth, d.death) for d in D1.in_dim(dim) if not d.is_infinite]).reshape(-1, 2)
    B = np.array([(d.birth, d.death) for d in D2.in_dim(dim) if not d.is_infinite]).reshape(-1, 2)
    return max(inf_cost, _finite_bottleneck(A, B))
