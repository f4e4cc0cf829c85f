"""Edge probing: segment membership tests and transverse-disk distortion bounds.

Probing is one-sided. An edge is *blocked* only when a probed point of its
segment is outside the model; otherwise the table records that no blocking
was found at the configured budget. Disk bounds under-estimate the true
K-radius of an edge.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .complex import EdgeTable, build_edge_table
from .exceptions import InputError, OracleError, PreconditionError
from .geometry import PointCloud, disk_rim_samples, segment_samples, transverse_disk_samples
from .model import PerceptionModel, validate_model_contains

log = logging.getLogger(__name__)

__all__ = [
    "EdgeStatus",
    "DiskBound",
    "ProbeConfig",
    "ParallaxEdgeTable",
    "classify_edge_segment",
    "bound_edge_disk",
    "build_parallax_table",
]

_CHUNK = 200_000


class EdgeStatus(str, Enum):
    UNBLOCKED = "unblocked_evidence"
    BLOCKED = "blocked"


@dataclass(frozen=True)
class DiskBound:
    rho_K_lower: float
    epsilon_lower: float
    blocking_radius: float
    queries: int = 0


@dataclass(frozen=True)
class ProbeConfig:
    """Probe budgets.

    ``segment_samples`` interior points at ``i/(m+1)`` plus (optionally) the
    barycenter; ``segment_samples=0`` probes the barycenter alone. Disk radii
    run geometrically over ``disk_steps`` values from ``disk_min_frac`` to
    ``disk_max_frac`` times the edge radius.
    """

    segment_samples: int = 9
    include_barycenter: bool = True
    probe_disks: bool = True
    disk_steps: int = 16
    disk_samples: int = 64
    disk_min_frac: float = 0.05
    disk_max_frac: float = 1.0
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.segment_samples < 0:
            raise InputError("segment_samples must be >= 0")
        if self.segment_samples == 0 and not self.include_barycenter:
            raise InputError("no segment probes configured")
        if self.disk_steps < 1 or self.disk_samples < 1:
            raise InputError("disk_steps and disk_samples must be positive")
        if not 0 < self.disk_min_frac <= self.disk_max_frac:
            raise InputError("need 0 < disk_min_frac <= disk_max_frac")

    def segment_scheme(self):
        if self.segment_samples == 0:
            return "barycenter"
        return ("uniform", self.segment_samples)

    def disk_schedule(self, rho):
        if self.disk_steps == 1:
            return np.array([self.disk_max_frac * rho])
        return rho * np.geomspace(self.disk_min_frac, self.disk_max_frac, self.disk_steps)


@dataclass
class ParallaxEdgeTable:
    """Per-edge parallax estimates, aligned with ``edges``.

    ``rho_K_lower`` equals ``sqrt(rho_V**2 + blocking_radius**2)`` on blocked
    edges and ``rho_V`` elsewhere. ``witness`` holds an outside point of the
    segment for every blocked edge (NaN rows otherwise).
    """

    edges: EdgeTable
    blocked: np.ndarray
    blocking_radius: np.ndarray
    witness: np.ndarray
    segment_queries: int = 0
    disk_queries: int = 0
    config: ProbeConfig = field(default_factory=ProbeConfig)

    @property
    def rho_V(self) -> np.ndarray:
        return self.edges.rho

    @property
    def rho_K_lower(self) -> np.ndarray:
        return np.where(self.blocked, np.sqrt(self.edges.rho**2 + self.blocking_radius**2), self.edges.rho)

    @property
    def epsilon_lower(self) -> np.ndarray:
        return self.rho_K_lower - self.edges.rho

    def status(self, k) -> EdgeStatus:
        return EdgeStatus.BLOCKED if self.blocked[k] else EdgeStatus.UNBLOCKED

    def __len__(self):
        return len(self.edges)

    @property
    def n_blocked(self) -> int:
        return int(self.blocked.sum())


def _segment_points(x, y, scheme, include_barycenter):
    pts = segment_samples(x, y, scheme)
    if include_barycenter and scheme != "barycenter":
        pts = np.vstack([segment_samples(x, y, "barycenter"), pts])
    return pts


def classify_edge_segment(x, y, model: PerceptionModel, scheme="barycenter") -> EdgeStatus:
    """Blocked iff some probed point of the segment ``x -- y`` is outside the model."""
    pts = segment_samples(x, y, scheme)
    return EdgeStatus.BLOCKED if not model.contains(pts).all() else EdgeStatus.UNBLOCKED


def _disk_probe_points(x, y, r, samples, rng):
    inner_rng, rim_rng = rng.spawn(2)
    rim = 2 if len(x) == 2 else max(2, samples // 2)
    return np.vstack(
        [
            transverse_disk_samples(x, y, r, samples, inner_rng),
            disk_rim_samples(x, y, r, rim, rim_rng),
        ]
    )


def bound_edge_disk(x, y, model: PerceptionModel, r_schedule, samples_per_disk: int, rng) -> DiskBound:
    """Grow transverse disks along ``r_schedule`` while they miss the model.

    Returns the lower bounds ``sqrt(rho_V**2 + r**2)`` and its excess over
    ``rho_V`` for the last radius ``r`` whose probes were all outside; when
    the first disk already touches the model, no distortion is certified.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    schedule = np.asarray(r_schedule, dtype=float)
    if schedule.size == 0:
        raise InputError("empty disk schedule")
    if np.any(np.diff(schedule) <= 0) or schedule[0] <= 0:
        raise InputError("disk schedule must be positive and increasing")
    rng = np.random.default_rng(rng)
    rho = 0.5 * float(np.linalg.norm(y - x))
    step_rngs = rng.spawn(len(schedule))
    r_ok = 0.0
    queries = 0
    for r, srng in zip(schedule, step_rngs):
        pts = _disk_probe_points(x, y, r, samples_per_disk, srng)
        queries += len(pts)
        if model.contains(pts).any():
            break
        r_ok = float(r)
    rho_k = float(np.sqrt(rho**2 + r_ok**2))
    return DiskBound(rho_k, rho_k - rho, r_ok, queries)


def _evaluate(model, pts, n_jobs):
    if len(pts) == 0:
        return np.zeros(0, dtype=bool)
    chunks = [pts[s : s + _CHUNK] for s in range(0, len(pts), _CHUNK)]
    if n_jobs is None or n_jobs <= 1 or len(chunks) == 1:
        return np.concatenate([model.contains(c) for c in chunks])
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return np.concatenate(list(pool.map(model.contains, chunks)))


def _edge_rng(seed, i, j):
    return np.random.default_rng([int(seed), int(i), int(j)])


def build_parallax_table(
    X: PointCloud,
    model: PerceptionModel,
    config: ProbeConfig | None = None,
    edges: EdgeTable | None = None,
    validate: bool = True,
) -> ParallaxEdgeTable:
    """Classify every Rips edge by segment probing, then bound blocked edges with disks.

    Probes of all edges are evaluated in large batches. Disk probing advances
    one schedule step at a time for all still-growing edges. Each edge draws
    from its own generator seeded by ``(seed, i, j)``, so results do not
    depend on batching or thread count.
    """
    config = config or ProbeConfig()
    if edges is None:
        edges = build_edge_table(X)
    if validate:
        rep = validate_model_contains(model, X)
        if not rep.ok:
            raise PreconditionError(f"data points not interior to the model: {rep.offending}")
    m = len(edges)
    dim = X.dim
    pts_x = X.points[edges.i]
    pts_y = X.points[edges.j]

    scheme = config.segment_scheme()
    per_edge = [_segment_points(a, b, scheme, config.include_barycenter) for a, b in zip(pts_x, pts_y)]
    counts = np.array([len(p) for p in per_edge], dtype=int)
    blocked = np.zeros(m, dtype=bool)
    witness = np.full((m, dim), np.nan)
    seg_q = 0
    if m:
        allpts = np.vstack(per_edge)
        try:
            inside = _evaluate(model, allpts, config.n_jobs)
        except OracleError as exc:
            raise OracleError(f"segment probing aborted before any of {m} edges were classified: {exc}") from exc
        seg_q = len(allpts)
        offsets = np.concatenate([[0], np.cumsum(counts)])
        for k in range(m):
            seg = inside[offsets[k] : offsets[k + 1]]
            if not seg.all():
                blocked[k] = True
                witness[k] = allpts[offsets[k] + int(np.argmin(seg))]

    radius = np.zeros(m)
    disk_q = 0
    if config.probe_disks and dim >= 2 and blocked.any():
        active = list(np.flatnonzero(blocked))
        schedules = {k: config.disk_schedule(edges.rho[k]) for k in active}
        step_rngs = {
            k: _edge_rng(config.seed, edges.i[k], edges.j[k]).spawn(config.disk_steps) for k in active
        }
        for s in range(config.disk_steps):
            if not active:
                break
            batch = [
                _disk_probe_points(pts_x[k], pts_y[k], schedules[k][s], config.disk_samples, step_rngs[k][s])
                for k in active
            ]
            sizes = [len(b) for b in batch]
            try:
                inside = _evaluate(model, np.vstack(batch), config.n_jobs)
            except OracleError as exc:
                done = m - len(active)
                raise OracleError(
                    f"disk probing aborted at step {s} with {done}/{m} edges finalized: {exc}"
                ) from exc
            disk_q += int(sum(sizes))
            offsets = np.concatenate([[0], np.cumsum(sizes)])
            still = []
            for n, k in enumerate(active):
                if inside[offsets[n] : offsets[n + 1]].any():
                    continue
                radius[k] = schedules[k][s]
                still.append(k)
            active = still

    log.info("probed %d edges: %d blocked, %d segment and %d disk queries", m, int(blocked.sum()), seg_q, disk_q)
    return ParallaxEdgeTable(edges, blocked, radius, witness, seg_q, disk_q, config)
