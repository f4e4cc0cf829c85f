"""The full model-vs-dataset assessment.

1. Persistent features of the ambient Rips filtration are picked out by a
   persistence gap.
2. Edge probing yields ``lambda_lo`` / ``lambda_sup``; the inflexible path
   yields ``lambda_hi``.
3. The model matches when every feature is born by ``lambda_lo`` and, along
   the inflexible path, dies after ``lambda_hi``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .complex import PathSpec, build_edge_table, flag_expand, path_filtration
from .exceptions import InputError, PreconditionError
from .geometry import PointCloud, distance_collisions
from .homology import PersistenceDiagram, persistence
from .matching import (
    INF,
    MatchReport,
    ScaleReport,
    check_lsm,
    homological_match,
    lambda_hi,
    lambda_scales,
    void_certificates,
)
from .model import PerceptionModel, lambda_ball_lower, validate_model_contains
from .probing import ParallaxEdgeTable, ProbeConfig, build_parallax_table

log = logging.getLogger(__name__)

MATCHED = "matched"
MISMATCHED = "mismatched"
INCONCLUSIVE = "inconclusive"

__all__ = [
    "AnalysisConfig",
    "AnalysisResult",
    "Verdict",
    "analyze",
    "persistent_features",
    "rips_diagram",
]


@dataclass(frozen=True)
class AnalysisConfig:
    max_homology_dim: int = 1
    max_radius: float = INF
    segment_samples: int = 9
    include_barycenter: bool = True
    probe_disks: bool = True
    disk_steps: int = 16
    disk_samples: int = 64
    disk_min_frac: float = 0.05
    disk_max_frac: float = 1.0
    ball_directions: int = 64
    ball_tol: float = 1e-4
    gap_factor: float = 3.0
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if self.max_homology_dim < 0:
            raise InputError("max_homology_dim must be >= 0")
        if self.gap_factor <= 0:
            raise InputError("gap_factor must be positive")

    def probe_config(self) -> ProbeConfig:
        return ProbeConfig(
            segment_samples=self.segment_samples,
            include_barycenter=self.include_barycenter,
            probe_disks=self.probe_disks,
            disk_steps=self.disk_steps,
            disk_samples=self.disk_samples,
            disk_min_frac=self.disk_min_frac,
            disk_max_frac=self.disk_max_frac,
            seed=self.seed,
            n_jobs=self.n_jobs,
        )

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class Verdict:
    status: str
    reasons: tuple
    failing_features: tuple = ()

    @property
    def exit_code(self) -> int:
        return {MATCHED: 0, MISMATCHED: 2, INCONCLUSIVE: 3}[self.status]


@dataclass
class AnalysisResult:
    config: AnalysisConfig
    n_points: int
    dim: int
    edges: object
    table: ParallaxEdgeTable
    diagrams: dict
    features: list
    scales: ScaleReport
    hm: MatchReport | None
    certificates: dict
    verdict: Verdict
    distance_collisions: int
    queries: dict = field(default_factory=dict)


def rips_diagram(X: PointCloud, max_homology_dim=1, max_radius=INF, edges=None) -> PersistenceDiagram:
    edges = edges if edges is not None else build_edge_table(X, max_radius)
    return persistence(flag_expand(edges, None, max_homology_dim + 1), validate=False)


def persistent_features(diagram: PersistenceDiagram, gap_factor: float = 3.0) -> list:
    """Dots whose persistence exceeds ``gap_factor`` times the median positive finite persistence.

    The median is pooled over all dimensions so that a lone cycle can stand
    out against the merge scale of the components. Infinite dots count as
    features, except for one essential H0 class (the connected data itself).
    """
    finite = [d.persistence for d in diagram.dots if not d.is_infinite and d.persistence > 0]
    threshold = gap_factor * float(np.median(finite)) if finite else 0.0
    out = []
    skipped_essential = False
    for d in diagram.dots:
        if d.is_infinite:
            if d.dim == 0 and not skipped_essential:
                skipped_essential = True
                continue
            out.append(d)
        elif finite and d.persistence > threshold:
            out.append(d)
    return out


def _decide(features, scales, diag_path) -> Verdict:
    if not features:
        return Verdict(INCONCLUSIVE, ("no-persistent-features",))
    if not math.isfinite(scales.lambda_sup):
        return Verdict(MISMATCHED, ("convex-indistinguishable",))
    if scales.lambda_lo == 0:
        return Verdict(MISMATCHED, ("lsm-zero",))
    by_simplex = diag_path.by_birth_simplex()
    failing = []
    reasons = []
    if not math.isfinite(scales.lambda_hi):
        reasons.append("lambda-hi-infinite")
    for f in features:
        p = by_simplex.get(f.birth_simplex) if f.birth <= scales.lambda_lo else None
        if p is None or not p.death > scales.lambda_hi:
            failing.append(f)
    if failing:
        reasons.append("features-outside-quadrant")
        return Verdict(MISMATCHED, tuple(reasons), tuple(failing))
    return Verdict(MATCHED, ("features-in-quadrant",))


def analyze(X: PointCloud, model: PerceptionModel, config: AnalysisConfig | None = None) -> AnalysisResult:
    """Run the whole assessment of ``model`` against ``X``."""
    config = config or AnalysisConfig()
    if len(X) < 2:
        raise InputError("need at least two data points")
    q0 = model.query_count
    rep = validate_model_contains(model, X)
    if not rep.ok:
        raise PreconditionError(f"data points not interior to the model: {rep.offending}")
    q_validate = model.query_count - q0

    cx_dim = config.max_homology_dim + 1
    edges = build_edge_table(X, config.max_radius)
    diag_R = rips_diagram(X, config.max_homology_dim, edges=edges)
    features = persistent_features(diag_R, config.gap_factor)

    table = build_parallax_table(X, model, config.probe_config(), edges=edges, validate=False)
    lam_lo, lam_sup = lambda_scales(table)

    q1 = model.query_count
    lam_ball = lambda_ball_lower(X, model, config.ball_directions, config.seed, config.ball_tol)
    q_ball = model.query_count - q1

    diagrams = {"rips": diag_R}
    for name, path in (("inflexible", PathSpec.inflexible()), ("diagonal", PathSpec.diagonal())):
        vals = path_filtration(edges, table, path)
        diagrams[name] = persistence(flag_expand(edges, vals, cx_dim), validate=False)

    hm = None
    lam_hi, horizon = INF, None
    if math.isfinite(lam_sup):
        assert check_lsm(table, lam_lo)
        lam_hi, horizon = lambda_hi(
            diag_R, diagrams["inflexible"], None, lam_lo, lam_sup, filtration_values=edges.rho
        )
        if math.isfinite(lam_hi):
            hm = homological_match(diag_R, diagrams["inflexible"], None, lam_lo, lam_hi, INF)
    scales = ScaleReport(lam_ball, lam_sup, lam_lo, lam_hi, horizon)

    edge_values = dict(zip(edges.pairs(), edges.rho.tolist()))
    certificates = {}
    for name in ("inflexible", "diagonal"):
        certificates[name] = [
            c
            for k in range(config.max_homology_dim + 1)
            for c in void_certificates(diag_R, diagrams[name], k, lam_lo, name, edge_values)
        ]

    verdict = _decide(features, scales, diagrams["inflexible"])
    log.info("verdict %s (%s)", verdict.status, ", ".join(verdict.reasons))
    queries = {
        "validation": q_validate,
        "segment": table.segment_queries,
        "disk": table.disk_queries,
        "ball": q_ball,
        "total": model.query_count - q0,
    }
    return AnalysisResult(
        config=config,
        n_points=len(X),
        dim=X.dim,
        edges=edges,
        table=table,
        diagrams=diagrams,
        features=features,
        scales=scales,
        hm=hm,
        certificates=certificates,
        verdict=verdict,
        distance_collisions=distance_collisions(X),
        queries=queries,
    )
