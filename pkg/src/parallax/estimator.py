"""Estimator-style wrappers around the analysis pipeline."""

from __future__ import annotations

import math

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .analysis import AnalysisConfig, analyze, rips_diagram
from .geometry import PointCloud
from .report import build_report

__all__ = ["ParallaxAnalyzer", "RipsPersistence"]


def _cloud(X) -> PointCloud:
    return PointCloud(check_array(X, dtype=float, ensure_min_samples=2))


class RipsPersistence(BaseEstimator):
    """Rips persistence of a point cloud (radius convention).

    Parameters
    ----------
    max_homology_dim : int, default=1
        Highest homology dimension reported.
    max_radius : float, default=inf
        Edges longer than twice this value are left out.

    Attributes
    ----------
    diagram_ : PersistenceDiagram
    n_features_in_ : int
    """

    def __init__(self, max_homology_dim=1, max_radius=math.inf):
        self.max_homology_dim = max_homology_dim
        self.max_radius = max_radius

    def fit(self, X, y=None):
        cloud = _cloud(X)
        self.n_features_in_ = cloud.dim
        self.diagram_ = rips_diagram(cloud, self.max_homology_dim, self.max_radius)
        return self

    def transform(self, X):
        """Diagram of ``X``; the whole cloud is one observation."""
        check_is_fitted(self, "diagram_")
        return rips_diagram(_cloud(X), self.max_homology_dim, self.max_radius)

    def fit_transform(self, X, y=None):
        return self.fit(X).diagram_


class ParallaxAnalyzer(BaseEstimator):
    """Decide whether a membership model geometrically matches a dataset.

    Parameters mirror :class:`~parallax.analysis.AnalysisConfig`; ``model``
    is any :class:`~parallax.model.PerceptionModel`.

    Attributes
    ----------
    result_ : AnalysisResult
    diagram_ : PersistenceDiagram
        Ambient Rips diagram of the fitted data.
    table_ : ParallaxEdgeTable
    scales_ : ScaleReport
    verdict_ : Verdict
    features_ : list of Dot
    """

    def __init__(
        self,
        model=None,
        max_homology_dim=1,
        max_radius=math.inf,
        segment_samples=9,
        include_barycenter=True,
        probe_disks=True,
        disk_steps=16,
        disk_samples=64,
        ball_directions=64,
        gap_factor=3.0,
        seed=0,
        n_jobs=1,
    ):
        self.model = model
        self.max_homology_dim = max_homology_dim
        self.max_radius = max_radius
        self.segment_samples = segment_samples
        self.include_barycenter = include_barycenter
        self.probe_disks = probe_disks
        self.disk_steps = disk_steps
        self.disk_samples = disk_samples
        self.ball_directions = ball_directions
        self.gap_factor = gap_factor
        self.seed = seed
        self.n_jobs = n_jobs

    def _config(self):
        return AnalysisConfig(
            max_homology_dim=self.max_homology_dim,
            max_radius=self.max_radius,
            segment_samples=self.segment_samples,
            include_barycenter=self.include_barycenter,
            probe_disks=self.probe_disks,
            disk_steps=self.disk_steps,
            disk_samples=self.disk_samples,
            ball_directions=self.ball_directions,
            gap_factor=self.gap_factor,
            seed=self.seed,
            n_jobs=self.n_jobs,
        )

    def fit(self, X, y=None):
        if self.model is None:
            raise ValueError("ParallaxAnalyzer needs a model")
        cloud = _cloud(X)
        self.n_features_in_ = cloud.dim
        res = analyze(cloud, self.model, self._config())
        self.result_ = res
        self.diagram_ = res.diagrams["rips"]
        self.table_ = res.table
        self.scales_ = res.scales
        self.verdict_ = res.verdict
        self.features_ = res.features
        return self

    def report(self, diameter=False) -> dict:
        check_is_fitted(self, "result_")
        return build_report(self.result_, diameter=diameter, model_spec=self.model.to_spec())

    @property
    def matched_(self) -> bool:
        check_is_fitted(self, "verdict_")
        return self.verdict_.status == "matched"
