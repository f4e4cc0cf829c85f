"""Randomized checks of the perturbation-stability guarantees.

The harness assumes Euclidean ambient space (the inscribed-ball bound on
``lambda_sup`` is only claimed there). Trials whose hypotheses fail are
skipped with a reason, never counted as failures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import AnalysisConfig, rips_diagram
from .complex import PathSpec, build_edge_table, flag_expand, path_filtration
from .exceptions import InputError
from .geometry import Correspondence, PointCloud, perturb_pointwise, segment_samples
from .homology import bottleneck, persistence
from .matching import INF, check_lsm, homological_match, lambda_hi, lambda_scales
from .model import PerceptionModel, lambda_ball_lower, validate_model_contains
from .probing import build_parallax_table

__all__ = [
    "Check",
    "StabilityTrialRecord",
    "HMBaseline",
    "SuiteResult",
    "verify_k_perturbation",
    "verify_rips_stability",
    "verify_hm_stability",
    "hm_baseline",
    "run_stability_suite",
]

TOL = 1e-9
EUCLIDEAN_NOTE = "ambient space assumed Euclidean"


@dataclass(frozen=True)
class Check:
    name: str
    bound: float
    observed: float
    passed: bool


@dataclass
class StabilityTrialRecord:
    seed: int
    kappa: float
    checks: list = field(default_factory=list)
    skipped: bool = False
    skip_reason: str | None = None

    @property
    def passed(self) -> bool:
        return not self.skipped and all(c.passed for c in self.checks)

    @property
    def failed(self) -> bool:
        return not self.skipped and not all(c.passed for c in self.checks)

    def add(self, name, bound, observed, tol=TOL):
        self.checks.append(Check(name, float(bound), float(observed), bool(observed <= bound + tol)))

    def skip(self, reason):
        self.skipped = True
        self.skip_reason = reason
        return self


def verify_k_perturbation(X: PointCloud, Xp: PointCloud, corr: Correspondence, model: PerceptionModel, scheme=("uniform", 9)):
    """Probe every segment ``x -- f(x)`` (and ``f(x)`` itself) for membership.

    Returns ``(True, None)`` or ``(False, (i, j))`` for the first offending pair.
    A segment inside the model is a model path of length at most ``kappa``.
    """
    bad = corr.check(X, Xp)
    if bad:
        return False, bad[0]
    for i, j in corr.pairs:
        x, y = X[i], Xp[j]
        if np.array_equal(x, y):
            continue
        pts = np.vstack([segment_samples(x, y, scheme), y[None, :]])
        if not model.contains(pts).all():
            return False, (i, j)
    return True, None


def _radius_matrix(P):
    diff = P[:, None, :] - P[None, :, :]
    return 0.5 * np.sqrt((diff**2).sum(-1))


def verify_rips_stability(X: PointCloud, Xp: PointCloud, kappa: float, max_dim: int = 1, corr=None, seed=0):
    """Edgewise radius distortion and per-dimension bottleneck distance, both bounded by ``kappa``."""
    corr = corr or Correspondence.identity(len(X), kappa)
    order = np.array([j for _, j in sorted(corr.pairs)])
    rec = StabilityTrialRecord(seed, kappa)
    moved = Xp.points[order]
    rec.add("edge-radius-distortion", kappa, np.abs(_radius_matrix(X.points) - _radius_matrix(moved)).max())
    d1 = rips_diagram(X, max_dim)
    d2 = rips_diagram(Xp, max_dim)
    for k in range(max_dim + 1):
        rec.add(f"bottleneck-H{k}", kappa, bottleneck(d1, d2, k))
    return rec


@dataclass
class HMBaseline:
    """Scales and diagrams of the unperturbed pair, shared by all trials."""

    lam: float
    delta: float
    omega: float
    lambda_ball: float
    lambda_sup: float

    @property
    def matched(self) -> bool:
        return math.isfinite(self.delta)


def _path_diagram(edges, table, path, max_dim):
    return persistence(flag_expand(edges, path_filtration(edges, table, path), max_dim + 1), validate=False)


def hm_baseline(X: PointCloud, model: PerceptionModel, config: AnalysisConfig | None = None) -> HMBaseline:
    config = config or AnalysisConfig()
    edges = build_edge_table(X, config.max_radius)
    table = build_parallax_table(X, model, config.probe_config(), edges=edges)
    lam_lo, lam_sup = lambda_scales(table)
    lam_ball = lambda_ball_lower(X, model, config.ball_directions, config.seed, config.ball_tol)
    if not math.isfinite(lam_sup):
        return HMBaseline(lam_lo, INF, INF, lam_ball, lam_sup)
    diag_R = rips_diagram(X, config.max_homology_dim, edges=edges)
    diag_L = _path_diagram(edges, table, PathSpec.inflexible(), config.max_homology_dim)
    lam_hi, _ = lambda_hi(diag_R, diag_L, None, lam_lo, lam_sup, filtration_values=edges.rho)
    return HMBaseline(lam_lo, lam_hi, INF, lam_ball, lam_sup)


def verify_hm_stability(
    X: PointCloud,
    Xp: PointCloud,
    kappa: float,
    model: PerceptionModel,
    config: AnalysisConfig | None = None,
    baseline: HMBaseline | None = None,
    corr=None,
    seed=0,
) -> StabilityTrialRecord:
    """Check that matching of ``(X, K)`` at ``(lam, delta, omega)`` survives as
    ``(lam - kappa, delta - kappa, omega + kappa)`` matching of ``(X', K)``.

    The baseline uses ``(lambda_lo, lambda_hi, inf)``. Also checks
    ``lambda_ball / 2 - kappa <= lambda_sup(X')``.
    """
    config = config or AnalysisConfig()
    baseline = baseline or hm_baseline(X, model, config)
    corr = corr or Correspondence.identity(len(X), kappa)
    rec = StabilityTrialRecord(seed, kappa)
    if not baseline.matched:
        return rec.skip("baseline pair is not homologically matched")
    if not kappa < 0.5 * baseline.lambda_ball:
        return rec.skip("kappa >= lambda_ball / 2")
    if not validate_model_contains(model, Xp).ok:
        return rec.skip("perturbed data not interior to the model")
    ok, _ = verify_k_perturbation(X, Xp, corr, model)
    if not ok:
        return rec.skip("not a model perturbation")

    lam = baseline.lam - kappa
    edges = build_edge_table(Xp, config.max_radius)
    table = build_parallax_table(Xp, model, config.probe_config(), edges=edges, validate=False)
    if not check_lsm(table, lam):
        return rec.skip("perturbed pair not locally matched at lam - kappa")
    _, lam_sup_p = lambda_scales(table)
    rec.add("lambda-sup-lower-bound", lam_sup_p, 0.5 * baseline.lambda_ball - kappa)

    diag_R = rips_diagram(Xp, config.max_homology_dim, edges=edges)
    delta = baseline.delta - kappa
    omega = baseline.omega + kappa
    if lam > delta:
        return rec.skip("delta - kappa below lam - kappa")
    # matching needs only some path; try the strict one, then one relaxed by 2 kappa
    paths = [PathSpec.inflexible()]
    if kappa > 0:
        paths.append(PathSpec.piecewise_linear([(0.0, 0.0), (2 * kappa, 2 * kappa)]))
    violations = None
    for path in paths:
        diag_L = _path_diagram(edges, table, path, config.max_homology_dim)
        rep = homological_match(diag_R, diag_L, None, max(lam, 0.0), max(delta, max(lam, 0.0)), omega)
        n = len(rep.violating)
        violations = n if violations is None else min(violations, n)
        if n == 0:
            break
    rec.add("hm-violations", 0, violations, tol=0)
    return rec


@dataclass
class SuiteResult:
    rips: list
    hm: list

    @property
    def failures(self) -> int:
        return sum(r.failed for r in self.rips + self.hm)

    @property
    def hm_skip_fraction(self) -> float:
        return sum(r.skipped for r in self.hm) / len(self.hm) if self.hm else 0.0

    @property
    def passed(self) -> bool:
        vacuous = bool(self.hm) and self.hm_skip_fraction == 1.0
        return self.failures == 0 and not vacuous

    @property
    def reason(self) -> str:
        if self.failures:
            return "trial-failures"
        if self.hm and self.hm_skip_fraction == 1.0:
            return "all-trials-skipped"
        return "ok"


def run_stability_suite(
    X: PointCloud,
    model: PerceptionModel | None,
    kappa: float,
    trials: int,
    seed: int = 0,
    config: AnalysisConfig | None = None,
    hm_kappa: float | None = None,
    hm_trials: int | None = None,
) -> SuiteResult:
    """Rips interleaving trials at ``kappa`` and matching-stability trials at ``hm_kappa``.

    Trial ``t`` draws its perturbation from a generator seeded by ``(seed, t)``.
    Matching trials are skipped entirely when ``model`` is None.
    """
    if trials < 0:
        raise InputError("trials must be nonnegative")
    config = config or AnalysisConfig(seed=seed)
    hm_kappa = kappa if hm_kappa is None else hm_kappa
    hm_trials = trials if hm_trials is None else hm_trials
    rips = []
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        Xp, corr = perturb_pointwise(X, kappa, rng)
        rips.append(verify_rips_stability(X, Xp, kappa, config.max_homology_dim, corr, seed=t))
    hm = []
    if model is not None and hm_trials:
        baseline = hm_baseline(X, model, config)
        for t in range(hm_trials):
            rng = np.random.default_rng([seed, 1_000_003, t])
            Xp, corr = perturb_pointwise(X, hm_kappa, rng)
            hm.append(verify_hm_stability(X, Xp, hm_kappa, model, config, baseline, corr, seed=t))
    return SuiteResult(rips, hm)
