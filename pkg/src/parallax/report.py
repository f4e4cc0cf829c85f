"""JSON reports and SVG persistence diagrams.

Reports contain no timestamps or host data, so identical inputs and seed
give byte-identical files. Infinite values are written as the string
``"inf"`` and parsed back to ``float("inf")``.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from . import __version__
from .homology import PersistenceDiagram

__all__ = [
    "sha256_file",
    "sha256_json",
    "diagram_to_dict",
    "build_report",
    "stability_report",
    "dumps",
    "loads",
    "write_json",
    "save_diagram_svg",
]


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def sha256_json(obj) -> str:
    return hashlib.sha256(dumps(obj, indent=None).encode()).hexdigest()


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _encode(obj):
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    if obj == "inf":
        return math.inf
    if obj == "-inf":
        return -math.inf
    return obj


def _native(obj):
    # plain dicts, lists, ints and floats; the form that loads() returns
    return _decode(_encode(obj))


def dumps(report: dict, indent=2) -> str:
    return json.dumps(_encode(report), sort_keys=True, indent=indent, allow_nan=False) + ("\n" if indent else "")


def loads(text: str) -> dict:
    return _decode(json.loads(text))


def write_json(report: dict, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(report))


def _dot(d, factor=1.0):
    return {
        "dim": d.dim,
        "birth": d.birth * factor,
        "death": d.death * factor,
        "birth_simplex": list(d.birth_simplex),
        "death_simplex": None if d.death_simplex is None else list(d.death_simplex),
    }


def diagram_to_dict(diag: PersistenceDiagram, diameter=False) -> dict:
    """Per-dimension ``[birth, death]`` lists, e.g. ``{"H0": [[0, inf], ...]}``."""
    f = 2.0 if diameter else 1.0
    out = {"scale": "diameter" if diameter else "radius"}
    for k in diag.dims():
        out[f"H{k}"] = [[d.birth * f, d.death * f] for d in diag.in_dim(k)]
    return out


def _scales(scales, factor):
    return {
        "lambda_ball": scales.lambda_ball * factor,
        "lambda_sup": scales.lambda_sup * factor,
        "lambda_lo": scales.lambda_lo * factor,
        "lambda_hi": scales.lambda_hi * factor,
        "hm_horizon": None if scales.hm_horizon is None else scales.hm_horizon * factor,
    }


def build_report(result, dataset_digest=None, model_digest=None, diameter=False, model_spec=None) -> dict:
    """Machine-readable form of an :class:`~parallax.analysis.AnalysisResult`.

    Scales always appear in both radius and diameter form; diagrams,
    features and certificates use the diameter convention when ``diameter``.
    """
    f = 2.0 if diameter else 1.0
    cfg = result.config.to_dict()
    hm = None
    if result.hm is not None:
        hm = {
            "holds": result.hm.holds,
            "lambda": result.hm.lam * f,
            "delta": result.hm.delta * f,
            "omega": result.hm.omega * f,
            "matched": len(result.hm.matched),
            "violating": [_dot(r, f) for r, _ in result.hm.violating],
        }
    certs = {
        name: [
            {
                "dim": c.dim,
                "birth": c.birth * f,
                "death_R": c.death_R * f,
                "death_path": c.death_path * f,
                "path": c.path,
                "blocking_edge": None if c.blocking_edge is None else list(c.blocking_edge),
                "r_max": c.r_max,  # a geometric length, never doubled
                "certifies_void": c.certifies_void,
            }
            for c in lst
        ]
        for name, lst in result.certificates.items()
    }
    table = result.table
    return _native(
        {
            "tool": {"name": "parallax", "version": __version__},
            "inputs": {
                "dataset_sha256": dataset_digest,
                "model_sha256": model_digest,
                "model": model_spec,
                "config": cfg,
                "seed": result.config.seed,
            },
            "data": {"n_points": result.n_points, "dim": result.dim, "distance_collisions": result.distance_collisions},
            "scale_convention": "diameter" if diameter else "radius",
            "scales": {"radius": _scales(result.scales, 1.0), "diameter": _scales(result.scales, 2.0)},
            "diagrams": {k: diagram_to_dict(v, diameter) for k, v in result.diagrams.items()},
            "features": [_dot(d, f) for d in result.features],
            "homological_match": hm,
            "certificates": certs,
            "verdict": {
                "status": result.verdict.status,
                "reasons": list(result.verdict.reasons),
                "exit_code": result.verdict.exit_code,
                "failing_features": [_dot(d, f) for d in result.verdict.failing_features],
            },
            "probes": {
                "edges": len(table),
                "blocked_edges": table.n_blocked,
                "budget": {
                    "segment_samples": table.config.segment_samples,
                    "include_barycenter": table.config.include_barycenter,
                    "disk_steps": table.config.disk_steps if table.config.probe_disks else 0,
                    "disk_samples": table.config.disk_samples,
                    "ball_directions": result.config.ball_directions,
                },
                "queries": dict(result.queries),
                "note": "unblocked edges mean no blocking was found at this budget",
            },
        }
    )


def stability_report(suite, kappa, seed, note) -> dict:
    def rec(r):
        return {
            "seed": r.seed,
            "kappa": r.kappa,
            "skipped": r.skipped,
            "skip_reason": r.skip_reason,
            "passed": r.passed,
            "checks": [{"name": c.name, "bound": c.bound, "observed": c.observed, "passed": c.passed} for c in r.checks],
        }

    return _native(
        {
            "tool": {"name": "parallax", "version": __version__},
            "kappa": kappa,
            "seed": seed,
            "note": note,
            "passed": suite.passed,
            "reason": suite.reason,
            "failures": suite.failures,
            "hm_skip_fraction": suite.hm_skip_fraction,
            "rips_trials": [rec(r) for r in suite.rips],
            "hm_trials": [rec(r) for r in suite.hm],
        }
    )


_MARKERS = ["o", "^", "s", "D"]


def save_diagram_svg(diag: PersistenceDiagram, path, diameter=False, title=None):
    """Birth-death scatter with the diagonal; infinite dots sit on a dashed top rail."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    f = 2.0 if diameter else 1.0
    finite = [v * f for d in diag.dots for v in (d.birth, d.death) if math.isfinite(v)]
    top = max(finite) if finite else 1.0
    top = top if top > 0 else 1.0
    rail = 1.1 * top
    with matplotlib.rc_context({"svg.hashsalt": "parallax", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        ax.plot([0, rail], [0, rail], color="0.6", lw=0.8)
        ax.axhline(rail, color="0.3", lw=0.8, ls="--")
        ax.text(0.02 * top, rail, "inf", va="bottom", fontsize=8)
        for k in diag.dims():
            dots = diag.in_dim(k)
            if not dots:
                continue
            b = np.array([d.birth for d in dots]) * f
            e = np.array([d.death for d in dots]) * f
            e = np.where(np.isfinite(e), e, rail)
            ax.scatter(b, e, marker=_MARKERS[k % len(_MARKERS)], s=22, label=f"H{k}")
        unit = "diameter" if diameter else "radius"
        ax.set_xlabel(f"birth ({unit})")
        ax.set_ylabel(f"death ({unit})")
        ax.set_xlim(-0.03 * rail, 1.05 * rail)
        ax.set_ylim(-0.03 * rail, 1.08 * rail)
        if title:
            ax.set_title(title)
        ax.legend(loc="lower right")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
