"""Geometric matching of black-box membership models against point clouds."""

__version__ = "0.1.0"

from .analysis import AnalysisConfig, AnalysisResult, Verdict, analyze, persistent_features, rips_diagram
from .complex import EdgeTable, FilteredComplex, PathSpec, build_edge_table, flag_expand, path_filtration
from .estimator import ParallaxAnalyzer, RipsPersistence
from .exceptions import (
    DegenerateEdgeError,
    InputError,
    OracleError,
    ParallaxError,
    PreconditionError,
    StructuralError,
)
from .geometry import Correspondence, PointCloud, load_csv, perturb_pointwise, save_csv
from .homology import Dot, PersistenceDiagram, bottleneck, persistence, transition_kernel
from .matching import ScaleReport, homological_match, lambda_hi, lambda_scales, void_certificates
from .model import (
    ExternalModel,
    PerceptionModel,
    model_from_spec,
    load_model,
    validate_model_contains,
    lambda_ball_lower,
)
from .probing import ProbeConfig, build_parallax_table

__all__ = [
    "__version__",
    "AnalysisConfig",
    "AnalysisResult",
    "Verdict",
    "analyze",
    "persistent_features",
    "rips_diagram",
    "EdgeTable",
    "FilteredComplex",
    "PathSpec",
    "build_edge_table",
    "flag_expand",
    "path_filtration",
    "ParallaxAnalyzer",
    "RipsPersistence",
    "DegenerateEdgeError",
    "InputError",
    "OracleError",
    "ParallaxError",
    "PreconditionError",
    "StructuralError",
    "Correspondence",
    "PointCloud",
    "load_csv",
    "perturb_pointwise",
    "save_csv",
    "Dot",
    "PersistenceDiagram",
    "bottleneck",
    "persistence",
    "transition_kernel",
    "ScaleReport",
    "homological_match",
    "lambda_hi",
    "lambda_scales",
    "void_certificates",
    "ExternalModel",
    "PerceptionModel",
    "model_from_spec",
    "load_model",
    "validate_model_contains",
    "lambda_ball_lower",
    "ProbeConfig",
    "build_parallax_table",
]
