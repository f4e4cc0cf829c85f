"""Command-line entry point: ``parallax {analyze,diagram,perturb-test,serve-model}``.

Exit codes: 0 matched (or a passing stability suite), 2 mismatched,
3 inconclusive, 1 for any error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

from . import __version__
from .analysis import AnalysisConfig, analyze, rips_diagram
from .exceptions import ParallaxError
from .geometry import load_csv
from .model import load_model, serve_model
from .perturb import EUCLIDEAN_NOTE, run_stability_suite
from .report import (
    build_report,
    diagram_to_dict,
    dumps,
    save_diagram_svg,
    sha256_file,
    stability_report,
    write_json,
)

log = logging.getLogger("parallax")

EXIT_ERROR = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def _common(p, model=True):
    p.add_argument("--data", required=True, help="dataset CSV, one point per line")
    if model:
        p.add_argument("--model", required=True, help="model spec JSON")
    p.add_argument("--out", help="output path (default: standard output)")
    p.add_argument("--max-dim", type=int, choices=(1, 2), default=1, help="highest homology dimension")
    p.add_argument("--max-radius", type=_nonneg_float, default=math.inf, help="drop edges above this radius")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=1, help="worker cap for model evaluation")
    p.add_argument("--diameter", action="store_true", help="report diameters instead of radii")
    p.add_argument("--segment-samples", type=int, default=9)
    p.add_argument("--disk-steps", type=_positive_int, default=16)
    p.add_argument("--disk-samples", type=_positive_int, default=64)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="parallax", description="Geometric matching of membership models against point clouds.")
    parser.add_argument("--version", action="version", version=f"parallax {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="full assessment; exit code reflects the verdict")
    _common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("diagram", help="Rips persistence diagram as JSON and SVG")
    _common(p, model=False)
    p.add_argument("--svg", help="SVG path (default: --out with .svg suffix)")
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("perturb-test", help="randomized stability suites")
    _common(p)
    p.add_argument("--kappa", type=_nonneg_float, required=True)
    p.add_argument("--trials", type=_positive_int, default=50)
    p.set_defaults(func=cmd_perturb_test)

    p = sub.add_parser("serve-model", help="answer the external-model protocol on stdin/stdout")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_serve_model)
    return parser


def _config(args) -> AnalysisConfig:
    return AnalysisConfig(
        max_homology_dim=args.max_dim,
        max_radius=args.max_radius,
        segment_samples=args.segment_samples,
        disk_steps=args.disk_steps,
        disk_samples=args.disk_samples,
        seed=args.seed,
        n_jobs=args.threads,
    )


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_analyze(args) -> int:
    X = load_csv(args.data)
    with load_model(args.model) as model:
        result = analyze(X, model, _config(args))
        spec = model.to_spec()
    report = build_report(
        result,
        dataset_digest=sha256_file(args.data),
        model_digest=sha256_file(args.model),
        diameter=args.diameter,
        model_spec=spec,
    )
    _emit(dumps(report), args.out)
    v = result.verdict
    print(f"verdict: {v.status} ({', '.join(v.reasons)})", file=sys.stderr)
    return v.exit_code


def cmd_diagram(args) -> int:
    X = load_csv(args.data)
    diag = rips_diagram(X, args.max_dim, args.max_radius)
    doc = {
        "tool": {"name": "parallax", "version": __version__},
        "dataset_sha256": sha256_file(args.data),
        "diagram": diagram_to_dict(diag, args.diameter),
    }
    _emit(dumps(doc), args.out)
    svg = args.svg or (str(Path(args.out).with_suffix(".svg")) if args.out else None)
    if svg:
        save_diagram_svg(diag, svg, diameter=args.diameter, title=Path(args.data).name)
    return 0


def cmd_perturb_test(args) -> int:
    X = load_csv(args.data)
    cfg = _config(args)
    with load_model(args.model) as model:
        suite = run_stability_suite(X, model, args.kappa, args.trials, seed=args.seed, config=cfg)
    report = stability_report(suite, args.kappa, args.seed, EUCLIDEAN_NOTE)
    if args.out:
        write_json(report, args.out)
    print(
        f"perturb-test: {suite.reason}; {suite.failures} failures, "
        f"matching-trial skip fraction {suite.hm_skip_fraction:.2f} ({EUCLIDEAN_NOTE})",
        file=sys.stderr,
    )
    return 0 if suite.passed else EXIT_ERROR


def cmd_serve_model(args) -> int:
    model = load_model(args.model)
    return serve_model(model, sys.stdin, sys.stdout)


def _setup_logging():
    level = os.environ.get("PARALLAX_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParallaxError, OSError, ValueError) as exc:
        print(f"parallax: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
