"""Membership oracles k: R^n -> {0, 1} and the inscribed-ball scale estimator.

Built-in analytic models evaluate with closed boundaries (``<=``), so that
each model set equals the closure of its interior. External models are
child processes speaking a newline-delimited text protocol::

    engine -> model   PARALLAX-MODEL 1
    model  -> engine  OK <dim>
    engine -> model   EVAL <count>
                      <count lines of dim space-separated coordinates>
    model  -> engine  <count lines, each exactly 0 or 1>
    engine -> model   END          (model exits with status 0)
"""

from __future__ import annotations

import json
import logging
import subprocess
import sys
import threading
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, OracleError, PreconditionError
from .geometry import PointCloud

log = logging.getLogger(__name__)

PROTOCOL_HELLO = "PARALLAX-MODEL 1"

__all__ = [
    "PerceptionModel",
    "UnionOfBalls",
    "Shell",
    "HalfspacePolytope",
    "BoxUnion",
    "ExternalModel",
    "MembershipBatch",
    "ContainmentReport",
    "ball",
    "membership",
    "membership_batch",
    "validate_model_contains",
    "lambda_ball_lower",
    "model_from_spec",
    "load_model",
    "serve_model",
]


@dataclass(frozen=True)
class MembershipBatch:
    points: np.ndarray
    verdicts: np.ndarray  # bool, True = inside

    def __post_init__(self):
        if len(self.points) != len(self.verdicts):
            raise OracleError("membership batch length mismatch")


class PerceptionModel:
    """Base class for membership oracles.

    Subclasses implement ``_contains`` on an ``(m, dim)`` array and return a
    boolean array. ``query_count`` counts evaluated points.
    """

    kind = "abstract"

    def __init__(self, dim=None):
        self._dim = dim
        self.query_count = 0
        self._count_lock = threading.Lock()

    @property
    def dim(self):
        return self._dim

    # copies (e.g. sklearn's clone) get fresh locks and, for processes, no live child
    _transient = ("_count_lock",)

    def __getstate__(self):
        state = self.__dict__.copy()
        for key in self._transient:
            state.pop(key, None)
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._count_lock = threading.Lock()

    def _contains(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_points(self, pts):
        pts = np.asarray(pts, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2:
            raise InputError(f"points must be 2-d, got shape {pts.shape}")
        if self.dim is not None and pts.shape[1] != self.dim:
            raise InputError(f"dimension mismatch: model is {self.dim}-d, points are {pts.shape[1]}-d")
        return pts

    def contains(self, pts) -> np.ndarray:
        pts = self._check_points(pts)
        if len(pts) == 0:
            return np.zeros(0, dtype=bool)
        out = np.asarray(self._contains(pts), dtype=bool)
        with self._count_lock:
            self.query_count += len(pts)
        return out

    def membership(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        if p.ndim != 1:
            raise InputError("membership expects a single point")
        return bool(self.contains(p[None, :])[0])

    def membership_batch(self, points) -> MembershipBatch:
        pts = self._check_points(points)
        if len(pts) == 0:
            raise InputError("membership batch must be nonempty")
        return MembershipBatch(pts, self.contains(pts))

    def to_spec(self) -> dict:
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __repr__(self):
        return f"{type(self).__name__}({json.dumps(self.to_spec().get('params', {}))})"


class UnionOfBalls(PerceptionModel):
    kind = "union_of_balls"

    def __init__(self, centers, radii):
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        radii = np.broadcast_to(np.asarray(radii, dtype=float), (len(centers),)).copy()
        if np.any(radii <= 0):
            raise InputError("ball radii must be positive")
        super().__init__(centers.shape[1])
        self.centers = centers
        self.radii = radii

    def _contains(self, pts):
        inside = np.zeros(len(pts), dtype=bool)
        # chunked over centers to bound memory on large unions
        step = max(1, 2_000_000 // max(1, len(pts)))
        for s in range(0, len(self.centers), step):
            c = self.centers[s : s + step]
            r = self.radii[s : s + step]
            d2 = ((pts[:, None, :] - c[None, :, :]) ** 2).sum(-1)
            inside |= np.any(d2 <= (r**2)[None, :], axis=1)
        return inside

    def to_spec(self):
        return {
            "kind": self.kind,
            "params": {"centers": self.centers.tolist(), "radii": self.radii.tolist()},
        }


def ball(center, radius) -> UnionOfBalls:
    return UnionOfBalls([center], [radius])


class Shell(PerceptionModel):
    kind = "shell"

    def __init__(self, center, inner, outer):
        center = np.asarray(center, dtype=float)
        if not (0 <= inner < outer):
            raise InputError("shell needs 0 <= inner < outer")
        super().__init__(len(center))
        self.center = center
        self.inner = float(inner)
        self.outer = float(outer)

    def _contains(self, pts):
        r = np.linalg.norm(pts - self.center[None, :], axis=1)
        return (r >= self.inner) & (r <= self.outer)

    def to_spec(self):
        return {
            "kind": self.kind,
            "params": {"center": self.center.tolist(), "inner": self.inner, "outer": self.outer},
        }


class HalfspacePolytope(PerceptionModel):
    """Intersection of halfspaces ``<a, p> <= b``; no constraints means all of R^dim."""

    kind = "halfspace_polytope"

    def __init__(self, normals, offsets, dim=None):
        normals = np.asarray(normals, dtype=float)
        offsets = np.asarray(offsets, dtype=float).ravel()
        if normals.size == 0:
            if dim is None:
                raise InputError("an unconstrained polytope needs an explicit dim")
            normals = np.zeros((0, dim))
        normals = np.atleast_2d(normals)
        if len(normals) != len(offsets):
            raise InputError("normals and offsets differ in length")
        if dim is not None and normals.shape[1] != dim:
            raise InputError("normals do not match dim")
        if np.any(np.linalg.norm(normals, axis=1) == 0):
            raise InputError("zero normal vector")
        super().__init__(normals.shape[1])
        self.normals = normals
        self.offsets = offsets

    def _contains(self, pts):
        if len(self.normals) == 0:
            return np.ones(len(pts), dtype=bool)
        return np.all(pts @ self.normals.T <= self.offsets[None, :], axis=1)

    def to_spec(self):
        return {
            "kind": self.kind,
            "params": {
                "normals": self.normals.tolist(),
                "offsets": self.offsets.tolist(),
                "dim": self.dim,
            },
        }


class BoxUnion(PerceptionModel):
    kind = "box_union"

    def __init__(self, mins, maxs):
        mins = np.atleast_2d(np.asarray(mins, dtype=float))
        maxs = np.atleast_2d(np.asarray(maxs, dtype=float))
        if mins.shape != maxs.shape:
            raise InputError("box corner arrays differ in shape")
        if np.any(mins >= maxs):
            raise InputError("box min-corner must be < max-corner componentwise")
        super().__init__(mins.shape[1])
        self.mins = mins
        self.maxs = maxs

    def _contains(self, pts):
        p = pts[:, None, :]
        inside = (p >= self.mins[None]) & (p <= self.maxs[None])
        return np.any(np.all(inside, axis=2), axis=1)

    def to_spec(self):
        return {"kind": self.kind, "params": {"mins": self.mins.tolist(), "maxs": self.maxs.tolist()}}


class ExternalModel(PerceptionModel):
    """A membership oracle running as a child process.

    Batches are serialized through one lock. After every batch, every 100th
    point (at least one) is re-queried and any disagreement raises
    ``OracleError``; re-queries are counted in ``spot_check_count``, not in
    ``query_count``.
    """

    kind = "external"
    _transient = ("_count_lock", "_lock", "_proc")

    def __init__(self, command, spot_check_stride=100):
        if isinstance(command, str) or not command:
            raise InputError("external model command must be a nonempty list")
        super().__init__(None)
        self.command = list(command)
        self.spot_check_stride = spot_check_stride
        self.spot_check_count = 0
        self._proc = None
        self._lock = threading.Lock()

    def __setstate__(self, state):
        super().__setstate__(state)
        self._lock = threading.Lock()
        self._proc = None

    @property
    def dim(self):
        if self._dim is None:
            with self._lock:
                self._ensure_started()
        return self._dim

    def _ensure_started(self):
        if self._proc is not None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise OracleError(f"cannot start external model {self.command}: {exc}") from None
        self._send(PROTOCOL_HELLO)
        reply = self._recv()
        parts = reply.split()
        if len(parts) != 2 or parts[0] != "OK" or not parts[1].isdigit() or int(parts[1]) < 1:
            self._kill()
            raise OracleError(f"bad handshake reply {reply!r}")
        self._dim = int(parts[1])

    def _send(self, text):
        try:
            self._proc.stdin.write(text + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise OracleError(f"external model closed its input: {exc}") from None

    def _recv(self):
        line = self._proc.stdout.readline()
        if not line:
            code = self._proc.poll()
            raise OracleError(f"external model ended its output early (exit status {code})")
        return line.rstrip("\r\n")

    def _roundtrip(self, pts):
        lines = [f"EVAL {len(pts)}"]
        lines.extend(" ".join(f"{v:.17g}" for v in row) for row in pts)
        self._send("\n".join(lines))
        out = np.empty(len(pts), dtype=bool)
        for i in range(len(pts)):
            tok = self._recv().strip()
            if tok == "1":
                out[i] = True
            elif tok == "0":
                out[i] = False
            else:
                raise OracleError(f"protocol violation: expected 0 or 1, got {tok!r}")
        return out

    def _contains(self, pts):
        with self._lock:
            self._ensure_started()
            if pts.shape[1] != self._dim:
                raise InputError(f"dimension mismatch: model is {self._dim}-d")
            out = self._roundtrip(pts)
            idx = np.arange(0, len(pts), self.spot_check_stride)
            again = self._roundtrip(pts[idx])
            self.spot_check_count += len(idx)
            if np.any(again != out[idx]):
                bad = idx[again != out[idx]][0]
                raise OracleError(f"external model is nondeterministic at {pts[bad].tolist()}")
            return out

    def _kill(self):
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    def close(self):
        with self._lock:
            if self._proc is None:
                return
            proc = self._proc
            self._proc = None
            try:
                proc.stdin.write("END\n")
                proc.stdin.flush()
                proc.stdin.close()
            except (BrokenPipeError, OSError):
                pass
            try:
                code = proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
                raise OracleError("external model did not exit after END") from None
            if code != 0:
                raise OracleError(f"external model exited with status {code}")

    def __del__(self):
        if getattr(self, "_proc", None) is not None:
            self._kill()

    def to_spec(self):
        return {"kind": self.kind, "command": self.command}


def membership(model: PerceptionModel, p) -> bool:
    return model.membership(p)


def membership_batch(model: PerceptionModel, points) -> MembershipBatch:
    return model.membership_batch(points)


@dataclass
class ContainmentReport:
    outside: list = field(default_factory=list)
    not_interior: list = field(default_factory=list)
    interior_probe: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.outside and not self.not_interior

    @property
    def offending(self) -> list:
        return sorted(set(self.outside) | set(self.not_interior))

    def __bool__(self):
        return self.ok


def validate_model_contains(model: PerceptionModel, X: PointCloud, interior_probe=None) -> ContainmentReport:
    """Check that every data point lies in the interior of the model.

    A point passes when it is inside and the ``2 * dim`` axis points at
    distance ``interior_probe`` (default ``1e-6`` times the data diameter)
    are inside as well.
    """
    if model.dim is not None and model.dim != X.dim:
        raise InputError(f"model is {model.dim}-d but data is {X.dim}-d")
    if interior_probe is None:
        interior_probe = 1e-6 * (X.diameter() or 1.0)
    pts = X.points
    n, dim = pts.shape
    inside = model.contains(pts)
    offsets = np.concatenate([np.eye(dim), -np.eye(dim)]) * interior_probe
    probes = (pts[:, None, :] + offsets[None, :, :]).reshape(-1, dim)
    probe_in = model.contains(probes).reshape(n, 2 * dim).all(axis=1)
    return ContainmentReport(
        outside=[int(i) for i in np.flatnonzero(~inside)],
        not_interior=[int(i) for i in np.flatnonzero(inside & ~probe_in)],
        interior_probe=float(interior_probe),
    )


def _ray_exits(model, origins, dirs, tol, max_radius, start):
    """Distance along each ray to an outside point, by doubling then bisection.

    Returns ``lo`` with ``origin + lo * dir`` inside and an outside point
    within ``tol`` beyond it, or ``max_radius`` when no outside point was found.
    """
    m = len(origins)
    lo = np.zeros(m)
    hi = np.full(m, np.inf)
    t = np.full(m, float(start))
    active = np.ones(m, dtype=bool)
    while np.any(active):
        idx = np.flatnonzero(active)
        tt = np.minimum(t[idx], max_radius)
        ins = model.contains(origins[idx] + tt[:, None] * dirs[idx])
        out_idx = idx[~ins]
        hi[out_idx] = tt[~ins]
        in_idx = idx[ins]
        lo[in_idx] = tt[ins]
        capped = in_idx[tt[ins] >= max_radius]
        active[out_idx] = False
        active[capped] = False
        t[in_idx] *= 2.0
    todo = np.isfinite(hi) & (hi - lo > tol)
    while np.any(todo):
        idx = np.flatnonzero(todo)
        mid = 0.5 * (lo[idx] + hi[idx])
        ins = model.contains(origins[idx] + mid[:, None] * dirs[idx])
        lo[idx[ins]] = mid[ins]
        hi[idx[~ins]] = mid[~ins]
        todo = np.isfinite(hi) & (hi - lo > tol)
    return np.where(np.isfinite(hi), lo, max_radius)


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def lambda_ball_lower(
    X: PointCloud,
    model: PerceptionModel,
    directions: int = 64,
    rng=None,
    tol: float = 1e-4,
    max_probe_radius=None,
    refine_rounds: int = 12,
    refine_candidates: int = 8,
) -> float:
    """Estimate the largest radius of balls around the data that stay inside the model.

    Each point shoots ``directions`` random rays and locates the nearest
    boundary crossing to ``tol`` by doubling and bisection. The best ray per
    point is then refined by a shrinking local search over directions, which
    pulls the estimate down towards the true distance to the complement. The
    result is the minimum over all points, minus ``tol``, clipped at zero.

    Unbounded models return ``max_probe_radius`` (default ten times the data
    diameter).
    """
    if directions < 1:
        raise InputError("directions must be positive")
    rng = np.random.default_rng(rng)
    inside = model.contains(X.points)
    if not inside.all():
        raise PreconditionError(f"model rejects data points {np.flatnonzero(~inside).tolist()}")
    diam = X.diameter()
    if max_probe_radius is None:
        max_probe_radius = 10.0 * diam if diam > 0 else 10.0
    n, dim = X.points.shape
    start = min(max_probe_radius, max(4 * tol, 1e-3 * (diam or 1.0)))

    origins = np.repeat(X.points, directions, axis=0)
    dirs = _unit(rng.standard_normal((n * directions, dim)))
    exits = _ray_exits(model, origins, dirs, tol, max_probe_radius, start).reshape(n, directions)
    best = exits.argmin(axis=1)
    best_t = exits[np.arange(n), best]
    best_dir = dirs.reshape(n, directions, dim)[np.arange(n), best]

    sigma = 0.5
    for _ in range(refine_rounds if dim > 1 else 0):
        live = best_t < max_probe_radius
        if not live.any():
            break
        cand = best_dir[:, None, :] + sigma * rng.standard_normal((n, refine_candidates, dim))
        cand = _unit(cand)
        o = np.repeat(X.points[live], refine_candidates, axis=0)
        d = cand[live].reshape(-1, dim)
        t = _ray_exits(model, o, d, tol, max_probe_radius, start).reshape(-1, refine_candidates)
        j = t.argmin(axis=1)
        tj = t[np.arange(len(t)), j]
        rows = np.flatnonzero(live)
        better = tj < best_t[rows]
        best_t[rows[better]] = tj[better]
        best_dir[rows[better]] = cand[rows[better], j[better]]
        sigma *= 0.6

    lowest = float(best_t.min())
    if lowest >= max_probe_radius:
        return float(max_probe_radius)
    return max(0.0, lowest - tol)


def model_from_spec(spec: dict) -> PerceptionModel:
    """Build a model from its JSON description (see README for the schema)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InputError("model spec must be an object with a 'kind' key")
    kind = spec["kind"]
    params = spec.get("params", {})
    try:
        if kind == "union_of_balls":
            radii = params["radii"] if "radii" in params else params["radius"]
            return UnionOfBalls(params["centers"], radii)
        if kind == "ball":
            return ball(params["center"], params["radius"])
        if kind == "shell":
            return Shell(params["center"], params["inner"], params["outer"])
        if kind == "halfspace_polytope":
            return HalfspacePolytope(params.get("normals", []), params.get("offsets", []), params.get("dim"))
        if kind == "box_union":
            return BoxUnion(params["mins"], params["maxs"])
        if kind == "external":
            return ExternalModel(spec["command"])
    except KeyError as exc:
        raise InputError(f"model spec of kind {kind!r} is missing {exc}") from None
    raise InputError(f"unknown model kind {kind!r}")


def load_model(path) -> PerceptionModel:
    with open(path, encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON: {exc}") from None
    return model_from_spec(spec)


def serve_model(model: PerceptionModel, stdin=None, stdout=None) -> int:
    """Answer the external-model protocol for ``model`` on a pair of text streams.

    Returns the process exit status: 0 after ``END``, 1 after a protocol error.
    """
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def reply(text):
        stdout.write(text + "\n")
        stdout.flush()

    if stdin.readline().strip() != PROTOCOL_HELLO:
        return 1
    reply(f"OK {model.dim}")
    for line in stdin:
        parts = line.split()
        if parts == ["END"]:
            return 0
        if len(parts) != 2 or parts[0] != "EVAL" or not parts[1].isdigit():
            return 1
        count = int(parts[1])
        rows = []
        for _ in range(count):
            row = stdin.readline()
            if not row:
                return 1
            vals = row.split()
            if len(vals) != model.dim:
                return 1
            rows.append([float(v) for v in vals])
        verdicts = model.contains(np.array(rows).reshape(count, model.dim))
        if count:
            reply("\n".join("1" if v else "0" for v in verdicts))
    return 1

