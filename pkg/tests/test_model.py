import json
import sys
import textwrap

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parallax.exceptions import InputError, OracleError, PreconditionError
from parallax.geometry import PointCloud
from parallax.model import (
    BoxUnion,
    ExternalModel,
    HalfspacePolytope,
    Shell,
    UnionOfBalls,
    ball,
    lambda_ball_lower,
    load_model,
    membership,
    membership_batch,
    model_from_spec,
    validate_model_contains,
)


def test_shell_membership(shell):
    assert membership(shell, (1, 0))
    assert not membership(shell, (0, 0))
    assert membership(shell, (0.8, 0)) and membership(shell, (0, -1.2))  # closed boundary


def test_batch_is_elementwise(shell):
    pts = np.array([[1, 0], [0, 0], [0, 1.1]])
    b = membership_batch(shell, pts)
    assert b.verdicts.tolist() == [True, False, True]
    with pytest.raises(InputError):
        membership_batch(shell, np.zeros((0, 2)))


@given(st.permutations(list(range(20))))
def test_batch_order_equivariance(perm):
    model = Shell([0, 0], 0.8, 1.2)
    pts = np.random.default_rng(0).uniform(-1.5, 1.5, size=(20, 2))
    base = model.contains(pts)
    np.testing.assert_array_equal(model.contains(pts[list(perm)]), base[list(perm)])


def test_query_count_accounting(shell):
    shell.contains(np.zeros((7, 2)))
    shell.membership((1, 0))
    assert shell.query_count == 8


def test_parameter_sanity():
    with pytest.raises(InputError):
        Shell([0, 0], 1.0, 0.5)
    with pytest.raises(InputError):
        UnionOfBalls([[0, 0]], [0.0])
    with pytest.raises(InputError):
        BoxUnion([[0, 0]], [[1, 0]])
    with pytest.raises(InputError):
        HalfspacePolytope([], [])
    with pytest.raises(InputError):
        Shell([0, 0], 0.5, 1.0).contains(np.zeros((2, 3)))


def test_polytope_and_boxes():
    square = HalfspacePolytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 1, 1, 1])
    assert square.contains(np.array([[0.5, 0.5], [1, 1], [1.1, 0]])).tolist() == [True, True, False]
    boxes = BoxUnion([[0, 0], [2, 0]], [[1, 1], [3, 1]])
    assert boxes.contains(np.array([[0.5, 0.5], [1.5, 0.5], [2.5, 1.0]])).tolist() == [True, False, True]
    whole = HalfspacePolytope([], [], dim=3)
    assert whole.contains(np.full((2, 3), 1e9)).all()


def test_validate_contains(ring16, shell):
    assert validate_model_contains(shell, ring16).ok
    rep = validate_model_contains(Shell([0, 0], 1.01, 1.2), ring16)
    assert not rep.ok and sorted(rep.offending) == list(range(16))
    X = PointCloud(np.random.default_rng(1).normal(size=(10, 3)))
    assert validate_model_contains(UnionOfBalls(X.points, np.full(10, 0.1)), X).ok


def test_validate_flags_boundary_points():
    X = PointCloud([[0.8, 0.0], [1.0, 0.0]])
    rep = validate_model_contains(Shell([0, 0], 0.8, 1.2), X)
    assert not rep.ok and rep.offending == [0]


def test_lambda_ball_single_point():
    X = PointCloud([[0.0, 0.0]])
    v = lambda_ball_lower(X, ball([0, 0], 1.0), directions=64, rng=0)
    assert 0.99 <= v <= 1.0


def test_lambda_ball_unbounded_sentinel(ring16):
    whole = HalfspacePolytope([], [], dim=2)
    assert lambda_ball_lower(ring16, whole, rng=0) == pytest.approx(10 * ring16.diameter())
    assert lambda_ball_lower(ring16, whole, rng=0, max_probe_radius=3.0) == 3.0


@pytest.mark.parametrize(
    "X, model, truth",
    [
        (np.array([[1.0, 0.0], [0.0, 0.9]]), Shell([0, 0], 0.8, 1.2), 0.1),
        (np.array([[0.2, 0.1], [-0.3, 0.0]]), ball([0, 0], 1.0), 0.7),
        (np.array([[0.5, 0.5], [0.25, 0.5]]), BoxUnion([[0, 0]], [[1, 1]]), 0.25),
    ],
)
def test_lambda_ball_below_closed_form(X, model, truth):
    v = lambda_ball_lower(PointCloud(X), model, directions=64, rng=0)
    assert v <= truth
    assert v >= truth - 0.01


def test_lambda_ball_rejects_outside_point(shell):
    with pytest.raises(PreconditionError):
        lambda_ball_lower(PointCloud([[0.0, 0.0]]), shell, rng=0)


def test_model_spec_round_trip(tmp_path):
    specs = [
        {"kind": "union_of_balls", "params": {"centers": [[0, 0], [1, 1]], "radii": [0.5, 0.25]}},
        {"kind": "ball", "params": {"center": [0, 0], "radius": 1.5}},
        {"kind": "shell", "params": {"center": [0, 0], "inner": 0.8, "outer": 1.2}},
        {"kind": "halfspace_polytope", "params": {"normals": [[1, 0]], "offsets": [1]}},
        {"kind": "box_union", "params": {"mins": [[0, 0]], "maxs": [[1, 1]]}},
    ]
    pts = np.random.default_rng(0).uniform(-2, 2, size=(50, 2))
    for spec in specs:
        m = model_from_spec(spec)
        again = model_from_spec(m.to_spec())
        np.testing.assert_array_equal(m.contains(pts), again.contains(pts))
    p = tmp_path / "m.json"
    p.write_text(json.dumps(specs[2]))
    assert load_model(p).contains(np.array([[1.0, 0.0]]))[0]


def test_model_spec_errors(tmp_path):
    with pytest.raises(InputError):
        model_from_spec({"kind": "torus"})
    with pytest.raises(InputError):
        model_from_spec({"kind": "shell", "params": {"center": [0, 0]}})
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InputError):
        load_model(p)


@pytest.fixture
def shell_spec(tmp_path):
    p = tmp_path / "shell.json"
    p.write_text(json.dumps({"kind": "shell", "params": {"center": [0, 0], "inner": 0.8, "outer": 1.2}}))
    return p


def test_external_protocol_matches_builtin(shell_spec, shell):
    cmd = [sys.executable, "-m", "parallax.cli", "serve-model", "--model", str(shell_spec)]
    pts = np.random.default_rng(4).uniform(-1.5, 1.5, size=(250, 2))
    with ExternalModel(cmd) as ext:
        assert ext.dim == 2
        np.testing.assert_array_equal(ext.contains(pts), shell.contains(pts))
        assert ext.query_count == 250
        assert ext.spot_check_count == 3
    assert ext._proc is None


def _script(tmp_path, body):
    p = tmp_path / "fake_model.py"
    p.write_text(textwrap.dedent(body))
    return [sys.executable, str(p)]


def test_external_nondeterminism_detected(tmp_path):
    cmd = _script(
        tmp_path,
        """
        import sys
        state = 0
        assert sys.stdin.readline().strip() == "PARALLAX-MODEL 1"
        print("OK 2", flush=True)
        for line in sys.stdin:
            parts = line.split()
            if parts[0] == "END":
                sys.exit(0)
            n = int(parts[1])
            state ^= 1
            for _ in range(n):
                sys.stdin.readline()
                print(state, flush=True)
        """,
    )
    ext = ExternalModel(cmd)
    with pytest.raises(OracleError, match="nondeterministic"):
        ext.contains(np.zeros((2, 2)))
    ext._kill()


def test_external_bad_token_and_handshake(tmp_path):
    cmd = _script(
        tmp_path,
        """
        import sys
        sys.stdin.readline()
        print("OK 2", flush=True)
        sys.stdin.readline(); sys.stdin.readline()
        print("maybe", flush=True)
        """,
    )
    ext = ExternalModel(cmd)
    with pytest.raises(OracleError, match="protocol"):
        ext.contains(np.zeros((1, 2)))
    ext._kill()
    bad = ExternalModel(_script(tmp_path, "print('HELLO')\n"))
    with pytest.raises(OracleError, match="handshake"):
        bad.dim
    with pytest.raises(OracleError):
        ExternalModel(["/nonexistent/model-binary"]).dim


def test_models_survive_copy(shell_spec):
    import copy

    s = Shell([0, 0], 0.8, 1.2)
    s.contains(np.zeros((3, 2)))
    twin = copy.deepcopy(s)
    assert twin.query_count == 3 and twin.contains(np.array([[1.0, 0.0]]))[0]
    ext = ExternalModel([sys.executable, "-m", "parallax.cli", "serve-model", "--model", str(shell_spec)])
    assert ext.dim == 2
    clone = copy.deepcopy(ext)
    assert clone._proc is None and clone.contains(np.array([[1.0, 0.0]]))[0]
    clone.close()
    ext.close()
