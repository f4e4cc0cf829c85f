import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from parallax.exceptions import InputError, OracleError, PreconditionError
from parallax.geometry import PointCloud
from parallax.model import PerceptionModel, Shell, UnionOfBalls, ball
from parallax.probing import EdgeStatus, ProbeConfig, bound_edge_disk, build_parallax_table, classify_edge_segment

BARY = ProbeConfig(segment_samples=0)


def test_classify_examples(shell, ball15):
    assert classify_edge_segment((-1, 0), (1, 0), shell) is EdgeStatus.BLOCKED
    assert classify_edge_segment((-1, 0), (1, 0), ball15) is EdgeStatus.UNBLOCKED
    t = 2 * math.pi / 16
    assert classify_edge_segment((1, 0), (math.cos(t), math.sin(t)), shell) is EdgeStatus.UNBLOCKED


def test_disk_bound_formula(shell):
    sched = np.linspace(0.1, 0.5, 5)
    b = bound_edge_disk((-1, 0), (1, 0), shell, sched, 32, 0)
    assert b.rho_K_lower == pytest.approx(math.sqrt(1.25))
    assert b.epsilon_lower == pytest.approx(math.sqrt(1.25) - 1)
    assert b.blocking_radius == 0.5


def test_disk_bound_stops_before_hitting(shell):
    sched = np.geomspace(0.05, 0.7999, 12)
    b = bound_edge_disk((-1, 0), (1, 0), shell, sched, 64, 0)
    assert b.rho_K_lower == pytest.approx(math.sqrt(1 + 0.7999**2), abs=1e-12)
    longer = bound_edge_disk((-1, 0), (1, 0), shell, np.append(sched, [0.8, 1.0]), 64, 0)
    assert longer.blocking_radius == pytest.approx(0.7999)


def test_disk_bound_convex_model(ball15):
    b = bound_edge_disk((-1, 0), (1, 0), ball15, [0.1, 0.2], 16, 0)
    assert (b.rho_K_lower, b.epsilon_lower, b.blocking_radius) == (1.0, 0.0, 0.0)


def test_disk_schedule_validation(shell):
    for bad in ([], [0.2, 0.1], [0.0, 0.1]):
        with pytest.raises(InputError):
            bound_edge_disk((-1, 0), (1, 0), shell, bad, 8, 0)


def _steps(i, j, n=16):
    d = abs(i - j)
    return min(d, n - d)


def test_ring16_shell_blocked_set(ring16, shell):
    table = build_parallax_table(ring16, shell, BARY)
    assert len(table) == 120
    for k, (i, j) in enumerate(table.edges.pairs()):
        # midpoint distance cos(k * 11.25 deg) drops below 0.8 from the 4-step chord on
        assert table.blocked[k] == (_steps(i, j) >= 4)
        assert table.status(k) is (EdgeStatus.BLOCKED if _steps(i, j) >= 4 else EdgeStatus.UNBLOCKED)


def test_ball_blocks_nothing(ring16, ball15):
    table = build_parallax_table(ring16, ball15)
    assert table.n_blocked == 0 and table.disk_queries == 0
    np.testing.assert_array_equal(table.rho_K_lower, table.rho_V)


def test_tiny_balls_block_long_edges(ring16):
    model = UnionOfBalls(ring16.points, np.full(16, 0.05))
    table = build_parallax_table(ring16, model, BARY)
    assert np.all(table.blocked == (2 * table.rho_V > 2 * 0.05))


def test_table_invariants(ring16, shell):
    table = build_parallax_table(ring16, shell)
    b = table.blocked
    np.testing.assert_allclose(table.rho_K_lower[b], np.sqrt(table.rho_V[b] ** 2 + table.blocking_radius[b] ** 2))
    assert np.all(table.blocking_radius[~b] == 0)
    # each blocked edge names a concrete outside point
    assert not shell.contains(table.witness[b]).any()
    assert np.all(np.isnan(table.witness[~b]))
    assert table.segment_queries == 120 * 10


def test_nested_budgets_never_unblock():
    rng = np.random.default_rng(0)
    X = PointCloud(rng.uniform(-1, 1, size=(14, 3)) * [1, 1, 0.2])
    model = UnionOfBalls(X.points, np.full(14, 0.35))
    small = build_parallax_table(X, model, ProbeConfig(segment_samples=4, disk_samples=8, seed=3))
    big = build_parallax_table(X, model, ProbeConfig(segment_samples=9, disk_samples=64, seed=3))
    assert np.all(big.blocked[small.blocked])
    both = small.blocked & big.blocked
    assert np.all(big.blocking_radius[both] <= small.blocking_radius[both])


def test_deterministic_and_thread_independent(ring16, shell):
    a = build_parallax_table(ring16, shell, ProbeConfig(seed=5))
    b = build_parallax_table(ring16, shell, ProbeConfig(seed=5, n_jobs=4))
    np.testing.assert_array_equal(a.blocking_radius, b.blocking_radius)
    np.testing.assert_array_equal(a.blocked, b.blocked)


def test_precondition_checked(ring16):
    with pytest.raises(PreconditionError):
        build_parallax_table(ring16, Shell([0, 0], 1.01, 1.2))


class _Flaky(PerceptionModel):
    kind = "flaky"

    def __init__(self, inner, fail_after):
        super().__init__(inner.dim)
        self.inner = inner
        self.calls = 0
        self.fail_after = fail_after

    def _contains(self, pts):
        self.calls += 1
        if self.calls > self.fail_after:
            raise OracleError("model crashed")
        return self.inner.contains(pts)


def test_oracle_error_reports_partial_state(ring16, shell):
    with pytest.raises(OracleError, match="disk probing aborted at step"):
        build_parallax_table(ring16, _Flaky(shell, 3), validate=False)
    with pytest.raises(OracleError, match="segment probing"):
        build_parallax_table(ring16, _Flaky(shell, 0), validate=False)


def test_probe_config_validation():
    with pytest.raises(InputError):
        ProbeConfig(segment_samples=0, include_barycenter=False)
    with pytest.raises(InputError):
        ProbeConfig(disk_min_frac=0.0)
    assert ProbeConfig(disk_steps=1).disk_schedule(2.0).tolist() == [2.0]


@given(st.floats(0.05, 0.75), st.integers(0, 1000))
def test_disk_bound_monotone_in_schedule(gap, seed):
    # slab obstacle: open strip |y| < gap removed around the segment's midpoint
    from parallax.model import BoxUnion

    model = BoxUnion([[-3, -3], [-3, gap], [-3, -3], [0.5, -3]], [[3, -gap], [3, 3], [-0.5, 3], [3, 3]])
    fine = np.linspace(0.05, 1.0, 29)
    coarse = fine[::4]
    a = bound_edge_disk((-1, 0), (1, 0), model, coarse, 16, seed)
    b = bound_edge_disk((-1, 0), (1, 0), model, fine, 16, seed)
    for bound, sched in ((a, coarse), (b, fine)):
        assert bound.blocking_radius < gap
        assert gap - bound.blocking_radius <= np.diff(sched, prepend=0.0).max() + 1e-12
    assert b.rho_K_lower >= a.rho_K_lower - 1e-12
