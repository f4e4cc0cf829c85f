import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_cliques
from parallax.complex import FilteredComplex, PathSpec, build_edge_table, flag_expand, path_filtration
from parallax.exceptions import InputError, StructuralError
from parallax.geometry import PointCloud

S2 = math.sqrt(2) / 2


def test_square_edge_table(square):
    et = build_edge_table(square)
    assert len(et) == 6
    np.testing.assert_allclose(et.rho, [0.5] * 4 + [S2] * 2, atol=1e-15)
    assert et.pairs()[:4] == [(0, 1), (0, 3), (1, 2), (2, 3)]
    assert build_edge_table(square, 0.6).pairs() == [(0, 1), (0, 3), (1, 2), (2, 3)]


def test_two_point_edge_table():
    et = build_edge_table(PointCloud([[0, 0], [2, 0]]))
    assert et.pairs() == [(0, 1)] and et.rho.tolist() == [1.0]


def test_square_flag_complex(square):
    cx = flag_expand(build_edge_table(square), None, 2).validate()
    assert cx.count_by_dim() == [4, 6, 4]
    tris = [(s, v) for s, v in zip(cx.simplices, cx.values) if len(s) == 3]
    assert all(v == pytest.approx(S2) for _, v in tris)
    assert all(((0, 2) in [(s[a], s[b]) for a in range(3) for b in range(a + 1, 3)])
               != ((1, 3) in [(s[a], s[b]) for a in range(3) for b in range(a + 1, 3)]) for s, _ in tris)
    assert flag_expand(build_edge_table(square), None, 1).count_by_dim() == [4, 6]


def test_infinite_side_removes_cofaces(square):
    et = build_edge_table(square)
    vals = et.rho.copy()
    vals[et.index()[(0, 1)]] = np.inf
    cx = flag_expand(et, vals, 2).validate()
    assert cx.count_by_dim() == [4, 5, 2]
    assert all(not {0, 1} <= set(s) for s in cx.simplices if len(s) == 3)


def test_flag_expand_rejects_bad_values(square):
    et = build_edge_table(square)
    with pytest.raises(InputError):
        flag_expand(et, np.full(5, 1.0))
    with pytest.raises(InputError):
        flag_expand(et, -et.rho)


@given(st.integers(3, 8), st.integers(0, 10_000), st.floats(0.2, 1.5))
def test_flag_expand_matches_brute_cliques(n, seed, cutoff):
    X = PointCloud(np.random.default_rng(seed).uniform(0, 2, size=(n, 2)))
    D = X.pairwise_distances() / 2
    cx = flag_expand(build_edge_table(X, cutoff), None, 3).validate()
    assert sorted(cx.simplices) == sorted(brute_cliques(D, cutoff, 4))
    for s, v in zip(cx.simplices, cx.values):
        want = max((D[a, b] for a in s for b in s if a < b), default=0.0)
        assert v == want


@given(st.integers(3, 7), st.integers(0, 10_000))
def test_flag_consistency_after_reassignment(n, seed):
    rng = np.random.default_rng(seed)
    X = PointCloud(rng.uniform(size=(n, 2)))
    et = build_edge_table(X)
    vals = et.rho + rng.uniform(0, 1, len(et))
    vals[rng.random(len(et)) < 0.2] = np.inf
    cx = flag_expand(et, vals, 2).validate()
    ev = dict(zip(et.pairs(), vals))
    for s, v in zip(cx.simplices, cx.values):
        assert v == max((ev[(a, b)] for a in s for b in s if a < b), default=0.0)


def test_validate_catches_disorder():
    FilteredComplex(((0,), (1,), (0, 1)), np.array([0.0, 0.0, 1.0]), 1).validate()
    with pytest.raises(StructuralError):
        FilteredComplex(((0,), (0, 1), (1,)), np.array([0.0, 1.0, 0.0]), 1).validate()
    with pytest.raises(StructuralError):
        FilteredComplex(((0,), (0, 1)), np.array([0.0, 1.0]), 1).validate()


def _table(rho_v, rho_k, blocked):
    return SimpleNamespace(rho_V=np.array(rho_v), rho_K_lower=np.array(rho_k), blocked=np.array(blocked))


def test_path_filtration_examples():
    et = build_edge_table(PointCloud([[0, 0], [2, 0]]))
    assert path_filtration(et, _table([1.0], [1.0], [False]), PathSpec.inflexible()).tolist() == [1.0]
    assert path_filtration(et, _table([1.0], [1.0], [False]), PathSpec.diagonal()).tolist() == [1.0]
    blocked = _table([1.0], [1.2], [True])
    assert path_filtration(et, blocked, PathSpec.inflexible()).tolist() == [np.inf]
    assert path_filtration(et, blocked, PathSpec.diagonal()).tolist() == pytest.approx([1.2])
    # eps reaches 0.2 at t = 2.0 on this path
    slow = PathSpec.piecewise_linear([(0, 0), (2.0, 0.2)])
    assert path_filtration(et, blocked, slow).tolist() == pytest.approx([2.0])


def test_path_filtration_rejects_mismatched_table():
    et = build_edge_table(PointCloud([[0, 0], [2, 0]]))
    with pytest.raises(InputError):
        path_filtration(et, _table([0.9], [0.9], [False]), PathSpec.diagonal())


def test_path_spec_validation():
    with pytest.raises(InputError):
        PathSpec.piecewise_linear([(0, 0.1), (1, 1)])
    with pytest.raises(InputError):
        PathSpec.piecewise_linear([(0, 0), (1, 1), (2, 0.5)])
    with pytest.raises(InputError):
        PathSpec("spiral")
    p = PathSpec.piecewise_linear([(1.0, 0.5)])
    assert p.breakpoints[0] == (0.0, 0.0)
    assert p.eps(0.5) == pytest.approx(0.25) and p.eps(10) == 0.5
    assert p.first_scale_reaching(0.25) == pytest.approx(0.5)
    assert p.first_scale_reaching(0.6) == np.inf
    jump = PathSpec.piecewise_linear([(0, 0), (1, 0), (1, 0.3)])
    assert jump.eps(1.0) == 0.3 and jump.first_scale_reaching(0.3) == 1.0 and jump.first_positive_scale() == 1.0


# dyadic steps keep the sums below exact; positive alpha steps avoid a jump at 0
breakpoints = st.lists(st.tuples(st.integers(1, 8), st.integers(0, 4)), min_size=1, max_size=4).map(
    lambda steps: [(0.0, 0.0)]
    + [(a / 4, e / 8) for a, e in zip(np.cumsum([s[0] for s in steps]), np.cumsum([s[1] for s in steps]))]
)


@given(breakpoints, breakpoints, st.integers(0, 10_000))
def test_path_monotonicity_and_sandwich(bp1, bp2, seed):
    rng = np.random.default_rng(seed)
    X = PointCloud(rng.uniform(size=(6, 2)))
    et = build_edge_table(X)
    blocked = rng.random(len(et)) < 0.5
    rho_k = np.where(blocked, et.rho + rng.uniform(0, 0.5, len(et)), et.rho)
    tab = _table(et.rho, rho_k, blocked)
    p1 = PathSpec.piecewise_linear(bp1)
    # pointwise-larger eps: add the second path's eps to the first
    merged = sorted({a for a, _ in bp1} | {a for a, _ in bp2})
    p2 = PathSpec.piecewise_linear([(a, p1.eps(a) + PathSpec.piecewise_linear(bp2).eps(a)) for a in merged])
    f1 = path_filtration(et, tab, p1)
    f2 = path_filtration(et, tab, p2)
    assert np.all(f1 >= f2 - 1e-12)
    for path in (p1, p2, PathSpec.inflexible(), PathSpec.diagonal()):
        assert np.all(path_filtration(et, tab, path) >= et.rho)
    assert np.all(path_filtration(et, tab, PathSpec.inflexible()) >= path_filtration(et, tab, PathSpec.diagonal()))
