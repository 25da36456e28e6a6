import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdsattractor import (ConfigError, DomainError, EmptyInputError, PointCloud, ball_net,
                          barycentric_weights, blend_nets, entropy_estimate, greedy_net,
                          minkowski_net, param_net)
from rdsattractor.metric import directed_distance
from rdsattractor.nets import (ball_cloud, compatible_tuples, covering_radius, dyadic_level,
                               grid_count, property_battery, unique_rows)


def naive_greedy(X, delta):
    centers = []
    for i, x in enumerate(X):
        if all(np.sqrt(np.sum((x - X[c]) ** 2)) > delta for c in centers):
            centers.append(i)
    return centers


def ds(A, B):
    return max(directed_distance(A, B), directed_distance(B, A))


def test_greedy_examples():
    assert np.array_equal(greedy_net(np.array([[2.0, 3.0]]), 0.1).points, [[2.0, 3.0]])
    net = greedy_net(np.array([0.0, 0.4, 1.0]), 0.5)
    assert net.points.ravel().tolist() == [0.0, 1.0]
    X = np.random.default_rng(0).normal(size=(50, 3))
    assert np.array_equal(greedy_net(X, 100.0).points, X[:1])
    with pytest.raises(EmptyInputError):
        greedy_net(np.empty((0, 2)), 1.0)
    with pytest.raises(ConfigError):
        greedy_net(X, 0.0)


def test_greedy_matches_brute_force_subsets():
    # the greedy net of {0, 0.4, 1.0} is the minimal covering subset here
    X = np.array([[0.0], [0.4], [1.0]])
    best = min((s for r in range(1, 4) for s in itertools.combinations(range(3), r)
                if covering_radius(X, X[list(s)]) <= 0.5), key=len)
    assert len(best) == len(greedy_net(X, 0.5))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 1500), st.integers(1, 4), st.floats(0.05, 1.5), st.integers(0, 2 ** 31))
def test_greedy_matches_naive(n, d, delta, seed):
    rng = np.random.default_rng(seed)
    X = rng.integers(-3, 4, size=(n, d)) * 0.25 if seed % 2 else rng.normal(size=(n, d))
    net = greedy_net(X, delta)
    assert net.indices.tolist() == naive_greedy(X, delta)
    assert covering_radius(X, net.points) <= delta


def test_v_norm_cloud():
    lam = np.array([1.0, 4.0])
    cloud = PointCloud(np.array([[0.0, 0.0], [0.0, 0.3]]), "V", lam)
    assert len(greedy_net(cloud, 0.5)) == 2
    assert len(greedy_net(cloud.like(cloud.points), 0.7)) == 1
    with pytest.raises(ConfigError):
        PointCloud(np.zeros((1, 2)), "V")


def test_entropy_estimate():
    assert entropy_estimate(np.zeros((1, 2)), 0.1) == 0.0
    grid = np.arange(1024)[:, None] * 0.01
    assert entropy_estimate(grid, 100.0) == 0.0
    # eps just below 2^m spacings makes every center cover exactly 2^m points
    eps = [2 ** m * 0.01 * (1 - 1e-6) for m in (1, 2, 3, 4)]
    H = [entropy_estimate(grid, e) for e in eps]
    assert H == sorted(H, reverse=True)
    slope = np.polyfit(np.log(1 / np.array(eps)), H, 1)[0]
    assert slope == pytest.approx(1.0, abs=0.1)


def test_barycentric_examples():
    sq = ((0.0, 1.0), (0.0, 1.0))
    assert np.allclose(barycentric_weights(sq, (0.5, 0.5)), 0.25)
    assert np.array_equal(barycentric_weights(sq, (0.0, 0.0)), [1, 0, 0, 0])
    assert np.allclose(barycentric_weights(sq, (0.25, 0.5)), [0.375, 0.125, 0.125, 0.375])
    with pytest.raises(DomainError):
        barycentric_weights(sq, (1.5, 0.5))


def test_blend_examples():
    rng = np.random.default_rng(1)
    W = [rng.normal(size=(5, 2)) for _ in range(3)]
    assert np.array_equal(blend_nets(W[:1], [1.0], 0.1), W[0])
    assert np.array_equal(blend_nets(W, [0.0, 1.0, 0.0], 1e6), unique_rows(W[1]))
    assert len(blend_nets(W, [0.2, 0.3, 0.5], 1e6)) <= 125
    with pytest.raises(ConfigError):
        blend_nets(W, [0.5, 0.6, -0.1], 1.0)


def test_compatible_tuples_lexicographic():
    W = [np.array([[0.0], [1.0]]), np.array([[0.2], [5.0]])]
    assert compatible_tuples(W, 0.5).tolist() == [[0, 0]]
    assert compatible_tuples(W, 10.0).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]


def test_blend_max_form_fails_beyond_two_sets():
    # moving all weight from {0} to {alpha} in two halves: max |dtheta| = 1/2,
    # yet the blend moves by the full alpha
    alpha = 1.0
    W = [np.array([[0.0]]), np.array([[0.0]]), np.array([[alpha]]), np.array([[alpha]])]
    t1, t2 = np.array([0.5, 0.5, 0.0, 0.0]), np.array([0.0, 0.0, 0.5, 0.5])
    d = ds(blend_nets(W, t1, alpha), blend_nets(W, t2, alpha))
    assert d == alpha
    assert d > alpha * np.abs(t1 - t2).max()
    assert d <= alpha * 0.5 * np.abs(t1 - t2).sum()


def test_dyadic_levels():
    assert dyadic_level(1.0) == 1
    assert dyadic_level(0.5) == 2
    assert dyadic_level(0.3) == 2
    assert dyadic_level(0.25) == 3
    for d in np.geomspace(1e-3, 1.0, 50):
        k = dyadic_level(d)
        assert 2.0 ** -k < d <= 2.0 ** (1 - k)
    assert grid_count(1.0, 1) == 33


def segment(y):
    return PointCloud(np.linspace(0.0, y, 41)[:, None])


def test_param_net_covers_and_corners():
    net = param_net(segment, 0.25, 0.5)
    assert covering_radius(segment(0.5), net.points) <= 0.25
    # equal corner nets still blend distinct members, so a constant family only
    # pins the output to within alpha of the shared net
    flat = lambda y: segment(1.0)
    shared = greedy_net(segment(1.0), 2.0 ** (-dyadic_level(0.2) - 3)).points
    for y in (0.31, 0.77):
        out = param_net(flat, 0.2, y).points
        assert directed_distance(out, shared) <= 2.0 ** (-dyadic_level(0.2) - 1)
        assert covering_radius(segment(1.0), out) <= 0.2
    # delta = 2^-3 sits on the upper edge of level 4, so the query is vertex A2
    level = dyadic_level(2.0 ** -3)
    N = grid_count(1.0, level)
    corner = param_net(segment, 2.0 ** -3, 5 / N)
    assert np.array_equal(corner.info["theta"], [0, 1, 0, 0])
    want = greedy_net(segment(5 / N), 2.0 ** (-level - 3)).points
    assert np.array_equal(np.sort(corner.points, axis=0), np.sort(want, axis=0))


def test_param_net_lipschitz_within_cell():
    C = 1.0
    delta = 0.3
    k = dyadic_level(delta)
    N = grid_count(C, k)
    ys = 7 / N + np.linspace(0, 1, 9) / N
    nets = [param_net(segment, delta, y).points for y in ys]
    for a in range(len(ys)):
        for b in range(a + 1, len(ys)):
            assert ds(nets[a], nets[b]) <= (8 * C + 0.5) * abs(ys[a] - ys[b]) + 1e-12


def test_ball_net():
    assert np.array_equal(ball_net(0.0, 0.1, np.array([1.0, 4.0])).points, [[0.0, 0.0]])
    lam = np.array([4.0])
    net = ball_net(1.5, 0.05, lam)
    probes = np.random.default_rng(3).uniform(-0.75, 0.75, size=(4000, 1))
    assert directed_distance(probes, net.points) <= 0.05
    assert np.all(np.abs(net.points) <= 0.75 + 0.05)


def test_ball_net_lipschitz_in_radius():
    from rdsattractor.nets import BallNets
    nets = BallNets(np.ones(1), 3.0)
    radii = np.linspace(1.0, 1.2, 6)
    pts = [nets(R, 0.1).points for R in radii]
    ratios = [ds(pts[i], pts[i + 1]) / (radii[i + 1] - radii[i]) for i in range(5)]
    assert max(ratios) < 20


def test_blend_size_guard():
    W = [np.linspace(0, 1, 3000)[:, None]] * 4
    with pytest.raises(ConfigError):
        blend_nets(W, [0.25] * 4, 0.5)


def test_ball_cloud_lattice():
    lam = np.array([1.0, 4.0])
    cloud = ball_cloud(1.0, lam, 0.25)
    assert np.all((cloud.points ** 2 * lam).sum(axis=1) <= 1.0 + 1e-12)
    assert [1.0, 0.0] in cloud.points.tolist() and [0.0, 0.5] in cloud.points.tolist()


def test_minkowski_examples():
    rng = np.random.default_rng(4)
    K = rng.normal(size=(60, 2))
    same = minkowski_net(np.zeros((1, 2)), K, 0.5)
    assert np.array_equal(same.points, greedy_net(K, 0.5).points)
    V = rng.normal(size=(7, 2))
    net = minkowski_net(V, K, 0.5)
    assert len(net) <= 7 * len(greedy_net(K, 0.5))
    V1 = rng.integers(-8, 9, size=(10, 2)) / 8
    V2 = rng.integers(-8, 9, size=(12, 2)) / 8
    Kd = rng.integers(-8, 9, size=(20, 2)) / 16
    M1, M2 = minkowski_net(V1, Kd, 0.3), minkowski_net(V2, Kd, 0.3)
    assert ds(M1.points, M2.points) <= ds(V1, V2)


def test_property_battery_clean():
    tally = property_battery(30, seed=11)
    assert all(f == 0 for _, f in tally.values())
    assert tally["greedy_covering"] == (30, 0)
