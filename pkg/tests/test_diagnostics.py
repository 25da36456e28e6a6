import math

import numpy as np
import pytest

from rdsattractor import (DiscreteRDS, EmptyInputError, ToySystem, birkhoff_mean,
                          box_dimension, build_discrete, greedy_net, hausdorff, holder_fit,
                          moment_check, sample_path)
from rdsattractor.attractor import toy_absorbing_radii
from rdsattractor.diagnostics import attraction_rate, symmetric_distance, zeta_norm_sampler


def test_hausdorff_examples():
    A = np.random.default_rng(0).normal(size=(30, 2))
    rep = hausdorff(A, A)
    assert (rep.forward, rep.backward, rep.symmetric) == (0.0, 0.0, 0.0)
    rep = hausdorff(np.array([[0.0]]), np.array([[-1.0], [1.0]]))
    assert (rep.forward, rep.backward, rep.symmetric) == (1.0, 1.0, 1.0)
    X = np.random.default_rng(1).uniform(size=(500, 3))
    net = greedy_net(X, 0.2)
    assert symmetric_distance(X, net.points) <= 0.2


def test_box_dimension():
    assert box_dimension(np.zeros((1, 2)), 0.01, 0.2)[0] == 0.0
    rng = np.random.default_rng(2)
    line = rng.uniform(-1, 1, size=(512, 1))
    assert box_dimension(line, 0.01, 0.2)[0] == pytest.approx(1.0, abs=0.15)
    with pytest.raises(EmptyInputError):
        box_dimension(np.empty((0, 1)), 0.01, 0.2)


def grid_square(n):
    g = np.linspace(0, 1, n)
    return np.array([(x, y) for x in g for y in g])


@pytest.mark.xfail(strict=True, reason="greedy counts on a bounded square behave like "
                   "(1 / eps + 1)^2, so the least-squares slope on a 32 x 32 grid stays near 1.7")
def test_box_dimension_coarse_square():
    assert box_dimension(grid_square(32), 0.04, 0.3)[0] == pytest.approx(2.0, abs=0.25)


def test_box_dimension_square_approaches_two():
    dims = [box_dimension(grid_square(n), 1.25 / (n - 1), 0.25)[0] for n in (32, 64, 128)]
    assert dims == sorted(dims)
    assert 1.6 <= dims[0] and dims[-1] <= 2.0


def test_birkhoff_mean():
    assert birkhoff_mean([3.0] * 10, 2)[1] == 9.0
    assert birkhoff_mean([1.0, 3.0] * 50)[1] == 2.0
    x = np.random.default_rng(3).uniform(size=10_000)
    assert abs(birkhoff_mean(x)[1] - 0.5) <= 3 * math.sqrt(1 / 12 / 10_000)
    with pytest.raises(EmptyInputError):
        birkhoff_mean([])


def test_holder_fit():
    t = np.linspace(0, 1, 1025)
    assert holder_fit(t, t).exponent == pytest.approx(1.0, abs=1e-9)
    assert holder_fit(t, np.ones_like(t)).constant_series
    exps = []
    for seed in range(20):
        p = sample_path(seed, (0.0, 1.0), 2.0 ** -14, 1, [1.0], [1.0])
        exps.append(holder_fit(p.times(), p.values()[0]).exponent)
    assert 0.35 <= np.mean(exps) <= 0.5


def test_moment_check():
    lam = np.arange(1, 5) ** 2.0
    b = np.arange(1, 5) ** -4.0
    res = moment_check(zeta_norm_sampler(b, lam), 1, n_samples=4000, seed=1)
    want = np.sum(lam ** 2 * b ** 2)
    assert res.passed
    assert np.all(np.abs(res.ratios - want) <= 5 * want * math.sqrt(2 / 4000) * 3)
    zero = moment_check(zeta_norm_sampler(np.zeros(4), lam), 2, n_samples=100)
    assert zero.passed and np.all(zero.ratios == 0)
    # single mode fourth moment: E beta^4 = 3 t^2
    one = moment_check(zeta_norm_sampler(np.ones(1), np.ones(1)), 2, n_samples=4000, seed=2)
    assert np.allclose(one.ratios, 3.0, rtol=0.15)


def test_attraction_rate_toy():
    p = sample_path(4, (-10.0, 2.0), 0.01, 1, [1.0], [1.0])
    rds = DiscreteRDS(ToySystem(0.0, 0.01), p, 1.0)
    approx = build_discrete(rds, 8, 0.5, radii=toy_absorbing_radii(rds, 8, 0.5))
    fit = attraction_rate(approx, rds, np.linspace(-3, 3, 301))
    assert fit.slope_log2 <= -math.log(2) + 0.2
    # the initial net maps into E_1 and then stays inside the E_k
    kept = build_discrete(rds, 8, 0.5, radii=toy_absorbing_radii(rds, 8, 0.5), keep_u=True)
    on = attraction_rate(kept, rds, kept.info["U"][0])
    assert on.indeterminate and np.all(on.distances == 0)
