"""Measurements: set distances, box-counting dimension, attraction rates,
Birkhoff averages, Hoelder exponents and moment ratios."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EmptyInputError
from .metric import directed_distance, metric_coords
from .nets import as_cloud, greedy_net
from .state import weighted_norm


@dataclass(frozen=True)
class DistanceReport:
    forward: float
    backward: float
    symmetric: float


def hausdorff(A, B, norm_tag="H", lam=None):
    """Both one-sided deviations d(A, B) = sup_a dist(a, B) and d(B, A)."""
    a = metric_coords(as_cloud(A).points, norm_tag, lam)
    b = metric_coords(as_cloud(B).points, norm_tag, lam)
    if len(a) == 0 or len(b) == 0:
        raise EmptyInputError("hausdorff distance needs non-empty sets")
    fwd = directed_distance(a, b)
    bwd = directed_distance(b, a)
    return DistanceReport(fwd, bwd, max(fwd, bwd))


def symmetric_distance(A, B, norm_tag="H", lam=None):
    return hausdorff(A, B, norm_tag, lam).symmetric


def _fit_line(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[0]), float(coef[1]), resid


def box_dimension(cloud, eps_lo, eps_hi, levels=8):
    """Slope of ln N_eps against ln(1/eps), N_eps the greedy-net size, on a geometric grid.

    Returns (dimension, residual, eps_grid, counts).
    """
    cloud = as_cloud(cloud)
    if not 0 < eps_lo < eps_hi or levels < 3:
        raise ConfigError("need 0 < eps_lo < eps_hi and levels >= 3")
    grid = np.geomspace(eps_lo, eps_hi, levels)
    if len(cloud) == 0:
        raise EmptyInputError("empty cloud")
    counts = np.array([len(greedy_net(cloud, e)) for e in grid])
    if np.all(counts == 1):
        return 0.0, 0.0, grid, counts
    slope, _, resid = _fit_line(np.log(1 / grid), np.log(counts))
    return slope, resid, grid, counts


@dataclass
class RateFit:
    beta: float
    C: float
    slope_log2: float
    distances: np.ndarray
    floor: float
    used: np.ndarray
    indeterminate: bool


def attraction_rate(approx, rds, probes, k_max=None, floor=None):
    """Distances d_V(psi_k(probes), E_k) for k = 1..k_max from the anchor slot -n.

    The fit of log2 distance against k uses only distances above the floor
    (default: the finest net radius of the build). beta is per step in natural
    log units; halving per step gives beta = ln 2.
    """
    k_max = k_max or approx.depth
    lam = approx.lam
    pts = np.asarray(probes, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    floor = approx.delta[-1] if floor is None else floor
    dists = []
    for k in range(1, k_max + 1):
        pts = rds.step_batch(approx.slot(k) - 1, pts)
        d = directed_distance(metric_coords(pts, "V", lam), metric_coords(approx.E[k - 1], "V", lam))
        dists.append(d)
    dists = np.array(dists)
    ks = np.arange(1, k_max + 1)
    used = dists > floor
    if used.sum() < 2:
        return RateFit(math.nan, math.nan, math.nan, dists, floor, used, True)
    slope, icpt, _ = _fit_line(ks[used].astype(float), np.log2(dists[used]))
    return RateFit(-slope * math.log(2), 2.0 ** icpt, slope, dists, floor, used, False)


def birkhoff_mean(seq, m=1.0):
    """Running means of x_k^m, the final mean, and the largest relative change
    of the running mean over the last half of the sequence."""
    x = np.asarray(seq, dtype=float)
    if x.size == 0:
        raise EmptyInputError("empty sequence")
    powered = x ** m
    running = np.cumsum(powered) / np.arange(1, x.size + 1)
    xi = float(running[-1])
    tail = running[x.size // 2:]
    diag = float(np.max(np.abs(tail - xi)) / abs(xi)) if xi != 0 else 0.0
    return running, xi, diag


@dataclass
class HolderFit:
    exponent: float
    constant: float
    residual: float
    scale_range: tuple
    constant_series: bool = False


def holder_fit(times, values, metric=None, max_frac=0.125):
    """Max increment per dyadic lag and a log-log regression against the lag.

    values are vectors (distance: Euclidean, or `metric(a, b)`) or arbitrary
    objects when a metric is given. Times must be an equispaced grid.
    """
    t = np.asarray(times, dtype=float)
    if t.size < 8:
        raise ConfigError("need at least 8 samples")
    steps = np.diff(t)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps.mean():
        raise ConfigError("times must be strictly increasing and equispaced")
    h = steps.mean()
    if metric is None:
        vals = np.asarray(values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
    lags, incs = [], []
    q = 1
    while q <= max(1, int(max_frac * (t.size - 1))):
        if metric is None:
            inc = float(np.max(np.sqrt(np.sum((vals[q:] - vals[:-q]) ** 2, axis=1))))
        else:
            inc = max(metric(values[i + q], values[i]) for i in range(t.size - q))
        lags.append(q * h)
        incs.append(inc)
        q *= 2
    lags, incs = np.array(lags), np.array(incs)
    span = (float(lags[0]), float(lags[-1]))
    if np.all(incs == 0):
        return HolderFit(1.0, 0.0, 0.0, span, True)
    if len(lags) < 2 or np.any(incs == 0):
        raise ConfigError("not enough non-zero increments for a fit")
    slope, icpt, resid = _fit_line(np.log(lags), np.log(incs))
    return HolderFit(slope, math.exp(icpt), resid, span)


@dataclass
class MomentCheck:
    passed: bool
    t_grid: np.ndarray
    ratios: np.ndarray
    spread: float


def zeta_norm_sampler(b, lam, s=2.0, dt=None):
    """Sampler of |zeta(t)|_s built from independent NoisePaths, one seed per sample."""
    from .noise import sample_path

    def sample(t_grid, n, seed):
        step = dt or float(np.min(t_grid))
        out = np.empty((n, len(t_grid)))
        ss = np.random.SeedSequence(seed)
        for i, child in enumerate(ss.generate_state(n, dtype=np.uint64)):
            p = sample_path(int(child), (0.0, float(max(t_grid))), step, len(b), b, lam)
            for c, t in enumerate(t_grid):
                z = p.b * p.beta(round(t / step))
                out[i, c] = weighted_norm(z, p.lam, s)
        return out
    return sample


def moment_check(sampler, p, t_grid=(0.25, 0.5, 1.0), n_samples=10_000, seed=0, factor=5.0):
    """E |zeta(t)|^{2p} / t^p on a time grid; passes if max/min of the ratios < factor."""
    if p not in (1, 2, 3):
        raise ConfigError("p must be 1, 2 or 3")
    t_grid = np.asarray(t_grid, dtype=float)
    norms = sampler(t_grid, n_samples, seed)
    ratios = np.mean(norms ** (2 * p), axis=0) / t_grid ** p
    if np.all(ratios == 0):
        return MomentCheck(True, t_grid, ratios, 1.0)
    spread = float(ratios.max() / ratios.min()) if ratios.min() > 0 else math.inf
    return MomentCheck(spread < factor, t_grid, ratios, spread)


def absorption_time(system, path, probes, radius_at, t_grid):
    """Empirical T(B): the first grid time after which every probe stays in B_V(R(t)).

    radius_at(t) gives the absorbing radius at path time t; t_grid must start at 0
    and be aligned to the integrator step. Returns (T, max V-norm / R per grid time).
    """
    lam = np.asarray(system.lam, dtype=float)
    dt = system.dt
    u = np.asarray(probes, dtype=float)
    ratios = []
    prev = 0
    for t in t_grid:
        n = round(t / dt)
        u = system.advance(u, path, prev, n - prev)
        prev = n
        ratios.append(float(np.max(weighted_norm(u, lam, 1))) / radius_at(t))
    ratios = np.array(ratios)
    outside = np.flatnonzero(ratios > 1)
    if len(outside) == 0:
        return float(t_grid[0]), ratios
    if outside[-1] == len(t_grid) - 1:
        return math.inf, ratios
    return float(t_grid[outside[-1] + 1]), ratios
