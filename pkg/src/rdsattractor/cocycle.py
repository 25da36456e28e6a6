"""Discrete-time cocycles psi_k = phi_{tau0} over sigma_k = theta_{k tau0},
cocycle residuals, and empirical smoothing Lipschitz constants K."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EstimationError
from .noise import grid_index, shift
from .state import StateVector, as_batch, weighted_norm


class DiscreteRDS:
    """psi at slot k: the system run over [k tau0, (k+1) tau0] of the path."""

    def __init__(self, system, path, tau0):
        self.system = system
        self.path = path
        self.tau0 = float(tau0)
        self.steps = grid_index(tau0, system.dt, "tau0")
        grid_index(tau0, path.dt, "tau0")
        if self.steps < 1:
            raise ConfigError("tau0 must be at least one integrator step")

    @property
    def lam(self):
        return self.system.lam

    @property
    def J(self):
        return self.system.J

    def step_batch(self, k, u, count=1):
        """Apply `count` consecutive slots starting at slot k to rows of u."""
        return self.system.advance(u, self.path, k * self.steps, count * self.steps)

    def step(self, k, u):
        batch, single = as_batch(u)
        out = self.step_batch(k, batch)
        return StateVector(out[0], self.lam) if single else out

    def shifted(self, slots):
        return DiscreteRDS(self.system, shift(self.path, slots * self.tau0), self.tau0)


def step(rds, k, u):
    return rds.step(k, u)


def flow(system, path, t, u, tau=0.0):
    """phi_t^{theta_tau omega}(u) for a system object."""
    i0 = grid_index(tau, system.dt)
    n = grid_index(t, system.dt)
    batch, single = as_batch(u)
    out = system.advance(batch, path, i0, n)
    return out[0] if single else out


def cocycle_residual(system, path, t, s, u):
    """|phi_{t+s}(u) - phi_t^{theta_s omega}(phi_s(u))|_H."""
    if t < 0 or s < 0:
        raise ConfigError("need t, s >= 0")
    batch, _ = as_batch(u)
    direct = flow(system, path, t + s, batch)
    mid = flow(system, path, s, batch)
    composed = flow(system, shift(path, s), t, mid)
    return float(np.max(weighted_norm(direct - composed, system.lam, 0)))


def difference_quotients(rds, k, points):
    """All pairwise |psi u1 - psi u2|_V / |u1 - u2|_H over the given points."""
    pts, _ = as_batch(points)
    img = rds.step_batch(k, pts)
    i, j = np.triu_indices(len(pts), 1)
    den = weighted_norm(pts[i] - pts[j], rds.lam, 0)
    num = weighted_norm(img[i] - img[j], rds.lam, 1)
    keep = den > 0
    if not np.any(keep):
        raise EstimationError("all probe pairs are degenerate")
    return num[keep] / den[keep]


def probe_points(center, radius, probes, seed, J):
    """Deterministic uniform samples of the H-ball around center."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((probes, J))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = rng.random(probes) ** (1.0 / J)
    c = center.coeffs if isinstance(center, StateVector) else np.asarray(center, dtype=float)
    return c + radius * rad[:, None] * g


def lipschitz_estimate(rds, k, center, radius, probes, seed):
    """Max of sampled difference quotients over the ball, clamped below at 1."""
    if probes < 2 or not radius > 0:
        raise ConfigError("need probes >= 2 and radius > 0")
    pts = probe_points(center, radius, probes, seed, rds.J)
    return max(1.0, float(difference_quotients(rds, k, pts).max()))


@dataclass
class LipschitzEstimate:
    K: np.ndarray
    probes: int
    region_radius: np.ndarray
    p95: np.ndarray
    slots: np.ndarray
    m: float = 1.0

    def rows(self):
        for s, K, R in zip(self.slots, self.K, self.region_radius):
            yield int(s), float(K), self.probes, float(R)


def lipschitz_sequence(rds, slots, radii, probes, seed, m=1.0):
    """K at each slot, probing the H-ball of the matching radius around 0.

    The same unit probe set (from `seed`) is scaled to every radius, so the
    sequence depends on the noise only through the cocycle itself.
    """
    unit = probe_points(np.zeros(rds.J), 1.0, probes, seed, rds.J)
    K, p95 = [], []
    for slot, R in zip(slots, radii):
        q = difference_quotients(rds, slot, R * unit)
        K.append(max(1.0, float(q.max())))
        p95.append(float(np.percentile(q, 95)))
    return LipschitzEstimate(np.array(K), probes, np.asarray(radii, dtype=float),
                             np.array(p95), np.asarray(slots), m)
