"""Concrete random dynamical systems driven by a NoisePath.

* ``ToySystem``: the scalar SDE du = (u - u^3) dt + eps dw, integrated by Strang
  splitting around the exact flow of u' = u - u^3.
* ``GalerkinSystem``: the reaction-diffusion equation
  du = (a u_xx - f(u) + h) dt + eps dW on (0, pi) with Dirichlet conditions,
  truncated to J sine modes, written as u = eps U + v with U the stationary
  Ornstein-Uhlenbeck process of the linear part.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigError, DivergenceError, WindowExhaustedError
from .noise import default_amplitudes, grid_index
from .state import StateVector, as_batch, dirichlet_eigenvalues, weighted_norm

BLOWUP = 1e6


def _same_step(a, b):
    return abs(a - b) <= 1e-12 * max(a, b)


def rowdot(X, A):
    """X @ A.T with a summation order that does not depend on how many rows X has."""
    out = np.empty((X.shape[0], A.shape[0]))
    chunk = max(1, 2_000_000 // max(1, A.size))
    for s in range(0, X.shape[0], chunk):
        out[s:s + chunk] = (X[s:s + chunk, None, :] * A[None, :, :]).sum(axis=-1)
    return out


# ---------------------------------------------------------------------------
# configuration

@dataclass
class SystemConfig:
    J: int = 16
    a: float = 1.0
    cubic: float = 1.0
    linear: float = -1.0
    p: float = 3.0
    h: np.ndarray | None = None
    dt: float = 1e-3
    collocation: int | None = None
    epsilon: float = 1.0
    burn_in: float | None = None
    b: np.ndarray | None = None
    c1: float = 1.0
    delta: float = 0.5
    C1: float = 1.0
    C2: float = 1.0
    C3: float = 1.0
    C4: float = 1.0
    ou_tol: float = 1e-8
    lam: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.J < 1:
            raise ConfigError("modes must be >= 1")
        if not self.a > 0 or not self.dt > 0:
            raise ConfigError("need a > 0 and dt > 0")
        if not -1.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [-1, 1]")
        self.lam = dirichlet_eigenvalues(self.J)
        self.h = np.zeros(self.J) if self.h is None else _pad(self.h, self.J, "h.coeffs")
        self.b = default_amplitudes(self.J) if self.b is None else _pad(self.b, self.J, "noise.b")
        if self.collocation is None:
            self.collocation = 2 * self.J
        if self.collocation < 2 * self.J:
            raise ConfigError("collocation must be at least 2*modes for exact projection of a cubic")
        if self.burn_in is None:
            self.burn_in = default_burn_in(self.a, self.lam, self.b, self.dt, self.ou_tol)

    def f(self, u):
        return self.cubic * u ** 3 + self.linear * u

    def with_epsilon(self, eps):
        return replace(self, epsilon=eps, h=self.h.copy(), b=self.b.copy())

    def validate(self):
        """Growth and dissipativity of f for the configured p (cubic polynomials only)."""
        problems = []
        if self.cubic > 0:
            if self.p != 3:
                problems.append("a cubic f has growth exponent p = 3")
        elif self.cubic < 0:
            problems.append("f'(u) = 3 c u^2 + l is not bounded below for c < 0")
        else:
            if not (self.linear > 0 and self.p == 1):
                problems.append("<f(u), u> >= -C + c|u|^(p+1) fails without a positive cubic term")
        if problems:
            raise ConfigError("; ".join(problems))


def _pad(values, J, key):
    v = np.asarray(values, dtype=float).ravel()
    if v.size > J:
        raise ConfigError(f"{key} has more than {J} entries")
    return np.concatenate([v, np.zeros(J - v.size)])


def default_burn_in(a, lam, b, dt, tol=1e-8):
    """Smallest grid-aligned horizon with per-mode V-norm truncation bound below tol."""
    need = 0.0
    for lj, bj in zip(lam, b):
        if bj > 0:
            amp = bj / math.sqrt(2 * a * lj) * math.sqrt(lj)
            if amp > tol:
                need = max(need, math.log(amp / tol) / (a * lj))
    return math.ceil(need / dt - 1e-9) * dt


def config_from_settings(s):
    """SystemConfig from a flat Settings mapping; unknown keys are left to the caller."""
    J = s.integer("modes", 16)
    b = None
    if s.has("noise.b"):
        b = s.reals("noise.b")
    elif s.has("noise.decay"):
        b = default_amplitudes(J, s.real("noise.decay"))
    cfg = SystemConfig(
        J=J, a=s.real("a", 1.0), cubic=s.real("f.cubic", 1.0), linear=s.real("f.linear", -1.0),
        p=s.real("p", 3.0), h=s.reals("h.coeffs", []) or None, dt=s.real("dt", 1e-3),
        collocation=s.integer("collocation", 2 * J), epsilon=s.real("epsilon", 1.0),
        burn_in=s.real("burn_in") if s.has("burn_in") else None, b=b,
        c1=s.real("const.c1", 1.0), delta=s.real("const.delta", 0.5), C1=s.real("const.C1", 1.0),
        C2=s.real("const.C2", 1.0), C3=s.real("const.C3", 1.0), C4=s.real("const.C4", 1.0))
    if s.text("f.check", "on") != "off":
        cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# Ornstein-Uhlenbeck process

class OUProcess:
    """Stationary solution of dU = a U_xx dt + dW, per mode, truncated at burn_in.

    Each grid step uses the exact OU transition, U(t+dt) = rho U(t) + b kappa dbeta
    with rho = exp(-a lambda dt) and kappa chosen so the stationary variance is
    exactly b^2 / (2 a lambda). The sum is truncated to the last burn_in/dt steps.
    """

    def __init__(self, path, a, burn_in, tol=1e-8):
        self.path = path
        self.a = float(a)
        self.steps = grid_index(burn_in, path.dt, "burn_in")
        self.burn_in = self.steps * path.dt
        self.bounds = np.exp(-a * path.lam * self.burn_in) * path.b / np.sqrt(2 * a * path.lam)
        if np.any(self.bounds * np.sqrt(path.lam) > tol):
            raise ConfigError(f"burn_in={burn_in} leaves an OU truncation error above {tol:g}")
        key = ("ou", self.a, self.steps)
        cache = path._data.cache
        if key not in cache:
            cache[key] = _ou_table(path, self.a, self.steps)
        self.table = cache[key]

    def index_valid(self, i0, i1):
        p = self.path
        p.require(i0, i1)
        if p.position(i0) < self.steps:
            raise WindowExhaustedError(
                f"OU at t={i0 * p.dt:g} needs the window to reach t={i0 * p.dt - self.burn_in:g}")

    def coeffs(self, i0, i1):
        """U at local grid indices i0..i1 inclusive, shape (i1 - i0 + 1, J)."""
        self.index_valid(i0, i1)
        p0 = self.path.position(i0)
        return self.table[p0:p0 + i1 - i0 + 1]


def _ou_table(path, a, L):
    lam, b, dt = path.lam, path.b, path.dt
    vals = path.raw
    J, n = vals.shape
    out = np.full((n, J), np.nan)
    for j in range(J):
        x = a * lam[j] * dt
        rho = math.exp(-x)
        kappa = math.sqrt(-math.expm1(-2 * x) / (2 * x))
        drive = np.zeros(n)
        drive[1:] = b[j] * kappa * np.diff(vals[j])
        y = lfilter([1.0], [1.0, -rho], drive)
        if n > L:
            out[L:, j] = y[L:] - rho ** L * y[:n - L]
    out.flags.writeable = False
    return out


def ou_at(ou, t):
    i = grid_index(t, ou.path.dt)
    return StateVector(ou.coeffs(i, i)[0].copy(), ou.path.lam)


def make_ou(cfg, path):
    _check_path(cfg, path)
    return OUProcess(path, cfg.a, cfg.burn_in, cfg.ou_tol)


def _check_path(cfg, path):
    if path.J != cfg.J:
        raise ConfigError(f"path has {path.J} modes, system has {cfg.J}")
    if not _same_step(path.dt, cfg.dt):
        raise ConfigError(f"path dt={path.dt} differs from integrator dt={cfg.dt}; refine the path")
    if not np.array_equal(path.lam, cfg.lam):
        raise ConfigError("path eigenvalues differ from the system's")


# ---------------------------------------------------------------------------
# Galerkin reaction-diffusion system

class GalerkinSystem:
    """J-mode Galerkin truncation with exponential Euler (IMEX) time stepping.

    One step on u = eps U + v reads
        u+ = eps U+ + E (u - eps U) + Phi (h - P f(u)),
    with E = exp(-a lambda dt) and Phi = (1 - E) / (a lambda). Working on u
    directly makes each step a function of (u, U, U+) only, so time slices
    compose bitwise.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        self.J = cfg.J
        self.lam = cfg.lam
        self.dt = cfg.dt
        self.epsilon = cfg.epsilon
        x = cfg.a * cfg.lam * cfg.dt
        self.E = np.exp(-x)
        self.Phi = -np.expm1(-x) / (cfg.a * cfg.lam)
        M = cfg.collocation
        nodes = np.pi * np.arange(1, M + 1) / (M + 1)
        self.S = math.sqrt(2 / math.pi) * np.sin(np.outer(nodes, np.arange(1, cfg.J + 1)))
        self.ST = np.ascontiguousarray(self.S.T) * (math.pi / (M + 1))
        self._ou = {}

    def nonlinear(self, u):
        """Galerkin projection P f(u) for a batch of coefficient rows."""
        vals = rowdot(u, self.S)
        return rowdot(self.cfg.f(vals), self.ST)

    def ou(self, path):
        """OU process read through this path's origin; the table itself is shared."""
        key = (path.data_key, path._origin)
        if key not in self._ou or self._ou[key].path._data is not path._data:
            if len(self._ou) > 64:
                self._ou.clear()
            self._ou[key] = make_ou(self.cfg, path)
        return self._ou[key]

    def advance(self, u, path, i0, n):
        """n steps from local grid index i0 under `path`; u has shape (N, J)."""
        _check_path(self.cfg, path)
        if self.epsilon != 0.0:
            path.require(i0, i0 + n)
        u = np.array(u, dtype=float)
        if n == 0:
            return u
        eps = self.epsilon
        h, E, Phi = self.cfg.h, self.E, self.Phi
        if eps != 0.0:
            U = eps * self.ou(path).coeffs(i0, i0 + n)
        for k in range(n):
            drift = Phi * (h - self.nonlinear(u))
            if eps != 0.0:
                u = U[k + 1] + E * (u - U[k]) + drift
            else:
                u = E * u + drift
            _guard(u)
        return u

    def advance_v(self, v, path, i0, n):
        """The same scheme written for v = u - eps U."""
        _check_path(self.cfg, path)
        v = np.array(v, dtype=float)
        eps = self.epsilon
        U = eps * self.ou(path).coeffs(i0, i0 + n) if eps != 0.0 else np.zeros((n + 1, self.J))
        for k in range(n):
            v = self.E * v + self.Phi * (self.cfg.h - self.nonlinear(v + U[k]))
            _guard(v)
        return v


def _guard(u):
    if not np.all(np.isfinite(u)) or np.max(np.sum(u * u, axis=-1)) > BLOWUP ** 2:
        raise DivergenceError("H-norm exceeded 1e6; check dissipativity of f or reduce dt")


def evolve_v(cfg, ou, v0, t0, t1):
    """v(t1) from v(t0) = v0 for v' = a v_xx - f(v + eps U) + h."""
    dt = cfg.dt
    i0, i1 = grid_index(t0, dt), grid_index(t1, dt)
    if i1 <= i0:
        raise ConfigError("need t0 < t1")
    sys = GalerkinSystem(cfg)
    sys._ou[(ou.path.data_key, ou.path._origin)] = ou
    batch, single = as_batch(v0)
    out = sys.advance_v(batch, ou.path, i0, i1 - i0)
    return StateVector(out[0], cfg.lam) if single else out


def solve(cfg, path, tau, u0, t):
    """u at time t from u(0) = u0 under the shifted noise theta_tau omega."""
    dt = cfg.dt
    i0, n = grid_index(tau, dt), grid_index(t, dt)
    if n < 0:
        raise ConfigError("need t >= 0")
    batch, single = as_batch(u0)
    out = GalerkinSystem(cfg).advance(batch, path, i0, n)
    return StateVector(out[0], cfg.lam) if single else out


# ---------------------------------------------------------------------------
# absorbing radius

class AbsorbingRadius:
    """R of the random absorbing ball at theta_t omega, for many t on one path.

    R^2 = 8 (1 + C3 + C4 R1 + C2 R2 + S) with
      R1 = C1 int_{-inf}^0 e^{delta s} (1 + |h|_{-1}^2 + |eps U(s + tau0)|_1^{p+1}) ds,
      R2 = int_{-inf}^0 e^{delta (s + 3)} |eps U(s + tau0)|_2^{p+1} ds,
      S  = sup_{s <= 0} e^{delta (s + 2 tau0)} |eps U(s + tau0)|_1^2.
    The constant part of R1 is integrated exactly; the U parts use the trapezoid
    rule on the path grid, cut at the first time the OU process is available.
    """

    def __init__(self, cfg, path, tau0, ou=None):
        self.cfg = cfg
        self.path = path
        self.tau0 = tau0
        self.m0 = grid_index(tau0, path.dt, "tau0")
        h = cfg.h
        self.const = cfg.C1 * (1.0 + float(np.sum(h * h / cfg.lam))) / cfg.delta
        self.eps = cfg.epsilon
        if self.eps != 0.0:
            ou = ou or make_ou(cfg, path)
            lo = path.first_index + ou.steps
            U = self.eps * ou.coeffs(lo, path.last_index)
            self.lo = lo
            self.g1 = weighted_norm(U, cfg.lam, 1)
            self.g2 = weighted_norm(U, cfg.lam, 2)

    def terms(self, t):
        cfg, dt = self.cfg, self.path.dt
        out = {"R1": self.const, "R2": 0.0, "sup": 0.0, "cut_weight": 0.0}
        if self.eps != 0.0:
            top = grid_index(t, dt) + self.m0
            if top > self.path.last_index:
                raise WindowExhaustedError(f"absorbing radius at t={t:g} needs noise up to t+tau0")
            if top <= self.lo:
                raise WindowExhaustedError("no OU history before t + tau0")
            n = top - self.lo + 1
            sigma = (np.arange(n) - (n - 1)) * dt
            w = np.full(n, dt)
            w[0] = w[-1] = dt / 2
            decay = np.exp(cfg.delta * sigma)
            g1, g2 = self.g1[:n], self.g2[:n]
            q = cfg.p + 1
            out["R1"] += cfg.C1 * float(np.sum(w * decay * g1 ** q))
            out["R2"] = math.exp(3 * cfg.delta) * float(np.sum(w * decay * g2 ** q))
            out["sup"] = math.exp(2 * cfg.delta * self.tau0) * float(np.max(decay * g1 ** 2))
            out["cut_weight"] = float(decay[0])
        out["R_squared"] = 8 * (1 + cfg.C3 + cfg.C4 * out["R1"] + cfg.C2 * out["R2"] + out["sup"])
        return out

    def squared(self, t):
        return self.terms(t)["R_squared"]

    def __call__(self, t):
        return math.sqrt(self.squared(t))


def absorbing_radius(cfg, path, tau0, t):
    return AbsorbingRadius(cfg, path, tau0)(t)


# ---------------------------------------------------------------------------
# scalar toy system

class ToySystem:
    """du = (u - u^3) dt + eps dw; one state coordinate with lambda = 1."""

    J = 1
    lam = np.ones(1)

    def __init__(self, epsilon, dt):
        self.epsilon = float(epsilon)
        self.dt = float(dt)
        self._e = math.exp(self.dt / 2)
        self._em1 = math.expm1(self.dt)

    def half_flow(self, u):
        return u * self._e / np.sqrt(1.0 + u * u * self._em1)

    def advance(self, u, path, i0, n):
        if not _same_step(path.dt, self.dt):
            raise ConfigError(f"path dt={path.dt} differs from toy dt={self.dt}")
        u = np.array(u, dtype=float)
        if n == 0:
            return u
        if self.epsilon == 0.0:
            for k in range(n):
                u = self.half_flow(self.half_flow(u))
            return u
        dw = self.epsilon * path.increments(i0, i0 + n)[0]
        for k in range(n):
            u = self.half_flow(u)
            u = u + dw[k]
            u = self.half_flow(u)
        return u


def toy_flow(u, t):
    """Exact solution map of u' = u - u^3."""
    u = np.asarray(u, dtype=float)
    return u * math.exp(t) / np.sqrt(1.0 + u * u * math.expm1(2 * t))


def toy_step(path1d, eps, u0, t0, t1):
    dt = path1d.dt
    i0, i1 = grid_index(t0, dt), grid_index(t1, dt)
    if i1 < i0:
        raise ConfigError("need t0 <= t1")
    single = np.ndim(u0) == 0
    out = ToySystem(eps, dt).advance(np.atleast_1d(u0), path1d, i0, i1 - i0)
    return float(out[0]) if single else out


class PullbackPoint(NamedTuple):
    point: float
    gap: float
    lower: float
    upper: float


def toy_pullback_point(path1d, eps, T_pull, start=3.0):
    """Pull back +-start from -T_pull to 0; the gap of the pair measures collapse."""
    dt = path1d.dt
    n = grid_index(T_pull, dt)
    if n <= 0:
        raise ConfigError("T_pull must be positive")
    path1d.require(-n, 0)
    lo, hi = ToySystem(eps, dt).advance(np.array([-start, start]), path1d, -n, n)
    return PullbackPoint((lo + hi) / 2, hi - lo, lo, hi)
