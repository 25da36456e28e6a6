"""Two-sided Brownian paths per spectral mode and the shift group acting on them.

Increments are generated counter-style: the Gaussian attached to grid interval
i of mode j comes from a block generator keyed by (seed, mode, block of i), so
any window of the same seed sees the same values, and widening a window never
changes the part already sampled.
"""
from __future__ import annotations

import math
import re

import numpy as np

from .errors import AlignmentError, ConfigError, WindowExhaustedError
from .state import StateVector, dirichlet_eigenvalues

BLOCK = 2048
_INCREMENTS = 1
_BRIDGE = 2


def grid_index(x, dt, what="time"):
    """Integer k with x = k*dt, or AlignmentError."""
    q = x / dt
    k = round(q)
    if abs(q - k) > 1e-9 * max(1.0, abs(q)):
        raise AlignmentError(f"{what} {x!r} is not a multiple of dt={dt!r}")
    return int(k)


def _zigzag(i):
    return 2 * i if i >= 0 else -2 * i - 1


def _normals(seed, key, lo, hi, per=1):
    """Standard normals addressed by grid index lo..hi-1, `per` draws per index."""
    out = np.empty((hi - lo, per))
    if hi <= lo:
        return out
    for blk in range(lo // BLOCK, (hi - 1) // BLOCK + 1):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=key + (_zigzag(blk),))
        z = np.random.Generator(np.random.Philox(ss)).standard_normal(BLOCK * per)
        z = z.reshape(BLOCK, per)
        s, e = max(lo, blk * BLOCK), min(hi, (blk + 1) * BLOCK)
        out[s - lo:e - lo] = z[s - blk * BLOCK:e - blk * BLOCK]
    return out


class _PathData:
    """Shared storage of a sampled path. Column c holds the values at absolute
    grid index start + c, anchored so that absolute index 0 carries exactly 0."""

    def __init__(self, seed, dt, b, lam, start, values, lineage=()):
        self.seed = seed
        self.dt = dt
        self.b = b
        self.lam = lam
        self.start = start
        self.values = values
        self.lineage = lineage
        self.cache = {}


class NoisePath:
    """A window of the two-sided path omega, viewed from a time origin.

    Shifting only moves the origin; the stored data is shared, which keeps the
    group law of the shifts exact in floating point.
    """

    def __init__(self, data, origin):
        self._data = data
        self._origin = origin

    # metadata
    @property
    def seed(self):
        return self._data.seed

    @property
    def dt(self):
        return self._data.dt

    @property
    def b(self):
        return self._data.b

    @property
    def lam(self):
        return self._data.lam

    @property
    def J(self):
        return len(self._data.b)

    @property
    def n_points(self):
        return self._data.values.shape[1]

    @property
    def first_index(self):
        """Local grid index of the first stored point (<= 0)."""
        return self._data.start - self._origin

    @property
    def last_index(self):
        return self.first_index + self.n_points - 1

    @property
    def window(self):
        return (self.first_index * self.dt, self.last_index * self.dt)

    @property
    def B3(self):
        return float(np.sum(self.lam ** 3 * self.b ** 2))

    @property
    def data_key(self):
        """Identity of the underlying storage, used by caches of derived processes."""
        return id(self._data)

    # indexing
    def position(self, i):
        """Column in the shared storage of local grid index i."""
        return self._origin - self._data.start + i

    def require(self, i0, i1):
        """Raise WindowExhaustedError unless local indices i0..i1 are stored."""
        if i0 < self.first_index or i1 > self.last_index:
            lo, hi = self.window
            raise WindowExhaustedError(
                f"need t in [{i0 * self.dt:g}, {i1 * self.dt:g}], window is [{lo:g}, {hi:g}]")

    def index_of(self, t):
        return grid_index(t, self.dt)

    @property
    def raw(self):
        """Shared storage values (J, n_points); differences are origin-free."""
        return self._data.values

    def beta(self, i):
        """Path values (beta_j at local grid index i), anchored at the origin."""
        self.require(i, i)
        v = self._data.values
        return v[:, self.position(i)] - v[:, self.position(0)]

    def values(self):
        """All stored values as seen from this origin, shape (J, n_points)."""
        v = self._data.values
        return v - v[:, self.position(0)][:, None]

    def times(self):
        return np.arange(self.first_index, self.last_index + 1) * self.dt

    def increments(self, i0, i1):
        """beta(i+1) - beta(i) for local i in [i0, i1), shape (J, i1 - i0)."""
        self.require(i0, i1)
        p0 = self.position(i0)
        return np.diff(self._data.values[:, p0:p0 + (i1 - i0) + 1], axis=1)

    def __repr__(self):
        lo, hi = self.window
        return f"NoisePath(seed={self.seed}, window=({lo:g}, {hi:g}), dt={self.dt:g}, J={self.J})"


def default_amplitudes(J, decay=4.0):
    return np.arange(1, J + 1, dtype=float) ** (-decay)


def _check_params(J, b, lam):
    if J < 1:
        raise ConfigError("need at least one mode")
    b = np.asarray(default_amplitudes(J) if b is None else b, dtype=float)
    lam = np.asarray(dirichlet_eigenvalues(J) if lam is None else lam, dtype=float)
    if b.shape != (J,) or lam.shape != (J,):
        raise ConfigError("b and lambda must have length J")
    if np.any(b < 0) or np.any(lam <= 0) or np.any(np.diff(lam) <= 0):
        raise ConfigError("need b >= 0 and 0 < lambda strictly increasing")
    b.flags.writeable = False
    lam.flags.writeable = False
    return b, lam


def sample_path(seed, window, dt, J, b=None, lam=None):
    """Sample beta_1..beta_J on the grid of `window` with step dt, anchored at 0."""
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if not dt > 0:
        raise ConfigError("dt must be positive")
    b, lam = _check_params(J, b, lam)
    tmin, tmax = window
    if not tmin <= 0 <= tmax or tmin >= tmax:
        raise ConfigError(f"window {window} must contain 0")
    try:
        imin = grid_index(tmin, dt, "window start")
        imax = grid_index(tmax, dt, "window end")
    except AlignmentError as exc:
        raise ConfigError(str(exc)) from None
    values = np.empty((J, imax - imin + 1))
    sq = math.sqrt(dt)
    for j in range(J):
        inc = sq * _normals(seed, (_INCREMENTS, j), imin, imax)[:, 0]
        fwd = np.cumsum(inc[-imin:])
        bwd = -np.cumsum(inc[:-imin][::-1])[::-1]
        values[j] = np.concatenate([bwd, [0.0], fwd])
    values.flags.writeable = False
    return NoisePath(_PathData(seed, float(dt), b, lam, imin, values), 0)


def shift(path, tau, need=None):
    """theta_tau: the path s -> omega(tau + s) - omega(tau).

    `need` optionally names a time interval that the shifted window must cover.
    """
    k = grid_index(tau, path.dt, "shift")
    path.require(k, k)
    out = NoisePath(path._data, path._origin + k)
    if need is not None:
        out.require(grid_index(need[0], path.dt), grid_index(need[1], path.dt))
    return out


def zeta_at(path, t):
    """Coefficients b_j beta_j(t) of the spatially regular noise."""
    i = grid_index(t, path.dt)
    return StateVector(path.b * path.beta(i), path.lam)


def refine(path, new_dt):
    """Brownian-bridge refinement onto step new_dt; coarse values are kept bitwise."""
    if not new_dt > 0:
        raise ConfigError("new_dt must be positive")
    try:
        q = grid_index(path.dt, new_dt, "dt")
    except AlignmentError:
        raise ConfigError(f"new_dt={new_dt!r} does not divide dt={path.dt!r}") from None
    if q < 1:
        raise ConfigError(f"new_dt={new_dt!r} does not divide dt={path.dt!r}")
    if q == 1:
        return path
    data = path._data
    J, n = data.values.shape
    lineage = data.lineage + (q,)
    fine_dt = data.dt / q
    lo, hi = data.start, data.start + n - 1
    fine = np.empty((J, (n - 1) * q + 1))
    fine[:, ::q] = data.values
    sq = math.sqrt(fine_dt)
    for j in range(J):
        z = sq * _normals(data.seed, (_BRIDGE, j) + lineage, lo, hi, per=q)
        coarse = np.diff(data.values[j])
        sub = z - ((z.sum(axis=1) - coarse) / q)[:, None]
        partial = data.values[j, :-1, None] + np.cumsum(sub[:, :-1], axis=1)
        for m in range(1, q):
            fine[j, m::q] = partial[:, m - 1]
    fine.flags.writeable = False
    new = _PathData(data.seed, fine_dt, data.b, data.lam, lo * q, fine, lineage)
    return NoisePath(new, path._origin * q)


_HEADER = re.compile(
    r"#noisepath v1 seed=(\d+) tmin=(\S+) tmax=(\S+) dt=(\S+) J=(\d+)\s*$")


def dump_path(path, fh):
    """Write the textual path format: one header line, then t, beta_1..beta_J rows."""
    lo, hi = path.window
    fh.write(f"#noisepath v1 seed={path.seed} tmin={lo!r} tmax={hi!r} "
             f"dt={path.dt!r} J={path.J}\n")
    vals = path.values()
    for c, t in enumerate(path.times()):
        fh.write(",".join(f"{x:.17g}" for x in (t, *vals[:, c])) + "\n")


def load_path(fh, b=None, lam=None):
    """Read a dumped path. Amplitudes and eigenvalues are not stored in the
    format; they default to b_j = j^-4 and lambda_j = j^2."""
    m = _HEADER.match(fh.readline())
    if not m:
        raise ConfigError("not a noisepath v1 file")
    seed, J = int(m.group(1)), int(m.group(5))
    tmin, dt = float(m.group(2)), float(m.group(4))
    b, lam = _check_params(J, b, lam)
    rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    if rows.shape[1] != J + 1:
        raise ConfigError(f"expected {J + 1} columns, got {rows.shape[1]}")
    values = np.ascontiguousarray(rows[:, 1:].T)
    values.flags.writeable = False
    start = grid_index(tmin, dt)
    return NoisePath(_PathData(seed, dt, b, lam, start, values, (1,)), 0)
