"""Exponential attractors from iterated coverings pushed through a cocycle.

A build anchored at path time 0 sweeps the slots -n..0 (slot s is the time
s*tau0). U_0 nets the absorbing ball at slot -n; then for k = 1..n
    V_k = psi(U_{k-1}),            C_k = union of B_V(v, 2^-k r) over V_k,
    U_k = net of C_k at delta_k,   E_k = V_k  u  psi(E_{k-1}),
and E_n (at slot 0) approximates the attractor within eps_n.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .cocycle import lipschitz_sequence
from .errors import ConfigError, DomainError
from .metric import directed_distance, metric_coords
from .nets import (BallNets, ball_cloud, entropy_estimate, greedy_net, minkowski_net,
                   unique_rows)
from .noise import shift
from .state import weighted_norm
from .systems import AbsorbingRadius, GalerkinSystem, ToySystem


def eps_n_bound(K_seq, r):
    """r * min over l in [1, n] of 2^-l + 2^(2-(n-l)) prod_{j<=l} K_{-j}.

    K_seq[i] is K at slot -n+i, so K_{-j} = K_seq[n-j].
    """
    K = [float(x) for x in K_seq]
    n = len(K)
    if n == 0:
        raise ConfigError("need at least one K value")
    best = math.inf
    prod = 1.0
    for l in range(1, n + 1):
        prod *= K[n - l]
        best = min(best, 2.0 ** -l + 2.0 ** (2 - (n - l)) * prod)
    return r * best


def dimension_bound(xi, m, C_entropy):
    """2^m C xi (ln xi + 2m) / (m ln 2)."""
    if xi < 1:
        raise DomainError("xi must be >= 1")
    if not m > 0 or not C_entropy > 0:
        raise DomainError("need m > 0 and C > 0")
    return 2 ** m * C_entropy * xi * (math.log(xi) + 2 * m) / (m * math.log(2))


def holder_exponent_bound(alpha, xi, m):
    """alpha eta / (eta + 8 zeta), eta = m ln 2 / (2m + log2 xi), zeta = ln(xi) / m."""
    if xi < 1:
        raise DomainError("xi must be >= 1")
    if not 0 < alpha <= 1 or not m > 0:
        raise DomainError("need alpha in (0, 1] and m > 0")
    eta = m * math.log(2) / (2 * m + math.log2(xi))
    zeta = math.log(xi) / m
    return alpha * eta / (eta + 8 * zeta)


@dataclass(eq=False)
class AttractorApprox:
    depth: int
    r: float
    V: list
    E: list
    delta: list
    eps_n: float
    K_seq: np.ndarray
    radii: np.ndarray
    lam: np.ndarray
    base_time: float = 0.0
    tau0: float = 1.0
    violations: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def E_n(self):
        return self.E[-1]

    def slot(self, k):
        """Time slot of V_k and E_k (k = 1..n)."""
        return k - self.depth


def toy_absorbing_radii(rds, n, r, R0=1.1, anchor=None):
    """Forward envelope of absorbing intervals for the toy system.

    The flow is monotone, so psi([-R-r, R+r]) lies in [psi(-R-r), psi(R+r)];
    R_{s+1} = max(R0, |psi_s(+-(R_s + r))|) therefore keeps every image of the
    r-neighbourhood inside the next interval.
    """
    R = [R0 + 2 * abs(rds.system.epsilon) if anchor is None else anchor]
    for s in range(-n, 0):
        ends = rds.step_batch(s, np.array([[-(R[-1] + r)], [R[-1] + r]]))
        R.append(max(R0, float(np.max(np.abs(ends)))))
    return np.array(R)


def default_radii(rds, n, r):
    """Absorbing radii at slots -n..0 for the systems this package ships."""
    sysm = rds.system
    if isinstance(sysm, ToySystem):
        return toy_absorbing_radii(rds, n, r)
    if isinstance(sysm, GalerkinSystem):
        ar = AbsorbingRadius(sysm.cfg, rds.path, rds.tau0)
        return np.array([ar(s * rds.tau0) for s in range(-n, 1)])
    raise ConfigError("no absorbing radius known for this system; pass radii")


class UnitBall:
    """Shared, noise-free sampling of the unit V-ball used for every C_k."""

    def __init__(self, lam, pitch=1 / 256):
        self.lam = np.asarray(lam, dtype=float)
        self.pitch = pitch
        self.cloud = ball_cloud(1.0, self.lam, pitch)

    def scaled(self, rho):
        return self.cloud.like(rho * self.cloud.points)

    def entropy_constant(self, m=1.0, levels=6):
        """Fitted C with H_eps(B_V(1), H) <= C eps^-m over eps in [8 pitch, 1/2]."""
        eps = np.geomspace(8 * self.pitch, 0.5, levels)
        return max(entropy_estimate(self.cloud, e) * e ** m for e in eps)


def build_discrete(rds, depth, r, radii=None, K_seq=None, unit=None, probes=64,
                   probe_seed=0, initial=None, snap=True, keep_u=False):
    """Run the covering sweep over slots -depth..0 and return the approximation.

    radii: absorbing radii at slots -n..0 (default: per-system rule);
    K_seq: Lipschitz constants at slots -n..-1 (default: probed in the balls of
    radius R + r); initial: callable (R, delta) -> Net for U_0 (default: greedy
    net of the lattice sampling of B_V(R)).
    """
    n = int(depth)
    if n < 1 or not r > 0:
        raise ConfigError("need depth >= 1 and r > 0")
    lam = np.asarray(rds.lam, dtype=float)
    J = len(lam)
    radii = default_radii(rds, n, r) if radii is None else np.asarray(radii, dtype=float)
    if len(radii) != n + 1:
        raise ConfigError("need one absorbing radius per slot -n..0")
    if K_seq is None:
        K_seq = lipschitz_sequence(rds, range(-n, 0), radii[:-1] + r, probes, probe_seed).K
    K_seq = np.maximum(1.0, np.asarray(K_seq, dtype=float)[:n])
    if len(K_seq) < n:
        raise ConfigError("K_seq needs one entry per step")
    unit = unit or UnitBall(lam)

    delta0 = r / (2 * K_seq[0])
    if initial is None:
        U = greedy_net(ball_cloud(radii[0], lam, delta0 / 8), delta0).points
    else:
        U = initial(radii[0], delta0).points
    deltas = [delta0]
    V, E, Us, violations = [], [], [U], []
    for k in range(1, n + 1):
        s = k - 1 - n
        if k == 1:
            img = rds.step_batch(s, U)
            Vk, Ek = unique_rows(img), unique_rows(img)
        else:
            img = rds.step_batch(s, np.concatenate([U, E[-1]]))
            Vk = unique_rows(img[:len(U)])
            Ek = unique_rows(np.concatenate([Vk, img[len(U):]]))
        excess = float(np.max(weighted_norm(Vk, lam, 1))) - radii[k]
        if excess > 0:
            violations.append((k, excess))
        V.append(Vk)
        E.append(Ek)
        if k < n:
            rho = 2.0 ** -k * r
            dk = r / (2.0 ** (k + 1) * K_seq[k])
            pitch = dk / math.sqrt(J) if snap else None
            inner = dk / 2 if snap else dk
            U = minkowski_net(Vk, unit.scaled(rho), inner, snap=pitch).points
            deltas.append(dk)
            if keep_u:
                Us.append(U)
    out = AttractorApprox(n, float(r), V, E, deltas, eps_n_bound(K_seq, r), K_seq,
                          radii, lam, base_time=0.0, tau0=rds.tau0, violations=violations)
    out.info["unit_pitch"] = unit.pitch
    if keep_u:
        out.info["U"] = Us
    return out


def semi_invariance_defects(approx, rds):
    """d(psi(E_k), E_{k+1}) for k = 1..n-1; exact zeros when the inclusion holds row-wise."""
    out = []
    for k in range(1, approx.depth):
        img = rds.step_batch(approx.slot(k), approx.E[k - 1])
        target = approx.E[k]
        rows = {row.tobytes() for row in np.ascontiguousarray(target)}
        if all(row.tobytes() in rows for row in np.ascontiguousarray(img)):
            out.append(0.0)
        else:
            out.append(directed_distance(img, target))
    return out


def propagation_defects(approx, rds, pairs, pitch=None):
    """Check d_V(E_k, psi_m(absorbing ball at slot k-m)) against 2^(2-(k-m)) r prod K.

    Returns (k, m, distance, bound) per pair; the ball is the lattice sampling
    of B_V(R) at the given pitch.
    """
    lam = approx.lam
    out = []
    for k, m in pairs:
        if not 0 <= m <= k - 1 or k > approx.depth:
            raise ConfigError(f"bad pair {(k, m)}")
        s0 = approx.slot(k) - m
        R = approx.radii[s0 + approx.depth]
        cloud = ball_cloud(R, lam, pitch or approx.delta[0] / 4).points
        img = rds.step_batch(s0, cloud, m) if m else cloud
        d = directed_distance(metric_coords(approx.E[k - 1], "V", lam), metric_coords(img, "V", lam))
        prod = float(np.prod(approx.K_seq[approx.depth + approx.slot(k) - m:approx.depth + approx.slot(k)]))
        out.append((k, m, d, 2.0 ** (2 - (k - m)) * approx.r * prod))
    return out


@dataclass
class DimensionReport:
    xi: float
    m: float
    C_entropy: float
    d_bound: float
    eps_grid: np.ndarray
    counts: np.ndarray
    fitted_dim: float


def dimension_report(approx, unit, m=1.0, eps_lo=None, eps_hi=None, levels=6):
    from .diagnostics import birkhoff_mean, box_dimension
    _, xi, _ = birkhoff_mean(approx.K_seq, m)
    C = unit.entropy_constant(m)
    lo = eps_lo or max(approx.delta[-1], 1e-3)
    hi = eps_hi or 0.25
    dim, _, grid, counts = box_dimension(approx.E_n, lo, hi, levels)
    return DimensionReport(xi, m, C, dimension_bound(max(1.0, xi), m, C), grid, counts, dim)


# ---------------------------------------------------------------------------
# parameter family

def build_param_family(make_rds, eps_grid, depth, r, radii_for=None, unit=None,
                       ball_nets=None, R_max=None, probes=64, probe_seed=0):
    """One build per epsilon on a shared path with shared, noise-free net machinery.

    make_rds(eps) returns the DiscreteRDS of the family member. U_0 comes from
    the parameter net of B_V(R) over R, the C_k nets from one unit-ball cloud,
    and probe points are the same for every member, so the eps = 0 member does
    not depend on the path at all.
    """
    members = {}
    first = make_rds(eps_grid[0])
    lam = np.asarray(first.lam, dtype=float)
    unit = unit or UnitBall(lam)
    radii = {}
    for eps in eps_grid:
        rds = first if eps == eps_grid[0] else make_rds(eps)
        radii[eps] = (radii_for(rds) if radii_for else default_radii(rds, depth, r))
        members[eps] = rds
    if ball_nets is None:
        R_top = R_max or max(float(v[0]) for v in radii.values())
        ball_nets = BallNets(lam, R_top)
    out = {}
    for eps in eps_grid:
        out[eps] = build_discrete(members[eps], depth, r, radii=radii[eps], unit=unit,
                                  probes=probes, probe_seed=probe_seed, initial=ball_nets)
    return out


# ---------------------------------------------------------------------------
# continuous time

def lift_continuous(discrete, builder, system, path, tau_samples):
    """Union over tau in {0, tau0/m, ..} of phi_tau^{theta_-tau w}(M_{theta_-tau w}).

    builder(shifted_path) must return the discrete approximation anchored at the
    origin of that path. Returns (points, provenance index of tau per point).
    """
    if tau_samples < 1:
        raise ConfigError("tau_samples must be >= 1")
    tau0 = discrete.tau0
    steps = round(tau0 / system.dt)
    if steps % tau_samples:
        raise ConfigError("tau_samples must divide the number of integrator steps per period")
    pts, prov = [discrete.E_n], [np.zeros(len(discrete.E_n), dtype=int)]
    for i in range(1, tau_samples):
        n = i * steps // tau_samples
        tau = n * system.dt
        back = shift(path, -tau)
        M = builder(back).E_n
        pts.append(system.advance(M, back, 0, n))
        prov.append(np.full(len(M), i))
    return np.concatenate(pts), np.concatenate(prov)


# ---------------------------------------------------------------------------
# dumps

def _write_rows(fname, rows):
    J = rows.shape[1]
    with open(fname, "w") as fh:
        fh.write(",".join(f"coeff_{j + 1}" for j in range(J)) + "\n")
        for row in rows:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def dump_attractor(approx, out_dir, seed=None, config_hash=None):
    os.makedirs(out_dir, exist_ok=True)
    for k in range(1, approx.depth + 1):
        _write_rows(os.path.join(out_dir, f"V_{k}.csv"), approx.V[k - 1])
        _write_rows(os.path.join(out_dir, f"E_{k}.csv"), approx.E[k - 1])
    lines = {
        "depth": approx.depth,
        "r": repr(approx.r),
        "eps_n": repr(approx.eps_n),
        "K_seq": ",".join(repr(float(x)) for x in approx.K_seq),
        "delta": ",".join(repr(float(x)) for x in approx.delta),
        "radii": ",".join(repr(float(x)) for x in approx.radii),
        "tau0": repr(approx.tau0),
        "base_time": repr(approx.base_time),
        "seed": seed if seed is not None else "",
        "config_hash": config_hash or "",
        "violations": len(approx.violations),
    }
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        for k, v in lines.items():
            fh.write(f"{k} = {v}\n")


def load_rows(fname):
    return np.loadtxt(fname, delimiter=",", skiprows=1, ndmin=2)
