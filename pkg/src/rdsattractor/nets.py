"""Finite coverings: greedy nets, parameter-Lipschitz net families and
Minkowski-sum nets of point clouds in H or V metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ConfigError, DomainError, EmptyInputError
from .metric import directed_distance, metric_coords, min_distances, pair_distances


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    norm_tag: str = "H"
    lam: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        object.__setattr__(self, "points", pts)
        if self.norm_tag not in ("H", "V"):
            raise ConfigError(f"norm tag must be H or V, got {self.norm_tag!r}")
        if self.norm_tag == "V" and self.lam is None:
            raise ConfigError("a V-norm cloud needs eigenvalues")

    def __len__(self):
        return len(self.points)

    @property
    def dim(self):
        return self.points.shape[1]

    def coords(self):
        return metric_coords(self.points, self.norm_tag, self.lam)

    def like(self, points):
        return PointCloud(points, self.norm_tag, self.lam)


def as_cloud(x, norm_tag="H", lam=None):
    return x if isinstance(x, PointCloud) else PointCloud(x, norm_tag, lam)


@dataclass(eq=False)
class Net:
    centers: PointCloud
    delta: float
    parent_size: int
    indices: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.centers)

    @property
    def points(self):
        return self.centers.points

    @property
    def entropy(self):
        return math.log(len(self.centers))


def covering_radius(parent, centers):
    """max over parent points of the distance to the nearest center (exact)."""
    parent, centers = as_cloud(parent), as_cloud(centers)
    if len(parent) == 0:
        return 0.0
    return directed_distance(parent.coords(), centers.like(centers.points).coords())


# ---------------------------------------------------------------------------
# greedy nets

_CHUNK = 512


def _greedy_indices(X, delta):
    """Sequential greedy selection in index order, evaluated block-wise."""
    n = len(X)
    centers = []
    tree, tree_count = None, 0
    tree_pts = None
    recent = []
    for start in range(0, n, _CHUNK):
        Q = X[start:start + _CHUNK]
        alive = np.ones(len(Q), dtype=bool)
        if tree is not None:
            d, _ = min_distances(Q, tree_pts, tree)
            alive &= d > delta
        if recent and alive.any():
            d, _ = min_distances(Q[alive], X[recent])
            alive[alive] = d > delta
        idx = np.flatnonzero(alive)
        if idx.size:
            D = pair_distances(Q[idx], Q[idx])
            covered = np.zeros(idx.size, dtype=bool)
            for a in range(idx.size):
                if covered[a]:
                    continue
                centers.append(start + idx[a])
                recent.append(start + idx[a])
                covered |= D[a] <= delta
        if len(recent) > max(256, tree_count // 2):
            tree_count = len(centers)
            tree_pts = X[centers]
            tree = cKDTree(tree_pts)
            recent = []
    return np.array(centers, dtype=np.intp)


def greedy_net(cloud, delta):
    """A point becomes a center iff it is farther than delta from all earlier centers."""
    cloud = as_cloud(cloud)
    if len(cloud) == 0:
        raise EmptyInputError("cannot cover an empty cloud")
    if not delta > 0:
        raise ConfigError("delta must be positive")
    idx = _greedy_indices(cloud.coords(), float(delta))
    return Net(cloud.like(cloud.points[idx]), float(delta), len(cloud), idx)


def entropy_estimate(cloud, eps):
    return greedy_net(cloud, eps).entropy


def unique_rows(points):
    """Drop exact duplicate rows, keeping first occurrences in their original order."""
    pts = np.ascontiguousarray(points)
    if len(pts) < 2:
        return pts
    _, first = np.unique(pts, axis=0, return_index=True)
    return pts[np.sort(first)]


def snap_to_lattice(points, pitch):
    """Round every coordinate to the lattice pitch * Z^J and drop duplicates."""
    return unique_rows(np.round(np.asarray(points) / pitch) * pitch)


# ---------------------------------------------------------------------------
# barycentric weights and blends

def barycentric_weights(rect, A):
    """Area weights of A in the rectangle ((x0, x1), (y0, y1)).

    Vertices are ordered A1=(x0,y0), A2=(x1,y0), A3=(x1,y1), A4=(x0,y1); the
    weight of A_i is the area of the sub-rectangle cut by A opposite to A_i.
    """
    (x0, x1), (y0, y1) = rect
    x, y = A
    if not (x0 < x1 and y0 < y1):
        raise DomainError("degenerate rectangle")
    if not (x0 <= x <= x1 and y0 <= y <= y1):
        raise DomainError(f"point {A} outside rectangle {rect}")
    area = (x1 - x0) * (y1 - y0)
    return np.array([(x1 - x) * (y1 - y), (x - x0) * (y1 - y),
                     (x - x0) * (y - y0), (x1 - x) * (y - y0)]) / area


def barycentric_lipschitz(rect):
    """Constant L with max_i |theta_i(A) - theta_i(B)| <= L max(|dx|, |dy|)."""
    (x0, x1), (y0, y1) = rect
    w, h = x1 - x0, y1 - y0
    return (w + h) / (w * h)


def _row_distances(X, Y):
    return np.sqrt(((X - Y) ** 2).sum(axis=-1))


def _neighbours(A, B, alpha):
    """Sorted indices of rows of B within alpha of each row of A (exact distances)."""
    tree = cKDTree(B)
    out = []
    for i, cand in enumerate(tree.query_ball_point(A, alpha * (1 + 1e-9) + 1e-300)):
        cand = np.sort(np.asarray(cand, dtype=np.intp))
        out.append(cand[_row_distances(A[i], B[cand]) <= alpha])
    return out


_MAX_TUPLES = 20_000_000


def compatible_tuples(W, alpha):
    """Index tuples (i_1..i_n), lexicographic, whose members are pairwise within alpha."""
    W = [_rows(w) for w in W]
    tuples = np.arange(len(W[0]))[:, None]
    for b in range(1, len(W)):
        nb = _neighbours(W[0], W[b], alpha)
        counts = np.array([len(nb[i]) for i in tuples[:, 0]], dtype=np.intp)
        if counts.sum() > _MAX_TUPLES:
            raise ConfigError(f"blend needs more than {_MAX_TUPLES} candidate tuples; "
                              "use a coarser delta or fewer dimensions")
        rep = np.repeat(np.arange(len(tuples)), counts)
        cand = (np.concatenate([nb[i] for i in tuples[:, 0]]) if len(rep)
                else np.empty(0, dtype=np.intp))
        ok = np.ones(len(rep), dtype=bool)
        for a in range(1, b):
            ok &= _row_distances(W[a][tuples[rep, a]], W[b][cand]) <= alpha
        tuples = np.column_stack([tuples[rep[ok]], cand[ok]])
    return tuples


def _rows(w):
    w = np.asarray(w, dtype=float)
    return w[:, None] if w.ndim == 1 else w


def blend_points(W, tuples, theta):
    W = [_rows(w) for w in W]
    J = W[0].shape[1]
    out = np.zeros((len(tuples), J))
    for i, w in enumerate(W):
        out = out + theta[i] * w[tuples[:, i]]
    return out


def blend_nets(W, theta, alpha):
    """[W_1..W_n]^alpha_theta: sum theta_i u_i over pairwise alpha-close tuples."""
    W = [_rows(w) for w in W]
    theta = np.asarray(theta, dtype=float)
    if len(theta) != len(W):
        raise ConfigError("need one weight per set")
    if np.any(theta < 0) or abs(theta.sum() - 1.0) > 1e-12:
        raise ConfigError("weights must lie in the simplex")
    if any(len(w) == 0 for w in W):
        return np.empty((0, W[0].shape[1]))
    tuples = compatible_tuples(W, alpha)
    return unique_rows(blend_points(W, tuples, theta))


# ---------------------------------------------------------------------------
# parameter-Lipschitz nets

def dyadic_level(delta):
    """The k >= 1 with 2^-k < delta <= 2^(1-k)."""
    if not 0 < delta <= 1:
        raise DomainError("delta must lie in (0, 1]")
    m, e = math.frexp(delta)
    return 2 - e if m == 0.5 else 1 - e


def grid_count(C, k):
    """N_k = 1/nu_k for the largest nu_k < 2^(-k-4)/C with 1/nu_k an integer."""
    return math.floor(C * 2 ** (k + 4)) + 1


class ParamNetFamily:
    """Nets of a family of clouds A^y, Lipschitz in y, built from a dyadic grid.

    family(y) returns the PointCloud sampling A^y; C bounds d^s(A^y1, A^y2)/|y1 - y2|.
    Corner nets are cached, so sweeping y reuses them.
    """

    def __init__(self, family, C, interval):
        self.family = family
        self.C = max(1.0, float(C))
        self.interval = interval
        self._nets = {}

    def corner(self, N, j, level):
        key = (N, j, level)
        if key not in self._nets:
            self._nets[key] = greedy_net(self.family(j / N), 2.0 ** (-level - 3))
        return self._nets[key]

    def cell(self, delta, y):
        lo, hi = self.interval
        if not lo <= y <= hi:
            raise DomainError(f"y={y} outside {self.interval}")
        k = dyadic_level(delta)
        N = grid_count(self.C, k)
        j = math.floor(y * N)
        if j / N > y:
            j -= 1
        return k, N, j

    def __call__(self, delta, y):
        k, N, j = self.cell(delta, y)
        rect = ((2.0 ** -k, 2.0 ** (1 - k)), (j / N, (j + 1) / N))
        theta = barycentric_weights(rect, (delta, y))
        W = [self.corner(N, j, k + 1), self.corner(N, j, k),
             self.corner(N, j + 1, k), self.corner(N, j + 1, k + 1)]
        centers = blend_nets([w.points for w in W], theta, 2.0 ** (-k - 1))
        cloud = self.family(y)
        info = {"k": k, "N": N, "j": j, "theta": theta,
                "corner_sizes": [len(w) for w in W],
                "log_size_bound": sum(w.entropy for w in W)}
        return Net(cloud.like(centers), float(delta), len(cloud), None, info)


def param_net(family, delta, y, C=1.0, interval=(0.0, 1.0)):
    return ParamNetFamily(family, C, interval)(delta, y)


def certify(net, cloud):
    """Measured covering radius of the cloud by the net, stored in net.info."""
    net.info["covering_radius"] = covering_radius(cloud, net.centers)
    net.info["hausdorff"] = max(net.info["covering_radius"],
                                directed_distance(net.centers.coords(), as_cloud(cloud).coords()))
    return net.info["covering_radius"]


# ---------------------------------------------------------------------------
# balls of V in the H metric

def ball_cloud(R, lam, pitch, max_points=400_000):
    """Canonical lattice sampling of B_V(R) = {sum lam_j c_j^2 <= R^2}.

    Lattice pitch * Z^J intersected with the ellipsoid, plus the two end points
    of every semi-axis. Modes whose semi-axis is below pitch/2 stay at 0.
    """
    lam = np.asarray(lam, dtype=float)
    J = len(lam)
    if R <= 0:
        return PointCloud(np.zeros((1, J)), "H", lam)
    semi = R / np.sqrt(lam)
    counts = np.floor(semi / pitch + 1e-12).astype(int)
    total = float(np.prod(2.0 * counts + 1))
    if total > 8 * max_points:
        raise ConfigError(f"lattice of B_V({R:g}) at pitch {pitch:g} is too large ({total:.3g} points)")
    axes = [np.arange(-c, c + 1) * pitch for c in counts]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, J)
    inside = (grid * grid * lam).sum(axis=1) <= R * R
    pts = grid[inside]
    ends = []
    for j in range(J):
        if semi[j] > counts[j] * pitch:
            e = np.zeros(J)
            e[j] = semi[j]
            ends += [-e, e]
    if ends:
        pts = np.concatenate([pts, np.array(ends)])
    if len(pts) > max_points:
        raise ConfigError(f"B_V({R:g}) sampling has {len(pts)} points (limit {max_points})")
    return PointCloud(pts, "H", lam)


def ball_resolution(R, lam, pitch):
    """Upper bound on d_H(B_V(R), ball_cloud(R, lam, pitch))."""
    lam = np.asarray(lam, dtype=float)
    semi = R / np.sqrt(lam)
    active = semi >= pitch
    tail = float(np.sqrt(np.sum(semi[~active] ** 2)))
    return pitch * math.sqrt(max(1, active.sum())) + tail


class BallNets:
    """ball_net for many radii with shared corner nets (one per delta level)."""

    def __init__(self, lam, R_max, pitch_factor=1 / 64, snap=True):
        self.lam = np.asarray(lam, dtype=float)
        self.R_max = float(R_max)
        self.pitch_factor = pitch_factor
        self.snap = snap
        self.C = max(1.0, float(1 / math.sqrt(self.lam[0])))
        self._families = {}

    def _family(self, level):
        if level not in self._families:
            pitch = 2.0 ** (-level) * self.pitch_factor
            scale = self.R_max
            fam = ParamNetFamily(lambda y, p=pitch: ball_cloud(y * scale, self.lam, p),
                                 self.C * scale, (0.0, 1.0))
            self._families[level] = fam
        return self._families[level]

    def __call__(self, R, delta):
        if not 0 < delta <= 1:
            raise DomainError("delta must lie in (0, 1]")
        if not 0 <= R <= self.R_max:
            raise DomainError(f"R={R} outside [0, {self.R_max}]")
        if R == 0:
            return Net(PointCloud(np.zeros((1, len(self.lam))), "H", self.lam), delta, 1)
        inner = delta / 2 if self.snap else delta
        fam = self._family(dyadic_level(inner))
        net = fam(inner, R / self.R_max)
        if self.snap:
            d = len(self.lam)
            pts = snap_to_lattice(net.points, delta / (2 * math.sqrt(d)))
            net = Net(net.centers.like(pts), delta, net.parent_size, None, net.info)
        net.info["R"] = R
        return net


def ball_net(R, delta, lam, R_max=None, snap=True, pitch_factor=1 / 64):
    """H-net of B_V(R), built as a parameter net over R (deterministic, noise-free)."""
    return BallNets(lam, R_max or max(R, 1e-300), pitch_factor, snap)(R, delta)


# ---------------------------------------------------------------------------
# Minkowski sums

def minkowski_net(V_set, K_cloud, delta, snap=None):
    """Net of the union of v + K over v in V_set: V_set + greedy_net(K_cloud, delta).

    With snap=pitch the sums are rounded to a lattice and deduplicated; the
    covering radius grows by at most pitch * sqrt(J) / 2.
    """
    K_cloud = as_cloud(K_cloud)
    V = np.atleast_2d(np.asarray(V_set, dtype=float))
    if len(V) == 0 or len(K_cloud) == 0:
        raise EmptyInputError("minkowski_net needs non-empty inputs")
    inner = greedy_net(K_cloud, delta)
    pts = (V[:, None, :] + inner.points[None, :, :]).reshape(-1, V.shape[1])
    radius = float(delta)
    if snap:
        pts = snap_to_lattice(pts, snap)
        radius += snap * math.sqrt(V.shape[1]) / 2
    info = {"inner_size": len(inner), "log_size_bound": math.log(len(V)) + inner.entropy}
    return Net(K_cloud.like(pts), radius, len(V) * len(K_cloud), None, info)


def dump_net(net, fh):
    """CSV: a header comment with delta, parent_size and entropy, then centers."""
    J = net.centers.dim
    fh.write(f"# delta={net.delta!r} parent_size={net.parent_size} entropy={net.entropy!r}\n")
    fh.write("center_index," + ",".join(f"coeff_{j + 1}" for j in range(J)) + "\n")
    for i, row in enumerate(net.points):
        fh.write(f"{i}," + ",".join(f"{x:.17g}" for x in row) + "\n")


# ---------------------------------------------------------------------------
# property battery

def _ds(A, B):
    return max(directed_distance(A, B), directed_distance(B, A))


def property_battery(cases=100, seed=0):
    """Randomized checks of the covering machinery. Returns {name: (cases, failures)}."""
    tally = {}

    def record(name, ok):
        c, f = tally.get(name, (0, 0))
        tally[name] = (c + 1, f + (not ok))

    for case in range(cases):
        rng = np.random.default_rng([seed, case])
        n = int(rng.integers(1, 501))
        d = int(rng.integers(1, 9))
        if case % 3 == 0:
            X = rng.integers(-4, 5, size=(n, d)).astype(float)
        else:
            X = rng.normal(size=(n, d))
        delta = float(rng.uniform(0.05, 2.0))
        net = greedy_net(X, delta)
        record("greedy_covering", covering_radius(X, net.points) <= delta)
        record("greedy_centers_in_parent", np.array_equal(net.points, X[net.indices]))
        coarse = greedy_net(X, 2 * delta)
        record("entropy_monotone", coarse.entropy <= net.entropy)

        x0, y0 = rng.normal(size=2)
        w, h = rng.uniform(0.01, 3.0, size=2)
        A = (x0 + w * rng.random(), y0 + h * rng.random())
        th = barycentric_weights(((x0, x0 + w), (y0, y0 + h)), A)
        verts = np.array([[x0, y0], [x0 + w, y0], [x0 + w, y0 + h], [x0, y0 + h]])
        record("barycentric_identities",
               abs(th.sum() - 1) <= 1e-12 and np.max(np.abs(th @ verts - A)) <= 1e-12 * max(1, np.abs(A).max())
               and th.min() >= 0)

        m = int(rng.integers(1, 5))
        W = [rng.normal(size=(int(rng.integers(1, 7)), d)) for _ in range(m)]
        alpha = float(rng.uniform(0.5, 3.0))
        t1, t2 = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(m))
        B1, B2 = blend_nets(W, t1, alpha), blend_nets(W, t2, alpha)
        record("blend_cardinality", len(B1) <= np.prod([len(x) for x in W]))
        if len(B1):
            dist = _ds(B1, B2)
            slack = 1e-12 * (1 + alpha)
            if m <= 2:
                # with two sets the max and total-variation forms coincide
                record("blend_lipschitz_max", dist <= alpha * np.abs(t1 - t2).max() + slack)
            record("blend_lipschitz_tv", dist <= alpha * 0.5 * np.abs(t1 - t2).sum() + slack)

        # dyadic coordinates keep every sum exact, so (5.22) can be checked without slack
        V1 = rng.integers(-64, 65, size=(int(rng.integers(1, 21)), d)) / 64
        V2 = rng.integers(-64, 65, size=(int(rng.integers(1, 21)), d)) / 64
        K = rng.integers(-32, 33, size=(int(rng.integers(1, 21)), d)) / 64
        kd = float(rng.uniform(0.05, 1.0))
        M1, M2 = minkowski_net(V1, K, kd), minkowski_net(V2, K, kd)
        record("minkowski_distance", _ds(M1.points, M2.points) <= _ds(V1, V2))
        inner = greedy_net(K, kd)
        record("minkowski_size", len(M1) <= len(V1) * len(inner)
               and math.log(len(M1)) <= math.log(len(V1)) + inner.entropy + 1e-12)
        parent = (V1[:, None, :] + K[None, :, :]).reshape(-1, d)
        record("minkowski_covering", covering_radius(parent, M1.points) <= kd)
    return tally
