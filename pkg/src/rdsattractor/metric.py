"""Exact point-set distances shared by the nets and diagnostics layers.

Every distance is computed as sqrt(sum((x - y)**2)) on metric coordinates;
KD-trees only propose candidates, the final value always comes from this formula.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

_BRUTE = 4_000_000


def metric_coords(points, norm_tag="H", lam=None):
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if norm_tag == "H":
        return pts
    if norm_tag == "V":
        return pts * np.sqrt(np.asarray(lam, dtype=float))
    raise ValueError(f"unknown norm tag {norm_tag!r}")


def pair_distances(A, B):
    """Full distance matrix between rows of A and rows of B."""
    return np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1))


def _brute_min(A, B):
    out = np.empty(len(A))
    arg = np.empty(len(A), dtype=np.intp)
    chunk = max(1, _BRUTE // max(1, B.size))
    for s in range(0, len(A), chunk):
        D = pair_distances(A[s:s + chunk], B)
        arg[s:s + chunk] = np.argmin(D, axis=1)
        out[s:s + chunk] = D[np.arange(len(D)), arg[s:s + chunk]]
    return out, arg


def min_distances(A, B, tree=None):
    """For each row of A, the exact distance to the nearest row of B and its index."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if len(A) == 0:
        return np.empty(0), np.empty(0, dtype=np.intp)
    if tree is None and len(A) * B.size <= _BRUTE:
        return _brute_min(A, B)
    tree = tree or cKDTree(B)
    k = min(8, len(B))
    _, idx = tree.query(A, k=k)
    idx = idx.reshape(len(A), k)
    D = np.sqrt(((A[:, None, :] - B[idx]) ** 2).sum(axis=-1))
    best = np.argmin(D, axis=1)
    out = D[np.arange(len(A)), best]
    arg = idx[np.arange(len(A)), best]
    if k < len(B):
        # rows whose k-th candidate is not clearly farther may hide a tie
        loose = D.max(axis=1) <= out * (1 + 1e-9) + 1e-300
        for i in np.flatnonzero(loose):
            d, a = _brute_min(A[i:i + 1], B)
            out[i], arg[i] = d[0], a[0]
    return out, arg


def directed_distance(A, B):
    """sup over a in A of dist(a, B)."""
    d, _ = min_distances(A, B)
    return float(d.max()) if len(d) else 0.0
