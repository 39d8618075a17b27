"""Connected-components clustering on the epsilon-ball graph.

Two variants: an exact O(D N^2) depth-first search, and an O(D N K)
incremental scan that is exact whenever epsilon exceeds every
within-component diameter and is below every between-component gap (the
tight-clusters regime produced by mean-shift convergence points).
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InputError
from .kde import as_points

__all__ = ["CcResult", "cc_naive", "cc_tight"]


@dataclass(frozen=True)
class CcResult:
    """Component labels plus one representative point per component."""

    labels: np.ndarray
    representatives: np.ndarray

    @property
    def k(self):
        return self.representatives.shape[0]


def _check_eps(eps):
    eps = float(eps)
    if not eps > 0:
        raise InputError("eps must be positive")
    return eps


def _pairwise(points, metric):
    if metric == "euclidean":
        d2 = ((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=-1)
        return np.sqrt(np.maximum(d2, 0.0))
    n = points.shape[0]
    d = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            d[i, j] = d[j, i] = metric(points[i], points[j])
    return d


def cc_naive(points, eps, metric="euclidean"):
    """Exact components of the graph with an edge wherever d < eps (strict).

    Depth-first search over the implicit adjacency; components are numbered
    by their lowest member index, and that member is the representative, so
    the partition is invariant to point order.
    """
    P = as_points(points)
    eps = _check_eps(eps)
    n = P.shape[0]
    adj = _pairwise(P, metric) < eps
    labels = np.full(n, -1, dtype=np.int64)
    rep_rows = []
    k = 0
    for start in range(n):
        if labels[start] >= 0:
            continue
        rep_rows.append(start)
        stack = [start]
        labels[start] = k
        while stack:
            v = stack.pop()
            for u in np.flatnonzero(adj[v]):
                if labels[u] < 0:
                    labels[u] = k
                    stack.append(int(u))
        k += 1
    return CcResult(labels=labels, representatives=P[rep_rows].copy())


def cc_tight(points, eps, metric="euclidean", hints=None):
    """Incremental components assuming tight, well-separated clusters.

    Each point links to the first existing representative (the first point
    seen in its component) closer than eps; otherwise it starts a new
    component.  ``hints`` optionally gives a component index to try first
    for each point (useful when scanning pixels in raster order).  When the
    tight-clusters assumption is violated the result may differ from
    :func:`cc_naive`.
    """
    P = as_points(points)
    eps = _check_eps(eps)
    if metric == "euclidean":
        labels, rep_idx = _kernels.cc_tight_labels(P, eps, hints)
        return CcResult(labels=labels, representatives=P[rep_idx].copy())
    labels = np.empty(P.shape[0], dtype=np.int64)
    rep_rows = []
    for n in range(P.shape[0]):
        assigned = -1
        for j, r in enumerate(rep_rows):
            if metric(P[n], P[r]) < eps:
                assigned = j
                break
        if assigned < 0:
            rep_rows.append(n)
            assigned = len(rep_rows) - 1
        labels[n] = assigned
    return CcResult(labels=labels, representatives=P[rep_rows].copy())
