"""K-modes and Laplacian K-modes clustering.

K-modes keeps K-means' hard assignments but moves each centroid uphill on
the KDE of its own cluster, so centroids are density modes.  Laplacian
K-modes relaxes the assignments to the probability simplex and adds a graph
penalty that makes neighboring points agree, turning the assignment step
into a convex quadratic program solved here by projected gradient.  Both
train along a homotopy: a K-means stage first (the infinite-bandwidth
limit), then decreasing bandwidths.
"""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from . import _kernels
from .errors import InputError
from .kde import as_points

__all__ = [
    "simplex_project",
    "simplex_project_rows",
    "AffinityGraph",
    "build_knn_graph",
    "homotopy_schedule",
    "KModesConfig",
    "KModesResult",
    "kmodes_objective",
    "kmodes_fit",
    "LapKModesResult",
    "lap_kmodes_objective",
    "lap_kmodes_assignment_step",
    "lap_kmodes_fit",
    "lap_kmodes_out_of_sample",
]

log = logging.getLogger(__name__)


def simplex_project(v):
    """Euclidean projection of a vector onto {z >= 0, sum z = 1}."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if not np.isfinite(v).all():
        raise InputError("cannot project non-finite values")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.flatnonzero(u * np.arange(1, v.size + 1) > css)[-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def simplex_project_rows(V):
    """Row-wise simplex projection of an (N, K) matrix."""
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    ranks = np.arange(1, V.shape[1] + 1)
    cond = U * ranks > css
    rho = V.shape[1] - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(V.shape[0]), rho] / (rho + 1.0)
    return np.maximum(V - theta[:, None], 0.0)


@dataclass(frozen=True, eq=False)
class AffinityGraph:
    """Sparse symmetric nonnegative affinities with zero diagonal."""

    weights: sp.csr_matrix

    def __post_init__(self):
        W = sp.csr_matrix(self.weights)
        if W.shape[0] != W.shape[1]:
            raise InputError("affinity matrix must be square")
        if (W.data < 0).any():
            raise InputError("affinities must be nonnegative")
        if abs(W - W.T).max() > 1e-9:
            raise InputError("affinity matrix must be symmetric")
        W = W.tolil()
        W.setdiag(0.0)
        object.__setattr__(self, "weights", W.tocsr())

    @property
    def n(self):
        return self.weights.shape[0]

    @property
    def degrees(self):
        return np.asarray(self.weights.sum(axis=1)).ravel()

    def laplacian(self):
        """L = D - W, positive semidefinite."""
        return sp.diags(self.degrees) - self.weights


def build_knn_graph(X, k=10, bandwidth=1.0):
    """Symmetric k-nearest-neighbor graph with Gaussian edge weights."""
    X = as_points(X)
    n = X.shape[0]
    k = int(k)
    if not 1 <= k < n:
        raise InputError("neighbor count must satisfy 1 <= k < N")
    bandwidth = float(bandwidth)
    if bandwidth <= 0:
        raise InputError("bandwidth must be positive")
    tree = cKDTree(X)
    d, idx = tree.query(X, k=k + 1)
    d, idx = d[:, 1:], idx[:, 1:]  # drop self matches
    w = np.exp(-0.5 * (d / bandwidth) ** 2)
    rows = np.repeat(np.arange(n), k)
    W = sp.csr_matrix((w.ravel(), (rows, idx.ravel())), shape=(n, n))
    W = W.maximum(W.T)
    return AffinityGraph(weights=W)


def homotopy_schedule(X, sigma, stages=10):
    """Geometric bandwidth ladder from the data diameter down to sigma."""
    X = as_points(X)
    sigma = float(sigma)
    if sigma <= 0:
        raise InputError("bandwidth must be positive")
    diam = float(np.linalg.norm(X.max(axis=0) - X.min(axis=0)))
    if diam <= sigma or stages < 2:
        return np.array([sigma])
    return np.geomspace(diam, sigma, stages)


@dataclass(frozen=True)
class KModesConfig:
    max_rounds: int = 30
    rounds_tol: float = 1e-6
    centroid_tol: float = 1e-8
    centroid_max_iter: int = 1000
    qp_tol: float = 1e-9
    pg_tol: float = 1e-6
    qp_max_iter: int = 5000


def _similarities(X, C, sigma):
    """g_{nk} = exp(-||x_n - c_k||^2 / (2 sigma^2))."""
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=-1)
    return np.exp(-0.5 * d2 / sigma**2), d2


def _one_hot(labels, k):
    Z = np.zeros((labels.size, k))
    Z[np.arange(labels.size), labels] = 1.0
    return Z


def _check_hard(Z, n, k):
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape != (n, k):
        raise InputError(f"assignment matrix must be ({n}, {k})")
    if not ((Z == 0) | (Z == 1)).all() or not (Z.sum(axis=1) == 1).all():
        raise InputError("hard assignments need exactly one 1 per row")
    return Z


def kmodes_objective(data, Z, C, sigma):
    """Mean per-point similarity to the assigned centroid,
    (1/N) sum_nk z_nk exp(-||x_n - c_k||^2 / (2 sigma^2))."""
    X = as_points(data)
    C = as_points(C, "centroids")
    Z = _check_hard(Z, X.shape[0], C.shape[0])
    g, _ = _similarities(X, C, float(sigma))
    return float((Z * g).sum() / X.shape[0])


def _farthest_point_order(X, first):
    """Greedy max-min ordering of points starting from index `first`."""
    n = X.shape[0]
    order = [first]
    d2 = ((X - X[first]) ** 2).sum(axis=1)
    for _ in range(n - 1):
        nxt = int(np.argmax(d2))
        order.append(nxt)
        d2 = np.minimum(d2, ((X - X[nxt]) ** 2).sum(axis=1))
    return np.array(order)


def _seed_centroids(X, k):
    first = int(np.argmin(((X - X.mean(axis=0)) ** 2).sum(axis=1)))
    return X[_farthest_point_order(X, first)[:k]].copy()


def _reseed_empty(X, C, labels, empties):
    """Move each empty centroid to the point farthest from every centroid."""
    for k_empty in empties:
        d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=-1).min(axis=1)
        n_star = int(np.argmax(d2))
        C[k_empty] = X[n_star]
        labels[n_star] = k_empty
        log.info("re-seeded empty cluster %d at point %d", k_empty, n_star)
    return C, labels


def _kmeans_stage(X, C, cfg):
    labels = None
    for _ in range(cfg.max_rounds):
        d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=-1)
        new_labels = d2.argmin(axis=1)
        empties = [j for j in range(C.shape[0]) if not (new_labels == j).any()]
        if empties:
            C, new_labels = _reseed_empty(X, C.copy(), new_labels, empties)
        if labels is not None and (new_labels == labels).all():
            break
        labels = new_labels
        for j in range(C.shape[0]):
            C[j] = X[labels == j].mean(axis=0)
    return labels, C


@dataclass(frozen=True, eq=False)
class KModesResult:
    labels: np.ndarray
    centers: np.ndarray
    objective_history: list
    reseeded: bool

    @property
    def assignments(self):
        return _one_hot(self.labels, self.centers.shape[0])


def kmodes_fit(data, k, sigmas=None, cfg=None, init=None):
    """Alternating hard assignment and per-cluster mode seeking.

    Stage one is plain K-means (the infinite-bandwidth limit); afterwards
    each bandwidth of the descending ``sigmas`` ladder alternates (a)
    nearest-centroid assignment with (b) moving each centroid uphill on the
    KDE of its own cluster's points.  ``objective_history`` holds, per
    finite-bandwidth stage, the objective value after every half step
    (assignment, then centroid update), which is non-decreasing while no
    empty-cluster re-seeding occurs.
    """
    X = as_points(data)
    n = X.shape[0]
    k = int(k)
    if not 1 <= k <= n:
        raise InputError("cluster count must satisfy 1 <= K <= N")
    cfg = cfg or KModesConfig()
    if sigmas is None:
        sigmas = np.empty(0)
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=np.float64))
    if sigmas.size and ((sigmas <= 0).any() or (np.diff(sigmas) > 0).any()):
        raise InputError("bandwidth schedule must be positive and non-increasing")
    if init is None:
        C = _seed_centroids(X, k)
    else:
        C = np.array(init, dtype=np.float64, copy=True)
        if C.ndim == 1:
            C = C[:, None]
    if C.shape != (k, X.shape[1]):
        raise InputError("initial centroids must be a (K, D) array")

    labels, C = _kmeans_stage(X, C, cfg)
    history = []
    reseeded = False
    for sigma in sigmas:
        stage_vals = []
        for _ in range(cfg.max_rounds):
            g, d2 = _similarities(X, C, sigma)
            new_labels = d2.argmin(axis=1)
            empties = [j for j in range(k) if not (new_labels == j).any()]
            if empties:
                reseeded = True
                C, new_labels = _reseed_empty(X, C.copy(), new_labels, empties)
            stage_vals.append(
                kmodes_objective(X, _one_hot(new_labels, k), C, sigma)
            )
            changed = labels is None or (new_labels != labels).any()
            labels = new_labels
            for j in range(k):
                C[j] = _ascend_centroid(X[labels == j], None, sigma, C[j], cfg)
            stage_vals.append(kmodes_objective(X, _one_hot(labels, k), C, sigma))
            if not changed:
                break
        history.append(np.asarray(stage_vals))
    return KModesResult(
        labels=labels, centers=C, objective_history=history, reseeded=reseeded
    )


def _ascend_centroid(X, logw, sigma, c0, cfg):
    """Move a centroid uphill on its cluster's (weighted) KDE.

    Seeks from the current centroid; if that run ends on a stationary point
    that is not a mode (a symmetric centroid can sit exactly on a density
    minimum once the bandwidth drops below the split scale), restart from
    the highest-density support point.  Both cases leave the cluster's
    density term no worse.
    """
    from . import kde as _kde
    from .seek import MsConfig, TraceStatus, find_mode

    weights = None if logw is None else np.exp(logw - logw.max())
    model = _kde.KdeModel(X, _kde.Kernel.GAUSSIAN, sigma, weights=weights)
    ms_cfg = MsConfig(tol=cfg.centroid_tol, max_iter=cfg.centroid_max_iter)
    trace = find_mode(model, c0, ms_cfg)
    if trace.status is not TraceStatus.STATIONARY_NON_MODE:
        return trace.mode
    support = X if logw is None else X[np.isfinite(logw)]
    logp = _kernels.log_density_gaussian(X, support, sigma, logw)
    best = support[int(np.argmax(logp))]
    return find_mode(model, best, ms_cfg).mode


def _check_soft(Z, n, k):
    Z = np.asarray(Z, dtype=np.float64)
    if Z.shape != (n, k):
        raise InputError(f"assignment matrix must be ({n}, {k})")
    if (Z < -1e-12).any() or (abs(Z.sum(axis=1) - 1.0) > 1e-9).any():
        raise InputError("soft assignment rows must lie on the probability simplex")
    return Z


def lap_kmodes_objective(data, Z, C, sigma, lam, graph):
    """Graph-smoothness penalty minus mean centroid similarity:
    lambda tr(Z^T L Z) - (1/N) sum_nk z_nk g_nk."""
    X = as_points(data)
    C = as_points(C, "centroids")
    Z = _check_soft(Z, X.shape[0], C.shape[0])
    if float(lam) < 0:
        raise InputError("lambda must be nonnegative")
    g, _ = _similarities(X, C, float(sigma))
    smooth = float(np.sum(Z * (graph.laplacian() @ Z)))
    return float(lam) * smooth - float((Z * g).sum()) / X.shape[0]


def _laplacian_lambda_max(L, iters=100):
    """Power iteration estimate of the largest Laplacian eigenvalue."""
    n = L.shape[0]
    v = np.ones(n) + 1e-3 * np.arange(n)  # deterministic, not an eigenvector
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = L @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w / norm
        lam = norm
    return float(lam) * 1.01


def lap_kmodes_assignment_step(g, lam, graph, Z_init, cfg=None):
    """Minimize the soft-assignment objective at fixed centroids.

    ``g`` is the (N, K) centroid-similarity matrix.  Projected gradient with
    exact row-wise simplex projection and the Lipschitz step size
    1 / (2 lambda lambda_max(L) + delta), plus Nesterov extrapolation with
    restart on any objective increase (plain projected gradient is
    diffusion-limited on path-like graphs, taking O(lambda_max/lambda_2)
    iterations; the momentum variant keeps the projection, step size, and
    monotone decrease).  Iterates until the objective decrease drops below
    ``qp_tol``.  With lambda = 0 the program is linear and the exact vertex
    solution (the argmax indicator per row) is returned directly.
    """
    cfg = cfg or KModesConfig()
    g = np.atleast_2d(np.asarray(g, dtype=np.float64))
    n, k = g.shape
    lam = float(lam)
    if lam < 0:
        raise InputError("lambda must be nonnegative")
    if k == 1:
        return np.ones((n, 1))
    if lam == 0.0:
        return _one_hot(g.argmax(axis=1), k)
    L = graph.laplacian()
    Z = simplex_project_rows(_check_soft(Z_init, n, k))
    step = 1.0 / (2.0 * lam * _laplacian_lambda_max(L) + 1e-12)

    def objective(Zc):
        return lam * float(np.sum(Zc * (L @ Zc))) - float((Zc * g).sum()) / n

    def pg_from(Zc):
        return simplex_project_rows(Zc - step * (2.0 * lam * (L @ Zc) - g / n))

    f_prev = objective(Z)
    Y = Z
    momentum = 1.0
    converged = False
    for _ in range(cfg.qp_max_iter):
        Z_new = pg_from(Y)
        f_new = objective(Z_new)
        if f_new > f_prev:
            # extrapolation overshot: restart from the last accepted iterate
            Y, momentum = Z, 1.0
            Z_new = pg_from(Z)
            f_new = objective(Z_new)
        if f_prev - f_new < cfg.qp_tol:
            # certify first-order optimality before accepting the stall
            pg = np.linalg.norm(Z_new - pg_from(Z_new)) / step
            if pg < cfg.pg_tol:
                Z = Z_new
                converged = True
                break
        m_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum**2))
        Y = Z_new + ((momentum - 1.0) / m_next) * (Z_new - Z)
        Z, momentum, f_prev = Z_new, m_next, f_new
    if not converged:
        warnings.warn("assignment QP hit its iteration limit", stacklevel=2)
    return Z


def projected_gradient_norm(g, lam, graph, Z, cfg=None):
    """First-order optimality measure of the assignment program at Z."""
    cfg = cfg or KModesConfig()
    n = Z.shape[0]
    L = graph.laplacian()
    step = 1.0 / (2.0 * float(lam) * _laplacian_lambda_max(L) + 1e-12)
    grad = 2.0 * float(lam) * (L @ Z) - np.asarray(g, dtype=np.float64) / n
    moved = simplex_project_rows(Z - step * grad)
    return float(np.linalg.norm(Z - moved) / step)


@dataclass(frozen=True, eq=False)
class LapKModesResult:
    """Trained Laplacian K-modes state, kept for out-of-sample mapping."""

    assignments: np.ndarray
    centers: np.ndarray
    objective_history: list
    data: np.ndarray = field(repr=False)
    sigma: float = 1.0
    lam: float = 0.0
    graph: AffinityGraph | None = field(default=None, repr=False)
    graph_knn: int = 10
    reseeded: bool = False

    @property
    def labels(self):
        return self.assignments.argmax(axis=1)


def lap_kmodes_fit(data, k, sigma, lam, graph=None, sigmas=None, cfg=None, init=None):
    """Alternate the soft-assignment QP with weighted centroid mode seeking.

    Runs the K-means homotopy stage of :func:`kmodes_fit` first, then the
    ``sigmas`` ladder (defaulting to the geometric ladder ending at
    ``sigma``).  The objective is non-increasing across rounds at fixed
    bandwidth unless an empty cluster had to be re-seeded.
    """
    X = as_points(data)
    sigma = float(sigma)
    if sigma <= 0:
        raise InputError("bandwidth must be positive")
    lam = float(lam)
    if lam < 0:
        raise InputError("lambda must be nonnegative")
    cfg = cfg or KModesConfig()
    graph = graph or build_knn_graph(X, k=10, bandwidth=sigma)
    if graph.n != X.shape[0]:
        raise InputError("graph size must match the data")
    if sigmas is None:
        sigmas = homotopy_schedule(X, sigma)
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=np.float64))

    hard = kmodes_fit(X, k, sigmas=np.empty(0), cfg=cfg, init=init)
    C = hard.centers.copy()
    Z = _one_hot(hard.labels, k)
    history = []
    reseeded = hard.reseeded
    for s in sigmas:
        stage_vals = []
        prev = np.inf
        for _ in range(cfg.max_rounds):
            g, _ = _similarities(X, C, s)
            Z = lap_kmodes_assignment_step(g, lam, graph, Z, cfg)
            stage_vals.append(lap_kmodes_objective(X, Z, C, s, lam, graph))
            for j in range(k):
                col = Z[:, j]
                total = col.sum()
                if total <= 1e-12:
                    reseeded = True
                    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(-1).min(1)
                    C[j] = X[int(np.argmax(d2))]
                    log.info("re-seeded empty soft cluster %d", j)
                    continue
                with np.errstate(divide="ignore"):
                    logw = np.where(col > 0, np.log(col), -np.inf)
                C[j] = _ascend_centroid(X, logw, s, C[j], cfg)
            val = lap_kmodes_objective(X, Z, C, s, lam, graph)
            stage_vals.append(val)
            if prev - val < cfg.rounds_tol * max(1.0, abs(val)):
                break
            prev = val
        history.append(np.asarray(stage_vals))
    return LapKModesResult(
        assignments=Z,
        centers=C,
        objective_history=history,
        data=X,
        sigma=sigma,
        lam=lam,
        graph=graph,
        graph_knn=min(10, X.shape[0] - 1),
        reseeded=reseeded,
    )


def lap_kmodes_out_of_sample(result, x, n_neighbors=None):
    """Soft assignment for a new point from a trained state.

    Projects onto the simplex the equal-weight average of (a) the
    affinity-weighted mean of the soft assignments of the point's nearest
    training neighbors and (b) the normalized centroid similarities.  With
    no neighbor affinity above zero the centroid term alone is used and a
    warning is emitted.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    X = result.data
    if x.size != X.shape[1]:
        raise InputError("query dimension must match the training data")
    k_nbr = int(n_neighbors or result.graph_knn)
    k_nbr = min(k_nbr, X.shape[0])
    d2 = ((X - x[None, :]) ** 2).sum(axis=1)
    idx = np.argpartition(d2, k_nbr - 1)[:k_nbr]
    w = np.exp(-0.5 * d2[idx] / result.sigma**2)
    gc = np.exp(
        -0.5 * ((result.centers - x[None, :]) ** 2).sum(axis=1) / result.sigma**2
    )
    total_g = gc.sum()
    g_term = gc / total_g if total_g > 0 else np.full(gc.size, 1.0 / gc.size)
    if w.sum() <= 0.0:
        warnings.warn(
            "query has no affinity to any training point; using the "
            "centroid term only",
            stacklevel=2,
        )
        return simplex_project(g_term)
    neighbor_term = (w @ result.assignments[idx]) / w.sum()
    return simplex_project(0.5 * (neighbor_term + g_term))
