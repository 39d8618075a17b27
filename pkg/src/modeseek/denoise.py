"""Manifold denoising: blurring mean-shift with tangential motion removed.

Each point's mean-shift vector is projected onto the local tangent space
(top principal directions of its nearest neighbors) and that component is
discarded, so points move only orthogonally to the manifold.  Noise thus
collapses onto the manifold without shrinking it along itself.  A tangent
dimension of zero keeps the full vector and recovers plain blurring.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .errors import InputError
from .kde import as_points

__all__ = ["MbmsConfig", "local_tangent", "mbms_step", "mbms_run"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MbmsConfig:
    """Denoising controls.

    ``k`` neighbors (including the point itself) feed the local PCA whose
    top ``tangent_dim`` directions span the tangent space; iteration stops
    once the mean orthogonal-to-tangent eigenvalue ratio drops below
    ``stop_ratio`` (points sit on the manifold) or after ``max_iter`` steps,
    few by design.
    """

    sigma: float
    k: int = 10
    tangent_dim: int = 1
    max_iter: int = 5
    stop_ratio: float = 0.01

    def __post_init__(self):
        if self.sigma <= 0:
            raise InputError("bandwidth must be positive")
        if self.tangent_dim < 0:
            raise InputError("tangent dimension must be nonnegative")
        if self.k < self.tangent_dim + 1:
            raise InputError("need at least tangent_dim + 1 neighbors for the PCA")
        if self.max_iter < 0:
            raise InputError("max_iter must be nonnegative")


def _fix_signs(V):
    # deterministic eigenvector signs: largest-magnitude entry positive
    j = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[j, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _neighborhood_pca(nb):
    mu = nb.mean(axis=0)
    diff = nb - mu
    cov = diff.T @ diff / nb.shape[0]
    w, V = np.linalg.eigh(cov)  # ascending
    return mu, w[::-1], _fix_signs(V[:, ::-1])  # descending


def local_tangent(data, n, k, tangent_dim):
    """Tangent-space estimate at point ``n`` from local PCA.

    Returns (base point, orthonormal (D, L) basis): the mean of the k
    nearest neighbors (the point itself included) and the top-L principal
    directions.  A neighborhood covariance of rank below L pads the basis
    from the remaining eigenvectors and logs a warning.
    """
    X = as_points(data)
    n = int(n)
    if not 0 <= n < X.shape[0]:
        raise InputError("point index out of range")
    if k > X.shape[0]:
        raise InputError("k exceeds the number of points")
    if tangent_dim >= X.shape[1]:
        raise InputError("tangent dimension must be below the ambient dimension")
    d2 = ((X - X[n]) ** 2).sum(axis=1)
    idx = np.argpartition(d2, k - 1)[:k]
    mu, eigvals, V = _neighborhood_pca(X[idx])
    L = int(tangent_dim)
    if L and eigvals[L - 1] <= 1e-12 * max(eigvals[0], 1e-300):
        log.warning(
            "neighborhood of point %d has rank below %d; basis padded", n, L
        )
    return mu, V[:, :L]


def _tangent_bases(X, k, L):
    """Per-point tangent bases and orthogonal/tangent eigenvalue ratios."""
    tree = cKDTree(X)
    _, idx = tree.query(X, k=k)
    if k == 1:
        idx = idx[:, None]
    n, d = X.shape
    bases = np.empty((n, d, L))
    ratios = np.empty(n)
    for i in range(n):
        _, eigvals, V = _neighborhood_pca(X[idx[i]])
        bases[i] = V[:, :L]
        top = eigvals[:L].sum()
        rest = eigvals[L:].sum()
        ratios[i] = np.inf if top <= 0 else rest / top
    return bases, ratios


def mbms_step(data, cfg):
    """One denoising step: move every point by the orthogonal component of
    its mean-shift vector, synchronously.

    With ``tangent_dim == 0`` nothing is projected out and the step equals a
    plain blurring step.
    """
    X = as_points(data)
    if cfg.tangent_dim >= X.shape[1]:
        raise InputError("tangent dimension must be below the ambient dimension")
    shifted = _kernels.shift_gaussian(X, X, cfg.sigma)
    if cfg.tangent_dim == 0:
        return shifted
    v = shifted - X
    bases, _ = _tangent_bases(X, min(cfg.k, X.shape[0]), cfg.tangent_dim)
    # v_perp = v - U (U^T v), one basis per point
    tang = np.einsum("ndl,nd->nl", bases, v)
    v_perp = v - np.einsum("ndl,nl->nd", bases, tang)
    return X + v_perp


def mbms_run(data, cfg):
    """Iterate denoising steps until the spread off the tangent space is
    negligible or ``max_iter`` is reached."""
    X = as_points(data).copy()
    for _ in range(cfg.max_iter):
        if cfg.tangent_dim > 0:
            _, ratios = _tangent_bases(X, min(cfg.k, X.shape[0]), cfg.tangent_dim)
            if float(np.mean(ratios)) < cfg.stop_ratio:
                break
        X = mbms_step(X, cfg)
    return X
