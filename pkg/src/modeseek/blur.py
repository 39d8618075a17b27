"""Blurring mean-shift: synchronous dataset smoothing.

Each iteration replaces the whole dataset by its shifted version,
X <- X phi(P), where P is the column-stochastic matrix of Gaussian
responsibilities and phi mixes it with the identity (phi(P) =
(1 - eta) I + eta P; eta = 1 is the standard update).  Iteration stops when
the dataset entropy stalls, and a connected-components pass turns the
collapsed points into clusters.  The accelerated variant merges coincident
points into weighted representatives after every step.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels, components
from .errors import InputError
from .kde import as_points
from .seek import Clustering

__all__ = [
    "WeightedDataSet",
    "FilterSpec",
    "BmsConfig",
    "bms_step",
    "bms_cluster",
    "bms_cluster_accelerated",
    "gaussian_shrink_rate",
    "dataset_entropy",
]


@dataclass(frozen=True, eq=False)
class WeightedDataSet:
    """A dataset whose rows carry mixing weights and merge multiplicities.

    ``origin[i]`` maps original point i to its current representative row,
    so labels computed on the reduced set pull back to the full dataset.
    """

    points: np.ndarray
    weights: np.ndarray
    multiplicity: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points)
        w = np.asarray(self.weights, dtype=np.float64)
        m = np.asarray(self.multiplicity, dtype=np.int64)
        org = np.asarray(self.origin, dtype=np.int64)
        if w.shape != (pts.shape[0],) or m.shape != (pts.shape[0],):
            raise InputError("weights and multiplicity must have one entry per row")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-9:
            raise InputError("weights must be nonnegative and sum to one")
        if ((org < 0) | (org >= pts.shape[0])).any():
            raise InputError("origin map points outside the current rows")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "multiplicity", m)
        object.__setattr__(self, "origin", org)

    @classmethod
    def from_points(cls, X):
        X = as_points(X)
        n = X.shape[0]
        return cls(
            points=X,
            weights=np.full(n, 1.0 / n),
            multiplicity=np.ones(n, dtype=np.int64),
            origin=np.arange(n, dtype=np.int64),
        )

    @property
    def n_original(self):
        return int(self.multiplicity.sum())

    def log_weights(self):
        with np.errstate(divide="ignore"):
            return np.where(self.weights > 0, np.log(self.weights), -np.inf)


@dataclass(frozen=True)
class FilterSpec:
    """Spectral filter phi(P) = (1 - eta) I + eta P.

    eta = 1 is the standard blurring update.  On a Gaussian dataset the
    per-axis shrink factor becomes phi(r(s)); |phi| < 1 on (0, 1) requires
    eta in (0, 2) -- outside that range iterates can diverge.  Values are
    not rejected here so divergence remains observable.
    """

    eta: float = 1.0

    @classmethod
    def standard(cls):
        return cls(1.0)

    def apply(self, X, shifted):
        if self.eta == 1.0:
            return shifted
        return X + self.eta * (shifted - X)


@dataclass(frozen=True)
class BmsConfig:
    """Stopping controls for blurring runs.

    The run stops when the dataset entropy changes by less than
    ``entropy_tol`` in relative terms (the collapsed quasistable state);
    ``merge_eps`` defaults to bandwidth / 100, safe because clusters
    collapse to far below that.
    """

    entropy_tol: float = 1e-4
    max_iter: int = 500
    merge_eps: float | None = None

    def __post_init__(self):
        if not self.entropy_tol > 0:
            raise InputError("entropy_tol must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")

    def resolve_eps(self, sigma):
        return self.merge_eps if self.merge_eps is not None else 0.01 * sigma


def _as_weighted(data):
    if isinstance(data, WeightedDataSet):
        return data
    return WeightedDataSet.from_points(data)


def _check_sigma(sigma):
    sigma = float(sigma)
    if sigma <= 0:
        raise InputError("bandwidth must be positive")
    return sigma


def bms_step(data, sigma, filt=None):
    """One synchronous blurring step on the (weighted) dataset.

    Every output row is a convex combination of the input rows; weights,
    multiplicities, and the origin map pass through unchanged.
    """
    sigma = _check_sigma(sigma)
    filt = filt or FilterSpec.standard()
    wds = _as_weighted(data)
    shifted = _kernels.shift_gaussian(wds.points, wds.points, sigma, wds.log_weights())
    moved = filt.apply(wds.points, shifted)
    out = WeightedDataSet(
        points=moved,
        weights=wds.weights,
        multiplicity=wds.multiplicity,
        origin=wds.origin,
    )
    return out if isinstance(data, WeightedDataSet) else out.points


def dataset_entropy(data, sigma):
    """Entropy -sum_m pi_m log p(x_m) under the normalized Gaussian KDE of
    the current weighted dataset.

    With every point coincident this equals (D/2) log(2 pi sigma^2), a
    constant in the data: the signature of the collapsed state.
    """
    sigma = _check_sigma(sigma)
    wds = _as_weighted(data)
    logp = _kernels.log_density_gaussian(
        wds.points, wds.points, sigma, wds.log_weights()
    )
    logp -= 0.5 * wds.points.shape[1] * np.log(2.0 * np.pi * sigma**2)
    return float(-(wds.weights @ logp))


def gaussian_shrink_rate(s, sigma):
    """Per-iteration shrink factor 1 / (1 + (sigma/s)^2) of the standard
    deviation of a Gaussian dataset along a principal axis."""
    s = float(s)
    sigma = _check_sigma(sigma)
    if s <= 0:
        raise InputError("standard deviation must be positive")
    return 1.0 / (1.0 + (sigma / s) ** 2)


def _merge_within(wds, eps):
    """Merge rows closer than eps into weighted representatives."""
    cc = components.cc_tight(wds.points, eps)
    k = cc.k
    if k == wds.points.shape[0]:
        return wds
    d = wds.points.shape[1]
    pts = np.zeros((k, d))
    w = np.zeros(k)
    m = np.zeros(k, dtype=np.int64)
    np.add.at(w, cc.labels, wds.weights)
    np.add.at(m, cc.labels, wds.multiplicity)
    np.add.at(pts, cc.labels, wds.points * wds.weights[:, None])
    safe = np.where(w > 0, w, 1.0)
    pts /= safe[:, None]
    # zero-weight components keep their representative location
    empty = w == 0
    if empty.any():
        pts[empty] = cc.representatives[empty]
    return WeightedDataSet(
        points=pts, weights=w, multiplicity=m, origin=cc.labels[wds.origin]
    )


def _bms_run(data, sigma, cfg, filt, merge_each_step):
    sigma = _check_sigma(sigma)
    cfg = cfg or BmsConfig()
    filt = filt or FilterSpec.standard()
    eps = cfg.resolve_eps(sigma)
    wds = _as_weighted(data)
    entropy = [dataset_entropy(wds, sigma)]
    hit_max = True
    for _ in range(cfg.max_iter):
        wds = bms_step(wds, sigma, filt)
        if merge_each_step:
            wds = _merge_within(wds, eps)
        entropy.append(dataset_entropy(wds, sigma))
        if abs(entropy[-1] - entropy[-2]) <= cfg.entropy_tol * abs(entropy[-1]):
            hit_max = False
            break
    if hit_max:
        warnings.warn(
            f"blurring run hit max_iter={cfg.max_iter} before the entropy stalled",
            stacklevel=3,
        )
    cc = components.cc_tight(wds.points, eps)
    labels = cc.labels[wds.origin]
    k = cc.k
    centers = np.zeros((k, wds.points.shape[1]))
    wsum = np.zeros(k)
    np.add.at(wsum, cc.labels, wds.weights)
    np.add.at(centers, cc.labels, wds.points * wds.weights[:, None])
    centers /= np.where(wsum > 0, wsum, 1.0)[:, None]
    diagnostics = {
        "iterations": len(entropy) - 1,
        "entropy": np.asarray(entropy),
        "merge_eps": eps,
        "hit_max_iter": hit_max,
        "final_size": wds.points.shape[0],
    }
    return Clustering(labels=labels, centers=centers, diagnostics=diagnostics)


def bms_cluster(data, sigma, cfg=None, filt=None):
    """Cluster by iterated blurring followed by a connected-components merge."""
    return _bms_run(data, sigma, cfg, filt, merge_each_step=False)


def bms_cluster_accelerated(data, sigma, cfg=None):
    """Blurring with interleaved merging: coincident-within-eps points are
    replaced by a single weighted representative after every step, shrinking
    later iterations without changing the resulting partition."""
    return _bms_run(data, sigma, cfg, FilterSpec.standard(), merge_each_step=True)
