"""Kernel density estimates: profiles, derivatives, and bandwidth selection.

Densities follow the unnormalized-profile convention: the Gaussian profile
is exp(-t/2) with no (2 pi sigma^2)^(-D/2) factor, since mode locations,
clusterings and posteriors are invariant to constant factors.  Pass
``normalized=True`` to :func:`density` where an actual probability density
is needed (entropy reporting).
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InputError, NoSolutionError, UnsupportedKernelError

__all__ = [
    "Kernel",
    "KdeModel",
    "density",
    "gradient",
    "hessian",
    "posterior",
    "local_covariance",
    "entropic_bandwidths",
]


class Kernel(enum.Enum):
    """Kernel profile K(t) on squared scaled distances t >= 0."""

    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"

    def profile(self, t):
        """K(t): exp(-t/2), or 1-t clipped to its unit support."""
        t = np.asarray(t, dtype=np.float64)
        if self is Kernel.GAUSSIAN:
            return np.exp(-0.5 * t)
        return np.where(t < 1.0, 1.0 - t, 0.0)

    def dprofile(self, t):
        """dK/dt; the Epanechnikov boundary t = 1 takes the inside value -1."""
        t = np.asarray(t, dtype=np.float64)
        if self is Kernel.GAUSSIAN:
            return -0.5 * np.exp(-0.5 * t)
        return np.where(t <= 1.0, -1.0, 0.0)

    @classmethod
    def parse(cls, name):
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise InputError(f"unknown kernel {name!r}") from None


def as_points(X, name="points"):
    """Validate and return an (N, D) C-contiguous float64 array."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError(f"{name} must be a nonempty (N, D) array")
    if not np.isfinite(X).all():
        raise InputError(f"{name} contains non-finite values")
    return X


@dataclass(frozen=True, eq=False)
class KdeModel:
    """A dataset together with a kernel, bandwidth(s), and mixing weights.

    ``bandwidth`` is a positive scalar or one positive value per point;
    ``weights`` are nonnegative and normalized to sum to one (uniform by
    default).  Instances are immutable and safe to share across threads.
    """

    points: np.ndarray
    kernel: Kernel = Kernel.GAUSSIAN
    bandwidth: float | np.ndarray = 1.0
    weights: np.ndarray | None = None
    _log_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = as_points(self.points)
        bw = np.asarray(self.bandwidth, dtype=np.float64)
        if bw.ndim not in (0, 1):
            raise InputError("bandwidth must be a scalar or a per-point vector")
        if bw.ndim == 1 and bw.shape[0] != pts.shape[0]:
            raise InputError("per-point bandwidth count must match the point count")
        if not (np.isfinite(bw).all() and (bw > 0).all()):
            raise InputError("bandwidths must be positive and finite")
        w = self.weights
        if w is not None:
            w = np.asarray(w, dtype=np.float64)
            if w.shape != (pts.shape[0],):
                raise InputError("weight count must match the point count")
            if (w < 0).any() or not np.isfinite(w).all():
                raise InputError("weights must be nonnegative and finite")
            total = w.sum()
            if total <= 0:
                raise InputError("weights must not all be zero")
            w = w / total
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "bandwidth", float(bw) if bw.ndim == 0 else bw)
        object.__setattr__(self, "weights", w)
        with np.errstate(divide="ignore"):
            lw = None if w is None else np.where(w > 0, np.log(w), -np.inf)
        object.__setattr__(self, "_log_weights", lw)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def adaptive(self):
        """True when the model carries one bandwidth per point."""
        return np.ndim(self.bandwidth) == 1

    @property
    def sigmas(self):
        """Per-point bandwidths as an (N,) array (broadcast if scalar)."""
        return np.broadcast_to(np.asarray(self.bandwidth, dtype=np.float64), (self.n,))

    @property
    def log_weights(self):
        """log weights including the uniform default, shape (N,)."""
        if self._log_weights is not None:
            return self._log_weights
        return np.full(self.n, -np.log(self.n))

    def scale(self):
        """Representative length scale: the (mean) bandwidth."""
        return float(np.mean(self.bandwidth))

    def check_query(self, x, name="x"):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise InputError(
                f"{name} has dimension {x.shape[-1]}, model expects {self.dim}"
            )
        if not np.isfinite(x).all():
            raise InputError(f"{name} contains non-finite values")
        return x


def _scaled_sq_dists(model, X):
    """t_n = ||(x - x_n)/sigma_n||^2 for each query row, shape (Q, N)."""
    diff2 = ((X[:, None, :] - model.points[None, :, :]) ** 2).sum(axis=-1)
    return diff2 / model.sigmas[None, :] ** 2


def density(model, x, normalized=False):
    """Evaluate the KDE at one query point or a batch of rows.

    With ``normalized=True`` (Gaussian only) each component carries its
    (2 pi sigma_n^2)^(-D/2) factor, giving a proper probability density.
    """
    x = model.check_query(x)
    single = x.ndim == 1
    Q = np.atleast_2d(x)
    if model.kernel is Kernel.GAUSSIAN:
        lw = model.log_weights
        if normalized:
            lw = lw - 0.5 * model.dim * np.log(2.0 * np.pi * model.sigmas**2)
        out = np.exp(_kernels.log_density_gaussian(model.points, Q, model.bandwidth, lw))
    else:
        if normalized:
            raise UnsupportedKernelError("normalized densities are Gaussian-only")
        t = _scaled_sq_dists(model, Q)
        w = np.exp(model.log_weights)
        out = model.kernel.profile(t) @ w
    return float(out[0]) if single else out


def posterior(model, x):
    """Component responsibilities p(n|x), nonnegative and summing to one."""
    x = model.check_query(x)
    t = _scaled_sq_dists(model, np.atleast_2d(x))[0]
    e = -0.5 * t + model.log_weights
    e -= e.max()
    r = np.exp(e)
    return r / r.sum()


def gradient(model, x):
    """Analytic KDE gradient at x.

    The Epanechnikov profile is only piecewise linear; points on a support
    boundary use the inside derivative.
    """
    x = model.check_query(x)
    if x.ndim != 1:
        raise InputError("gradient expects a single query point")
    t = _scaled_sq_dists(model, x[None, :])[0]
    w = np.exp(model.log_weights)
    inv_s2 = 1.0 / model.sigmas**2
    # grad = sum_n 2 w_n K'(t_n) (x - x_n) / sigma_n^2
    if model.kernel is Kernel.GAUSSIAN:
        coef = -w * np.exp(-0.5 * t) * inv_s2
    else:
        coef = -2.0 * w * (t <= 1.0) * inv_s2
    return (x[None, :] - model.points).T @ coef


def hessian(model, x):
    """Analytic KDE Hessian at x (Gaussian only); exactly symmetric."""
    if model.kernel is not Kernel.GAUSSIAN:
        raise UnsupportedKernelError("the Hessian is defined for the Gaussian kernel")
    x = model.check_query(x)
    t = _scaled_sq_dists(model, x[None, :])[0]
    w = np.exp(model.log_weights)
    inv_s2 = 1.0 / model.sigmas**2
    c = w * np.exp(-0.5 * t) * inv_s2
    diff = x[None, :] - model.points
    H = (diff * (c * inv_s2)[:, None]).T @ diff - c.sum() * np.eye(model.dim)
    return 0.5 * (H + H.T)


def local_covariance(model, x):
    """Responsibility-weighted covariance of the data around its local mean."""
    if model.kernel is not Kernel.GAUSSIAN:
        raise UnsupportedKernelError("local covariance is defined for the Gaussian kernel")
    r = posterior(model, x)
    mean = r @ model.points
    diff = model.points - mean
    S = (diff * r[:, None]).T @ diff
    return 0.5 * (S + S.T)


def _perplexity(d2, inv2s2):
    """Perplexity (2^entropy) of the Gaussian neighbor distribution."""
    e = -d2 * inv2s2
    e -= e.max()
    p = np.exp(e)
    p /= p.sum()
    h = -(p * np.log(np.maximum(p, 1e-300))).sum()
    return float(np.exp(h))


def entropic_bandwidths(points, perplexity):
    """Per-point bandwidths giving each point `perplexity` effective neighbors.

    For every point the bandwidth is found by bisection so that the Gaussian
    distribution over the other points has the requested perplexity within
    1e-6.  Requires 1 < perplexity <= N - 1; raises
    :class:`~modeseek.errors.NoSolutionError` (naming the point) when a
    point's neighbor distances make the target unreachable, e.g. equidistant
    neighborhoods where the perplexity does not depend on the bandwidth.
    """
    X = as_points(points)
    n_pts = X.shape[0]
    k = float(perplexity)
    if not 1.0 < k <= n_pts - 1:
        raise InputError(f"perplexity must lie in (1, N-1], got {k} with N={n_pts}")
    tol = 1e-7
    sigmas = np.empty(n_pts)
    for n in range(n_pts):
        d2 = ((X - X[n]) ** 2).sum(axis=1)
        d2 = np.delete(d2, n)
        scale = np.sqrt(d2.mean())
        if scale == 0.0:
            raise NoSolutionError(f"point {n}: all neighbors coincide with it")

        def perp(sigma):
            return _perplexity(d2, 0.5 / sigma**2)

        lo, hi = scale, scale
        for _ in range(200):
            if perp(lo) <= k:
                break
            lo /= 2.0
        for _ in range(200):
            if perp(hi) >= k - tol:
                break
            hi *= 2.0
        p_lo, p_hi = perp(lo), perp(hi)
        if abs(p_lo - k) <= tol:
            sigmas[n] = lo
            continue
        if abs(p_hi - k) <= tol:
            sigmas[n] = hi
            continue
        if not (p_lo < k < p_hi):
            raise NoSolutionError(
                f"point {n}: perplexity {k} is unreachable "
                f"(range [{p_lo:.6g}, {p_hi:.6g}])"
            )
        sigma = 0.5 * (lo + hi)
        for _ in range(200):
            sigma = 0.5 * (lo + hi)
            p = perp(sigma)
            if abs(p - k) <= tol:
                break
            if p < k:
                lo = sigma
            else:
                hi = sigma
        else:
            raise NoSolutionError(f"point {n}: bisection failed to reach perplexity {k}")
        sigmas[n] = sigma
    return sigmas
