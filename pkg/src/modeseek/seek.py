"""Mode finding by mean-shift: fixed-point iteration per query point,
Newton acceleration, clustering by basin of attraction, conditional-mode
multivalued regression, and mode tracking across bandwidths.
"""

import enum
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, components, kde
from .errors import InputError, IsolatedPointError, OutOfSupportError
from .kde import Kernel, KdeModel

__all__ = [
    "MsConfig",
    "ModeTrace",
    "Clustering",
    "TraceStatus",
    "ms_step",
    "ms_step_adaptive",
    "find_mode",
    "find_mode_newton",
    "ms_jacobian",
    "ms_cluster",
    "out_of_sample_assign",
    "AssignResult",
    "conditional_modes",
    "ConditionalMode",
    "mode_continuation",
    "ContinuationResult",
]

# Largest positive Hessian eigenvalue (relative to the spectral radius)
# still accepted as a mode; above it the stationary point is a saddle or
# minimum.
_MODE_EIG_TOL = 1e-10


class TraceStatus(enum.Enum):
    CONVERGED = "converged"
    MAX_ITER = "max_iter"
    STATIONARY_NON_MODE = "stationary_non_mode"


@dataclass(frozen=True)
class MsConfig:
    """Iteration controls for mode seeking.

    ``tol`` is the relative step tolerance ||x+ - x|| <= tol (1 + ||x||);
    ``merge_eps`` is the convergence-point merge radius (defaults to
    bandwidth / 100, a heuristic) and should sit well above tol times the
    data scale.
    """

    tol: float = 1e-6
    max_iter: int = 10000
    merge_eps: float | None = None
    record_path: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("tol must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")
        if self.merge_eps is not None and not self.merge_eps > 0:
            raise InputError("merge_eps must be positive")

    def resolve_eps(self, scale):
        return self.merge_eps if self.merge_eps is not None else scale / 100.0


@dataclass(frozen=True)
class ModeTrace:
    """One mode-seeking run: start, end point, and how it got there."""

    start: np.ndarray
    mode: np.ndarray
    iterations: int
    status: TraceStatus
    path: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class Clustering:
    """Per-point labels, cluster centers, and optional soft assignments."""

    labels: np.ndarray
    centers: np.ndarray
    soft: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def k(self):
        return self.centers.shape[0]


def _worker_count():
    env = os.environ.get("MODESEEK_THREADS", "").strip()
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def _step(model, x):
    """One mean-shift application f(x); raises for empty finite-support
    neighborhoods."""
    if model.kernel is Kernel.GAUSSIAN:
        if model.adaptive:
            return _kernels.shift_gaussian_adaptive(
                model.points, x[None, :], model.sigmas, model.log_weights
            )[0]
        return _kernels.shift_gaussian(
            model.points, x[None, :], model.bandwidth, model.log_weights
        )[0]
    if model.adaptive:
        raise InputError("per-point bandwidths require the Gaussian kernel")
    shifted, ok = _kernels.shift_epanechnikov(
        model.points, x[None, :], model.bandwidth, model.weights
    )
    if not ok[0]:
        raise IsolatedPointError(
            f"no data point within distance {model.bandwidth} of the query"
        )
    return shifted[0]


def ms_step(model, x):
    """One mean-shift step under a scalar bandwidth.

    The result is a convex combination of the data points.  For per-point
    bandwidths use :func:`ms_step_adaptive`.
    """
    if model.adaptive:
        raise InputError("model has per-point bandwidths; use ms_step_adaptive")
    x = model.check_query(np.asarray(x, dtype=np.float64))
    if x.ndim != 1:
        raise InputError("ms_step expects a single query point")
    return _step(model, x)


def ms_step_adaptive(model, x):
    """One adaptive mean-shift step: responsibilities reweighted by the
    inverse squared bandwidths, then renormalized."""
    if model.kernel is not Kernel.GAUSSIAN:
        raise InputError("adaptive steps require the Gaussian kernel")
    if not model.adaptive:
        raise InputError("model has a scalar bandwidth; use ms_step")
    x = model.check_query(np.asarray(x, dtype=np.float64))
    if x.ndim != 1:
        raise InputError("ms_step_adaptive expects a single query point")
    return _step(model, x)


def adaptive_weights(model, x):
    """The normalized weights q(n|x) of the adaptive step at x."""
    x = model.check_query(np.asarray(x, dtype=np.float64))
    t = ((x[None, :] - model.points) ** 2).sum(axis=1) / model.sigmas**2
    e = -0.5 * t + model.log_weights - 2.0 * np.log(model.sigmas)
    e -= e.max()
    q = np.exp(e)
    return q / q.sum()


def _is_mode(model, x):
    """Hessian test: negative semidefinite (up to a relative slack) at x."""
    H = kde.hessian(model, x)
    ev = np.linalg.eigvalsh(H)
    scale = max(abs(ev[0]), abs(ev[-1]))
    if scale == 0.0:
        return True
    return ev[-1] <= _MODE_EIG_TOL * scale


def find_mode(model, x0, cfg=None):
    """Iterate x <- f(x) from x0 until the step stalls.

    Gaussian runs stop on the relative step criterion and the end point is
    classified with the Hessian (saddles and minima are flagged as
    STATIONARY_NON_MODE).  The Epanechnikov update reaches an exact fixed
    point in finitely many steps, so it stops on a zero step.
    """
    cfg = cfg or MsConfig()
    x = model.check_query(np.array(x0, dtype=np.float64))
    if x.ndim != 1:
        raise InputError("find_mode expects a single start point")
    start = x.copy()
    gaussian = model.kernel is Kernel.GAUSSIAN
    path = [x.copy()] if cfg.record_path else None
    status = TraceStatus.MAX_ITER
    iterations = 0
    for it in range(1, cfg.max_iter + 1):
        x_new = _step(model, x)
        iterations = it
        if cfg.record_path:
            path.append(x_new.copy())
        if gaussian:
            done = np.linalg.norm(x_new - x) <= cfg.tol * (1.0 + np.linalg.norm(x))
        else:
            done = bool((x_new == x).all())
        x = x_new
        if done:
            status = TraceStatus.CONVERGED
            break
    if status is TraceStatus.CONVERGED and gaussian and not _is_mode(model, x):
        status = TraceStatus.STATIONARY_NON_MODE
    return ModeTrace(
        start=start,
        mode=x,
        iterations=iterations,
        status=status,
        path=np.asarray(path) if path is not None else None,
    )


def _floored_newton_dir(H_log, g_log):
    """Ascent direction from a modified Newton solve on the log-density.

    Eigenvalues of the log-density Hessian are floored at -1e-8 ||H|| so the
    direction is always an ascent direction.
    """
    w, V = np.linalg.eigh(H_log)
    floor = 1e-8 * max(np.abs(w).max(), 1e-300)
    w = np.minimum(w, -floor)
    return -V @ ((V.T @ g_log) / w)


def find_mode_newton(model, x0, cfg=None):
    """Mode seeking with a Newton tail (Gaussian kernel).

    Plain mean-shift steps run until the Hessian at the iterate turns
    negative definite; from there modified-Newton steps on the log-density
    (eigenvalue flooring, halving backtracking whenever the density would
    decrease) take over, stopping once ||grad p|| < tol p.  After 20
    consecutive rejected Newton steps the run falls back to plain
    mean-shift.
    """
    if model.kernel is not Kernel.GAUSSIAN:
        raise InputError("Newton acceleration requires the Gaussian kernel")
    cfg = cfg or MsConfig()
    x = model.check_query(np.array(x0, dtype=np.float64))
    if x.ndim != 1:
        raise InputError("find_mode_newton expects a single start point")
    start = x.copy()
    path = [x.copy()] if cfg.record_path else None
    newton_phase = False
    rejects = 0
    ms_only = False
    status = TraceStatus.MAX_ITER
    iterations = 0
    for it in range(1, cfg.max_iter + 1):
        iterations = it
        p = kde.density(model, x)
        g = kde.gradient(model, x)
        if newton_phase and np.linalg.norm(g) <= cfg.tol * p:
            iterations = it - 1
            status = TraceStatus.CONVERGED
            break
        H = kde.hessian(model, x)
        if not newton_phase:
            if np.linalg.eigvalsh(H)[-1] < 0.0:
                newton_phase = True
            else:
                x_new = _step(model, x)
                done = np.linalg.norm(x_new - x) <= cfg.tol * (1.0 + np.linalg.norm(x))
                x = x_new
                if cfg.record_path:
                    path.append(x.copy())
                if done:
                    status = TraceStatus.CONVERGED
                    break
                continue
        if ms_only:
            x_new = _step(model, x)
        else:
            g_log = g / p
            H_log = H / p - np.outer(g_log, g_log)
            direction = _floored_newton_dir(H_log, g_log)
            alpha = 1.0
            accepted = False
            for _ in range(20):
                cand = x + alpha * direction
                if kde.density(model, cand) >= p:
                    accepted = True
                    break
                alpha *= 0.5
            if accepted:
                rejects = 0
                x_new = cand
            else:
                rejects += 1
                if rejects >= 20:
                    ms_only = True
                x_new = _step(model, x)
        x = x_new
        if cfg.record_path:
            path.append(x.copy())
    if status is TraceStatus.CONVERGED and not _is_mode(model, x):
        status = TraceStatus.STATIONARY_NON_MODE
    return ModeTrace(
        start=start,
        mode=x,
        iterations=iterations,
        status=status,
        path=np.asarray(path) if path is not None else None,
    )


def ms_jacobian(model, x):
    """Jacobian of the mean-shift map at x (Gaussian, scalar bandwidth).

    Computed as (sum_n p(n|x) x_n x_n^T - f(x) f(x)^T) / sigma^2; at a mode
    it equals the local covariance over sigma^2 and its eigenvalues, which
    set the linear convergence rate, lie in (0, 1).
    """
    if model.kernel is not Kernel.GAUSSIAN:
        raise InputError("the mean-shift Jacobian requires the Gaussian kernel")
    if model.adaptive:
        raise InputError("the mean-shift Jacobian requires a scalar bandwidth")
    x = model.check_query(np.asarray(x, dtype=np.float64))
    r = kde.posterior(model, x)
    f = r @ model.points
    J = ((model.points * r[:, None]).T @ model.points - np.outer(f, f)) / model.bandwidth**2
    return 0.5 * (J + J.T)


def _run_seek(model, seeds, cfg):
    """Batch mode seeking via the active backend, threaded over seed chunks.

    Returns (endpoints, iterations, status codes): 0 converged, 1 max_iter,
    2 empty neighborhood (finite-support kernels only).
    """
    seeds = np.ascontiguousarray(np.atleast_2d(seeds), dtype=np.float64)
    if model.kernel is Kernel.GAUSSIAN:
        if model.adaptive:
            def run(chunk):
                return _kernels.seek_gaussian_adaptive(
                    model.points, chunk, model.sigmas, model.log_weights,
                    cfg.tol, cfg.max_iter,
                )
        else:
            def run(chunk):
                return _kernels.seek_gaussian(
                    model.points, chunk, model.bandwidth, model.log_weights,
                    cfg.tol, cfg.max_iter,
                )
    else:
        def run(chunk):
            return _kernels.seek_epanechnikov(
                model.points, chunk, model.bandwidth, model.weights, cfg.max_iter
            )

    workers = _worker_count()
    n_seeds = seeds.shape[0]
    if workers == 1 or n_seeds < 2 * workers:
        return run(seeds)
    bounds = np.linspace(0, n_seeds, workers + 1).astype(int)
    chunks = [seeds[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(run, chunks))
    modes = np.concatenate([p[0] for p in parts])
    iters = np.concatenate([p[1] for p in parts])
    status = np.concatenate([p[2] for p in parts])
    return modes, iters, status


def _bbox_diameter(points):
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def ms_cluster(data, kernel=Kernel.GAUSSIAN, bandwidth=1.0, cfg=None, weights=None):
    """Cluster by running mode seeking from every data point and merging the
    convergence points within ``merge_eps``.

    Each cluster center is the mean of its merged convergence points.  The
    result's diagnostics record per-point iteration counts and statuses,
    the merge radius, and (Gaussian) a per-center mode/saddle flag.
    """
    cfg = cfg or MsConfig()
    model = data if isinstance(data, KdeModel) else KdeModel(data, kernel, bandwidth, weights)
    eps = cfg.resolve_eps(model.scale())
    diam = _bbox_diameter(model.points)
    if eps < 10.0 * cfg.tol * diam:
        warnings.warn(
            f"merge_eps={eps:g} is within 10x of tol*diameter={cfg.tol * diam:g}; "
            "merged clusters may split spuriously",
            stacklevel=2,
        )
    endpoints, iters, status = _run_seek(model, model.points, cfg)
    cc = components.cc_tight(endpoints, eps)
    labels = cc.labels
    k = cc.k
    centers = np.empty((k, model.dim))
    for j in range(k):
        centers[j] = endpoints[labels == j].mean(axis=0)
    diagnostics = {
        "iterations": iters,
        "status": status,
        "merge_eps": eps,
        "endpoints": endpoints,
        "backend": _kernels.BACKEND,
    }
    if model.kernel is Kernel.GAUSSIAN:
        diagnostics["center_is_mode"] = np.array([_is_mode(model, c) for c in centers])
    if (status != 0).any():
        diagnostics["non_converged"] = np.flatnonzero(status != 0)
    return Clustering(labels=labels, centers=centers, diagnostics=diagnostics)


@dataclass(frozen=True)
class AssignResult:
    """Out-of-sample assignment: a label, or a new-mode report."""

    label: int
    is_new_mode: bool
    trace: ModeTrace

    @property
    def assigned(self):
        return not self.is_new_mode


def out_of_sample_assign(clustering, model, x, cfg=None):
    """Assign a new point by running mode seeking on the training KDE.

    The run's end point is matched to the nearest existing center within the
    clustering's merge radius; if none is close enough the result reports a
    new mode instead of growing the clustering.
    """
    cfg = cfg or MsConfig()
    eps = clustering.diagnostics.get("merge_eps", cfg.resolve_eps(model.scale()))
    trace = find_mode(model, x, cfg)
    d = np.linalg.norm(clustering.centers - trace.mode[None, :], axis=1)
    j = int(np.argmin(d))
    if d[j] < eps:
        return AssignResult(label=j, is_new_mode=False, trace=trace)
    return AssignResult(label=-1, is_new_mode=True, trace=trace)


@dataclass(frozen=True)
class ConditionalMode:
    """A mode of the conditional density with its basin mass and error bars."""

    mode: np.ndarray
    weight: float
    error_bars: np.ndarray


def _error_bars(model, mode):
    """Inverse curvature of the log-density at a mode, clamped to PSD."""
    p = kde.density(model, mode)
    H_log = kde.hessian(model, mode) / p
    w, V = np.linalg.eigh(-H_log)
    w = np.maximum(w, 1e-12 * max(w.max(), 1e-300))
    return (V / w) @ V.T


def conditional_modes(pairs, sigma, query, cfg=None):
    """All modes of the conditional density of the trailing block given the
    leading block equal to ``query``.

    ``pairs`` stacks (x, y) rows; the split point is the length of ``query``.
    Under a joint Gaussian KDE the conditional is a weighted KDE over the y
    block with weights exp(-||query - x_n||^2 / (2 sigma^2)); modes are found
    by seeking from every y_n and merging.  Returns the modes sorted by
    descending basin weight, each with error bars from the local curvature.
    """
    cfg = cfg or MsConfig()
    P = kde.as_points(pairs, "pairs")
    q = np.asarray(query, dtype=np.float64).ravel()
    d_in = q.shape[0]
    if not 0 < d_in < P.shape[1]:
        raise InputError("query length must split the pair columns in two")
    sigma = float(sigma)
    if sigma <= 0:
        raise InputError("bandwidth must be positive")
    Xb, Yb = P[:, :d_in], P[:, d_in:]
    e = -((Xb - q[None, :]) ** 2).sum(axis=1) / (2.0 * sigma**2)
    if e.max() < -700.0:
        raise OutOfSupportError(
            "query is too far from every sample for the conditional weights"
        )
    e = e - e.max()
    w = np.exp(e)
    w /= w.sum()
    cond = KdeModel(Yb, Kernel.GAUSSIAN, sigma, weights=w)
    endpoints, _, status = _run_seek(cond, Yb, cfg)
    eps = cfg.resolve_eps(sigma)
    ok = status == 0
    cc = components.cc_tight(endpoints[ok], eps)
    out = []
    for j in range(cc.k):
        members = np.flatnonzero(ok)[cc.labels == j]
        mode = endpoints[members].mean(axis=0)
        if not _is_mode(cond, mode):
            continue
        out.append(
            ConditionalMode(
                mode=mode,
                weight=float(w[members].sum()),
                error_bars=_error_bars(cond, mode),
            )
        )
    out.sort(key=lambda m: -m.weight)
    return out


@dataclass(frozen=True, eq=False)
class ContinuationResult:
    """Mode sets tracked over an ascending bandwidth grid.

    ``modes[i]`` holds the modes found at ``sigmas[i]``; ``parents[i][j]``
    is the index in ``modes[i]`` that mode j of the previous level flowed
    to (-1 when its run did not end on a surviving mode).
    """

    sigmas: np.ndarray
    modes: list
    parents: list

    @property
    def counts(self):
        return np.array([m.shape[0] for m in self.modes])


def mode_continuation(data, sigma_grid, cfg=None, weights=None):
    """Track Gaussian KDE modes along an increasing bandwidth grid.

    At the first bandwidth every data point seeds a mode run; afterwards the
    previous level's modes are reused as seeds, which links the levels into
    a tree.  The data mean is added as an extra seed at every level: modes
    can be born near the center of mass as the bandwidth grows (they have no
    parent), and an exact stationary seed is the only way to catch them.
    End points whose Hessian is not negative semidefinite are discarded.
    """
    cfg = cfg or MsConfig()
    X = kde.as_points(data)
    sig = np.asarray(sigma_grid, dtype=np.float64).ravel()
    if sig.size == 0 or (np.diff(sig) <= 0).any() or not (sig > 0).all():
        raise InputError("sigma_grid must be positive and strictly increasing")
    w = None if weights is None else np.asarray(weights, dtype=np.float64)
    mean = (X.mean(axis=0) if w is None else (w / w.sum()) @ X)[None, :]

    modes_per_level = []
    parents = [np.empty(0, dtype=np.int64)]
    prev = None
    for i, s in enumerate(sig):
        model = KdeModel(X, Kernel.GAUSSIAN, s, weights=w)
        base = X if prev is None else prev
        seeds = np.vstack([base, mean])
        endpoints, _, status = _run_seek(model, seeds, cfg)
        eps = cfg.resolve_eps(s)
        cc = components.cc_tight(endpoints, eps)
        keep = []
        comp_to_mode = np.full(cc.k, -1, dtype=np.int64)
        for j in range(cc.k):
            members = cc.labels == j
            center = endpoints[members].mean(axis=0)
            if (status[members] == 0).any() and _is_mode(model, center):
                comp_to_mode[j] = len(keep)
                keep.append(center)
        level_modes = np.asarray(keep) if keep else np.empty((0, X.shape[1]))
        if i > 0:
            n_prev = prev.shape[0]
            parents.append(comp_to_mode[cc.labels[:n_prev]])
        modes_per_level.append(level_modes)
        prev = level_modes if level_modes.shape[0] else mean
    return ContinuationResult(sigmas=sig, modes=modes_per_level, parents=parents)
