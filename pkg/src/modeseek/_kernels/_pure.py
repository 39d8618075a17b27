"""NumPy implementation of the hot numerical kernels.

This module mirrors the compiled extension ``modeseek._kernels._core`` and
is selected at import time when the extension is unavailable (or when
``MODESEEK_PURE=1``).  Batched iteration with an active-row mask keeps the
work vectorized; every row's trajectory is independent, so results do not
depend on chunking.
"""

import numpy as np

# Scratch budget per chunk, in doubles (~32 MB).
_CHUNK_DOUBLES = 4_000_000


def _chunk_rows(n_queries, n_data):
    return max(1, _CHUNK_DOUBLES // max(1, n_data))


def _sq_dists(Q, X):
    """Pairwise squared Euclidean distances, shape (len(Q), len(X))."""
    d2 = (Q * Q).sum(axis=1)[:, None] + (X * X).sum(axis=1)[None, :]
    d2 -= 2.0 * (Q @ X.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def _gaussian_exponents(X, Q, sigma, logw):
    """Log of the unnormalized Gaussian responsibilities, shape (M, N)."""
    sigma = np.asarray(sigma, dtype=np.float64)
    d2 = _sq_dists(Q, X)
    if sigma.ndim == 0:
        e = d2 * (-0.5 / float(sigma) ** 2)
    else:
        # per-point bandwidths: one column per data point
        e = d2 * (-0.5 / sigma**2)[None, :]
    if logw is not None:
        e += logw[None, :]
    return e


def shift_gaussian(X, Q, sigma, logw=None):
    """One synchronous Gaussian mean-shift step for every row of Q."""
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    out = np.empty_like(Q)
    step = _chunk_rows(Q.shape[0], X.shape[0])
    for s in range(0, Q.shape[0], step):
        e = _gaussian_exponents(X, Q[s : s + step], sigma, logw)
        e -= e.max(axis=1, keepdims=True)
        w = np.exp(e)
        w /= w.sum(axis=1, keepdims=True)
        out[s : s + step] = w @ X
    return out


def shift_gaussian_adaptive(X, Q, sigmas, logw=None):
    """One adaptive-bandwidth step: responsibilities reweighted by 1/sigma_n^2."""
    extra = -2.0 * np.log(sigmas)
    logw = extra if logw is None else logw + extra
    return shift_gaussian(X, Q, sigmas, logw)


def shift_epanechnikov(X, Q, sigma, weights=None):
    """One Epanechnikov step: weighted mean of the data within distance sigma.

    Returns ``(shifted, ok)`` where ``ok[m]`` is False when the neighborhood
    of row m is empty (the shifted row is then a copy of the query).
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    out = np.array(Q, copy=True)
    ok = np.ones(Q.shape[0], dtype=bool)
    r2 = float(sigma) ** 2
    step = _chunk_rows(Q.shape[0], X.shape[0])
    for s in range(0, Q.shape[0], step):
        # boundary included: the one-sided (inside) profile derivative is used
        inside = _sq_dists(Q[s : s + step], X) <= r2
        w = inside.astype(np.float64)
        if weights is not None:
            w *= weights[None, :]
        tot = w.sum(axis=1)
        good = tot > 0.0
        ok[s : s + step] = good
        if good.any():
            out[s : s + step][good] = (w[good] @ X) / tot[good, None]
    return out, ok


def log_density_gaussian(X, Q, sigma, logw=None):
    """log sum_n exp(logw_n) * exp(-||(q - x_n)/sigma_n||^2 / 2), per row of Q."""
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    out = np.empty(Q.shape[0])
    step = _chunk_rows(Q.shape[0], X.shape[0])
    for s in range(0, Q.shape[0], step):
        e = _gaussian_exponents(X, Q[s : s + step], sigma, logw)
        m = e.max(axis=1)
        out[s : s + step] = m + np.log(np.exp(e - m[:, None]).sum(axis=1))
    return out


def _relative_step_done(Z_old, Z_new, tol):
    step = np.linalg.norm(Z_new - Z_old, axis=1)
    return step <= tol * (1.0 + np.linalg.norm(Z_old, axis=1))


def _seek(X, seeds, step_fn, done_fn, max_iter):
    """Shared fixed-point driver; returns (modes, iters, status)."""
    Z = np.array(np.atleast_2d(seeds), dtype=np.float64, copy=True)
    M = Z.shape[0]
    iters = np.zeros(M, dtype=np.int64)
    status = np.ones(M, dtype=np.int8)  # 1 = max_iter
    chunk = _chunk_rows(M, X.shape[0])
    for s in range(0, M, chunk):
        idx = np.arange(s, min(s + chunk, M))
        it = 0
        while idx.size and it < max_iter:
            it += 1
            Z_new, ok = step_fn(Z[idx])
            bad = ~ok
            if bad.any():
                status[idx[bad]] = 2  # empty neighborhood
                iters[idx[bad]] = it - 1
                idx, Z_new = idx[ok], Z_new[ok]
                if not idx.size:
                    break
            done = done_fn(Z[idx], Z_new)
            iters[idx] = it
            Z[idx] = Z_new
            status[idx[done]] = 0
            idx = idx[~done]
    return Z, iters, status


def seek_gaussian(X, seeds, sigma, logw=None, tol=1e-6, max_iter=10000):
    """Iterate the Gaussian update from every seed until the relative step
    drops below tol.  Returns (modes, iters, status) with status 0 converged,
    1 max_iter."""

    def step(Zc):
        return shift_gaussian(X, Zc, sigma, logw), np.ones(len(Zc), dtype=bool)

    def done(Zo, Zn):
        return _relative_step_done(Zo, Zn, tol)

    return _seek(X, seeds, step, done, max_iter)


def seek_gaussian_adaptive(X, seeds, sigmas, logw=None, tol=1e-6, max_iter=10000):
    """Adaptive-bandwidth variant of seek_gaussian."""
    extra = -2.0 * np.log(sigmas)
    lw = extra if logw is None else logw + extra

    def step(Zc):
        return shift_gaussian(X, Zc, sigmas, lw), np.ones(len(Zc), dtype=bool)

    def done(Zo, Zn):
        return _relative_step_done(Zo, Zn, tol)

    return _seek(X, seeds, step, done, max_iter)


def seek_epanechnikov(X, seeds, sigma, weights=None, max_iter=10000):
    """Iterate the Epanechnikov update until an exact fixed point (zero step).

    Finite-support profile: convergence happens in finitely many iterations,
    so the stop test is bitwise equality rather than a tolerance.  Status 2
    marks seeds whose neighborhood went empty.
    """

    def step(Zc):
        return shift_epanechnikov(X, Zc, sigma, weights)

    def done(Zo, Zn):
        return (Zo == Zn).all(axis=1)

    return _seek(X, seeds, step, done, max_iter)


def cc_tight_labels(P, eps, hints=None):
    """Incremental connected components under the tight-clusters assumption.

    Scans points in index order and links each one to the first existing
    representative closer than eps (strict); otherwise the point opens a new
    component and becomes its representative.  ``hints[n]``, when given and
    valid, is a component index to try before the ordered scan.

    Returns (labels, rep_indices).
    """
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    n_pts = P.shape[0]
    labels = np.empty(n_pts, dtype=np.int64)
    reps = np.empty_like(P)
    rep_idx = np.empty(n_pts, dtype=np.int64)
    eps2 = float(eps) ** 2
    k = 0
    for n in range(n_pts):
        assigned = -1
        if hints is not None:
            h = int(hints[n])
            if 0 <= h < k:
                d = P[n] - reps[h]
                if d @ d < eps2:
                    assigned = h
        if assigned < 0 and k:
            d2 = ((P[n] - reps[:k]) ** 2).sum(axis=1)
            close = np.flatnonzero(d2 < eps2)
            if close.size:
                assigned = int(close[0])
        if assigned < 0:
            reps[k] = P[n]
            rep_idx[k] = n
            assigned = k
            k += 1
        labels[n] = assigned
    return labels, rep_idx[:k].copy()
