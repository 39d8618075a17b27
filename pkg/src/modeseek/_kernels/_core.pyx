# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: per-seed mode seeking and tight connected components.

Same contracts as modeseek._kernels._pure; the seed loops run without the
GIL so callers can parallelize over seed chunks with threads.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


cdef inline double _sqdist(const double* a, const double* b, Py_ssize_t D) nogil:
    cdef Py_ssize_t d
    cdef double acc = 0.0, diff
    for d in range(D):
        diff = a[d] - b[d]
        acc += diff * diff
    return acc


cdef int _gauss_seek_one(const double[:, ::1] X, double* z, double* y,
                         double* e, const double* c, const double* inv2s2,
                         double tol, long max_iter, long* niter) nogil:
    """Iterate z <- weighted mean until the relative step <= tol.

    c[n] holds the per-point additive log weight, inv2s2[n] = 1/(2 sigma_n^2).
    Returns 0 on convergence, 1 on max_iter.
    """
    cdef Py_ssize_t N = X.shape[0], D = X.shape[1]
    cdef Py_ssize_t n, d
    cdef long it
    cdef double emax, w, s, step2, zn2, lim
    for it in range(max_iter):
        emax = -1e308
        for n in range(N):
            e[n] = c[n] - _sqdist(z, &X[n, 0], D) * inv2s2[n]
            if e[n] > emax:
                emax = e[n]
        s = 0.0
        for d in range(D):
            y[d] = 0.0
        for n in range(N):
            w = exp(e[n] - emax)
            s += w
            for d in range(D):
                y[d] += w * X[n, d]
        step2 = 0.0
        zn2 = 0.0
        for d in range(D):
            y[d] /= s
            step2 += (y[d] - z[d]) * (y[d] - z[d])
            zn2 += z[d] * z[d]
        for d in range(D):
            z[d] = y[d]
        lim = tol * (1.0 + sqrt(zn2))
        if step2 <= lim * lim:
            niter[0] = it + 1
            return 0
    niter[0] = max_iter
    return 1


def _seek_gaussian_impl(double[:, ::1] X, double[:, ::1] seeds,
                        double[::1] c, double[::1] inv2s2,
                        double tol, long max_iter):
    cdef Py_ssize_t M = seeds.shape[0], N = X.shape[0], D = X.shape[1]
    modes_np = np.array(seeds, dtype=np.float64, order="C", copy=True)
    iters_np = np.zeros(M, dtype=np.int64)
    status_np = np.zeros(M, dtype=np.int8)
    cdef double[:, ::1] modes = modes_np
    cdef long[::1] iters = iters_np
    cdef cnp.int8_t[::1] status = status_np
    scratch_np = np.empty(N + D, dtype=np.float64)
    cdef double[::1] scratch = scratch_np
    cdef Py_ssize_t m
    cdef long ni
    with nogil:
        for m in range(M):
            status[m] = <cnp.int8_t> _gauss_seek_one(
                X, &modes[m, 0], &scratch[N], &scratch[0],
                &c[0], &inv2s2[0], tol, max_iter, &ni)
            iters[m] = ni
    return modes_np, iters_np, status_np


def _gauss_terms(X, sigma, logw, adaptive_reweight):
    N = X.shape[0]
    sig = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (N,))
    c = np.zeros(N) if logw is None else np.array(logw, dtype=np.float64)
    if adaptive_reweight:
        c = c - 2.0 * np.log(sig)
    inv2s2 = 0.5 / sig**2
    return np.ascontiguousarray(c), np.ascontiguousarray(inv2s2)


def seek_gaussian(X, seeds, sigma, logw=None, tol=1e-6, max_iter=10000):
    """Iterate the Gaussian update from every seed until the relative step
    drops below tol.  Returns (modes, iters, status) with status 0 converged,
    1 max_iter."""
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    seeds = np.ascontiguousarray(np.atleast_2d(seeds), dtype=np.float64)
    c, inv2s2 = _gauss_terms(X, sigma, logw, False)
    return _seek_gaussian_impl(X, seeds, c, inv2s2, tol, max_iter)


def seek_gaussian_adaptive(X, seeds, sigmas, logw=None, tol=1e-6, max_iter=10000):
    """Adaptive-bandwidth variant of seek_gaussian."""
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    seeds = np.ascontiguousarray(np.atleast_2d(seeds), dtype=np.float64)
    c, inv2s2 = _gauss_terms(X, sigmas, logw, True)
    return _seek_gaussian_impl(X, seeds, c, inv2s2, tol, max_iter)


cdef int _epan_seek_one(const double[:, ::1] X, double* z, double* y,
                        const double* w, double r2, long max_iter,
                        long* niter) nogil:
    cdef Py_ssize_t N = X.shape[0], D = X.shape[1]
    cdef Py_ssize_t n, d
    cdef long it
    cdef double s, wn
    cdef bint same
    for it in range(max_iter):
        s = 0.0
        for d in range(D):
            y[d] = 0.0
        for n in range(N):
            # boundary included: one-sided (inside) profile derivative
            if _sqdist(z, &X[n, 0], D) <= r2:
                wn = 1.0 if w is NULL else w[n]
                s += wn
                for d in range(D):
                    y[d] += wn * X[n, d]
        if s <= 0.0:
            niter[0] = it
            return 2
        same = True
        for d in range(D):
            y[d] /= s
            if y[d] != z[d]:
                same = False
        for d in range(D):
            z[d] = y[d]
        if same:
            niter[0] = it + 1
            return 0
    niter[0] = max_iter
    return 1


def seek_epanechnikov(X, seeds, sigma, weights=None, max_iter=10000):
    """Iterate the Epanechnikov update until an exact fixed point (zero step).

    Status 2 marks seeds whose neighborhood went empty.
    """
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    seeds_np = np.array(np.atleast_2d(seeds), dtype=np.float64, order="C", copy=True)
    cdef double[:, ::1] Xv = X
    cdef double[:, ::1] modes = seeds_np
    cdef Py_ssize_t M = modes.shape[0], D = Xv.shape[1]
    iters_np = np.zeros(M, dtype=np.int64)
    status_np = np.zeros(M, dtype=np.int8)
    cdef long[::1] iters = iters_np
    cdef cnp.int8_t[::1] status = status_np
    ybuf_np = np.empty(D, dtype=np.float64)
    cdef double[::1] ybuf = ybuf_np
    cdef double[::1] wv
    cdef double* wptr = NULL
    if weights is not None:
        wv = np.ascontiguousarray(weights, dtype=np.float64)
        wptr = &wv[0]
    cdef double r2 = float(sigma) ** 2
    cdef long mi = max_iter
    cdef Py_ssize_t m
    cdef long ni
    with nogil:
        for m in range(M):
            status[m] = <cnp.int8_t> _epan_seek_one(
                Xv, &modes[m, 0], &ybuf[0], wptr, r2, mi, &ni)
            iters[m] = ni
    return seeds_np, iters_np, status_np


def cc_tight_labels(P, eps, hints=None):
    """Incremental connected components under the tight-clusters assumption.

    Same contract as the pure version: index-order scan, strict d < eps
    against component representatives (first member), optional per-point
    hint component tried first.  Distances accumulate dimension by dimension
    and exit early once eps^2 is exceeded.

    Returns (labels, rep_indices).
    """
    P = np.ascontiguousarray(np.atleast_2d(P), dtype=np.float64)
    cdef double[:, ::1] Pv = P
    cdef Py_ssize_t N = Pv.shape[0], D = Pv.shape[1]
    labels_np = np.empty(N, dtype=np.int64)
    rep_np = np.empty(N, dtype=np.int64)
    cdef long[::1] labels = labels_np
    cdef long[::1] rep_idx = rep_np
    cdef long[::1] hv
    cdef bint has_hints = hints is not None
    if has_hints:
        hv = np.ascontiguousarray(hints, dtype=np.int64)
    cdef double eps2 = float(eps) ** 2
    cdef Py_ssize_t n, d
    cdef long k = 0, j, h, assigned
    cdef double acc, diff
    cdef const double* p
    cdef const double* r
    for n in range(N):
        p = &Pv[n, 0]
        assigned = -1
        if has_hints:
            h = hv[n]
            if 0 <= h < k:
                r = &Pv[rep_idx[h], 0]
                acc = 0.0
                for d in range(D):
                    diff = p[d] - r[d]
                    acc += diff * diff
                    if acc >= eps2:
                        break
                if acc < eps2:
                    assigned = h
        if assigned < 0:
            for j in range(k):
                r = &Pv[rep_idx[j], 0]
                acc = 0.0
                for d in range(D):
                    diff = p[d] - r[d]
                    acc += diff * diff
                    if acc >= eps2:
                        break
                if acc < eps2:
                    assigned = j
                    break
        if assigned < 0:
            rep_idx[k] = n
            assigned = k
            k += 1
        labels[n] = assigned
    return labels_np, rep_np[:k].copy()
