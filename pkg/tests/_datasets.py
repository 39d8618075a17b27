"""Synthetic datasets shared across the test modules."""

import numpy as np


def gaussian_mixture(rng, n=200, k=None, box=8.0, spread=0.35, min_gap=4.0):
    """Well-separated isotropic blobs in 2-D; returns (points, labels)."""
    k = k or int(rng.integers(2, 5))
    centers = rng.uniform(-box, box, size=(k, 2))
    for _ in range(200):
        d = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if d.min() > min_gap:
            break
        centers = rng.uniform(-box, box, size=(k, 2))
    labels = rng.integers(0, k, size=n)
    return centers[labels] + spread * rng.normal(size=(n, 2)), labels


def two_blobs_1d(rng=None):
    """The tight two-blob line dataset {0, 0.1} and {10, 10.1}."""
    return np.array([[0.0], [0.1], [10.0], [10.1]])


def five_spirals(n_per=340, noise=0.015, turns=1.0, r0=1.2, growth=5.0, seed=0):
    """Five interleaved spiral arms, evenly spaced in arc length plus jitter."""
    rng = np.random.default_rng(seed)
    pts, labs = [], []
    for a in range(5):
        u = (np.arange(n_per) + 0.5) / n_per
        # invert the arc-length map of r = r0 + growth t for even spacing
        smax = r0 + growth / 2.0
        t = (-r0 + np.sqrt(r0**2 + 2.0 * growth * u * smax)) / growth
        theta = 2.0 * np.pi * turns * t + a * 2.0 * np.pi / 5.0
        r = r0 + growth * t
        x = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
        x += noise * rng.normal(size=x.shape)
        pts.append(x)
        labs.append(np.full(n_per, a))
    return np.vstack(pts), np.concatenate(labs)


def spiral_curve(m=6000):
    """Dense polyline along the clean denoising spiral."""
    t = np.linspace(0.0, 1.0, m)
    theta = 1.5 * np.pi + 3.0 * np.pi * t
    r = 28.0 * t + 2.0
    return np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)


def noisy_spiral(n=1000, n_outliers=100, noise=1.5, seed=3):
    """Noisy spiral in the square [-30, 30]^2 with uniform outliers appended."""
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0.0, 1.0, n))
    theta = 1.5 * np.pi + 3.0 * np.pi * t
    r = 28.0 * t + 2.0
    clean = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=1)
    pts = clean + rng.normal(scale=noise, size=clean.shape)
    outliers = rng.uniform(-30.0, 30.0, size=(n_outliers, 2))
    return np.vstack([pts, outliers])


def distance_to_curve(points, curve):
    """Euclidean distance from each point to the nearest curve sample."""
    d2 = ((points[:, None, :] - curve[None, :, :]) ** 2).sum(axis=-1)
    return np.sqrt(d2.min(axis=1))


def two_band_image(size=32, lo=0, hi=255):
    """Left half dark, right half bright; returns (image, truth labels)."""
    img = np.full((size, size), lo, dtype=np.int64)
    img[:, size // 2 :] = hi
    truth = (np.arange(size)[None, :] >= size // 2).astype(np.int64)
    return img, np.broadcast_to(truth, (size, size)).copy()


def tight_cluster_instance(rng, eps=0.3):
    """Clusters with diameter <= eps/3 separated by gaps >= 3 eps."""
    k = int(rng.integers(2, 11))
    centers = rng.uniform(-50, 50, size=(k, 2))
    for _ in range(500):
        d = np.linalg.norm(centers[:, None] - centers[None, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if d.min() >= 3 * eps + 2 * eps / 3:
            break
        centers = rng.uniform(-50, 50, size=(k, 2))
    sizes = rng.integers(1, 8, size=k)
    pts = np.vstack(
        [
            c + rng.uniform(-1, 1, size=(s, 2)) * (eps / 6)
            for c, s in zip(centers, sizes)
        ]
    )
    return pts[rng.permutation(len(pts))]


def label_agreement(a, b):
    """Fraction of positions where two binary labelings agree, up to swap."""
    a = np.asarray(a).ravel()
    b = np.asarray(b).ravel()
    return max((a == b).mean(), (a == 1 - b).mean())
