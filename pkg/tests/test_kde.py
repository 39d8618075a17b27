"""Density, derivative, and bandwidth-selection tests."""

import numpy as np
import pytest

from modeseek import (
    InputError,
    KdeModel,
    Kernel,
    MsConfig,
    NoSolutionError,
    UnsupportedKernelError,
    density,
    entropic_bandwidths,
    find_mode,
    gradient,
    hessian,
    local_covariance,
    posterior,
)
from modeseek.kde import _perplexity


def fd_gradient(model, x, h):
    d = x.size
    out = np.empty(d)
    for a in range(d):
        e = np.zeros(d)
        e[a] = h
        out[a] = (density(model, x + e) - density(model, x - e)) / (2 * h)
    return out


def fd_hessian(model, x, h):
    d = x.size
    out = np.empty((d, d))
    eye = np.eye(d) * h
    for a in range(d):
        for b in range(d):
            out[a, b] = (
                density(model, x + eye[a] + eye[b])
                - density(model, x + eye[a] - eye[b])
                - density(model, x - eye[a] + eye[b])
                + density(model, x - eye[a] - eye[b])
            ) / (4 * h * h)
    return out


class TestDensity:
    def test_gaussian_pair(self):
        m = KdeModel(np.array([[0.0], [2.0]]), Kernel.GAUSSIAN, 1.0)
        assert density(m, [1.0]) == pytest.approx(np.exp(-0.5), rel=1e-12)

    def test_single_point_at_itself(self):
        m = KdeModel(np.array([[3.0, -1.0]]), Kernel.GAUSSIAN, 0.7)
        assert density(m, [3.0, -1.0]) == pytest.approx(1.0)

    def test_epanechnikov_hand_value(self):
        m = KdeModel(np.array([[0.0], [1.0], [5.0]]), Kernel.EPANECHNIKOV, 2.0)
        assert density(m, [0.5]) == pytest.approx(0.625, abs=1e-12)

    def test_nonnegative_and_zero_outside_support(self):
        m = KdeModel(np.array([[0.0], [1.0]]), Kernel.EPANECHNIKOV, 0.5)
        assert density(m, [10.0]) == 0.0
        qs = np.linspace(-2, 3, 101)[:, None]
        assert (density(m, qs) >= 0).all()

    def test_normalized_gaussian_integrates_to_one(self):
        m = KdeModel(np.array([[0.0], [1.5]]), Kernel.GAUSSIAN, 0.8)
        xs = np.linspace(-8, 10, 4001)
        vals = density(m, xs[:, None], normalized=True)
        assert np.trapezoid(vals, xs) == pytest.approx(1.0, abs=1e-6)

    def test_normalized_rejects_epanechnikov(self):
        m = KdeModel(np.array([[0.0]]), Kernel.EPANECHNIKOV, 1.0)
        with pytest.raises(UnsupportedKernelError):
            density(m, [0.0], normalized=True)

    def test_dimension_mismatch(self):
        m = KdeModel(np.zeros((3, 2)), Kernel.GAUSSIAN, 1.0)
        with pytest.raises(InputError):
            density(m, [0.0])


class TestModelValidation:
    def test_bad_bandwidths(self):
        with pytest.raises(InputError):
            KdeModel(np.zeros((2, 1)), Kernel.GAUSSIAN, -1.0)
        with pytest.raises(InputError):
            KdeModel(np.zeros((2, 1)), Kernel.GAUSSIAN, np.array([1.0, 2.0, 3.0]))

    def test_bad_weights(self):
        with pytest.raises(InputError):
            KdeModel(np.zeros((2, 1)), weights=np.array([0.5, -0.5]))
        with pytest.raises(InputError):
            KdeModel(np.zeros((2, 1)), weights=np.array([1.0]))

    def test_weights_normalized(self):
        m = KdeModel(np.zeros((4, 1)), weights=np.array([1.0, 1.0, 1.0, 1.0]))
        assert m.weights.sum() == pytest.approx(1.0)


class TestGradient:
    def test_symmetry_zero(self):
        m = KdeModel(np.array([[-1.0], [1.0]]), Kernel.GAUSSIAN, 1.0)
        assert gradient(m, [0.0]) == pytest.approx(0.0, abs=1e-15)

    def test_single_point_hand_value(self):
        m = KdeModel(np.array([[0.0]]), Kernel.GAUSSIAN, 1.0)
        assert gradient(m, [0.5])[0] == pytest.approx(-0.5 * np.exp(-0.125), rel=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(9)
        for _ in range(3):
            X = rng.normal(size=(12, 3))
            sigma = rng.uniform(0.5, 1.5)
            m = KdeModel(X, Kernel.GAUSSIAN, sigma)
            for _ in range(100):
                x = rng.normal(size=3)
                g = gradient(m, x)
                gfd = fd_gradient(m, x, 1e-5 * sigma)
                assert np.abs(g - gfd).max() <= 1e-5 * max(np.abs(g).max(), 1e-12)

    def test_epanechnikov_matches_fd_off_boundary(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(20, 2))
        m = KdeModel(X, Kernel.EPANECHNIKOV, 1.3)
        for _ in range(20):
            x = rng.normal(size=2) * 0.5
            t = ((x - X) ** 2).sum(axis=1) / 1.3**2
            if np.abs(t - 1.0).min() < 1e-3:
                continue
            g = gradient(m, x)
            gfd = fd_gradient(m, x, 1e-7)
            assert np.abs(g - gfd).max() <= 1e-5 * max(np.abs(g).max(), 1e-9)


class TestHessian:
    def test_two_point_mode_is_maximum(self):
        # separation exactly 2 sigma is the merge bifurcation: curvature 0
        m = KdeModel(np.array([[-1.0], [1.0]]), Kernel.GAUSSIAN, 1.0)
        assert hessian(m, [0.0])[0, 0] == pytest.approx(0.0, abs=1e-15)
        # any wider bandwidth leaves a single strict maximum at 0
        m = KdeModel(np.array([[-1.0], [1.0]]), Kernel.GAUSSIAN, 1.2)
        assert hessian(m, [0.0])[0, 0] < 0

    def test_exactly_symmetric(self):
        rng = np.random.default_rng(2)
        m = KdeModel(rng.normal(size=(10, 4)), Kernel.GAUSSIAN, 0.9)
        H = hessian(m, rng.normal(size=4))
        assert np.abs(H - H.T).max() == 0.0

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(15, 2))
        m = KdeModel(X, Kernel.GAUSSIAN, 1.1)
        for _ in range(100):
            x = rng.normal(size=2)
            H = hessian(m, x)
            Hfd = fd_hessian(m, x, 1e-4)
            assert np.abs(H - Hfd).max() <= 1e-5 * max(np.abs(H).max(), 1e-9)

    def test_curvature_identity_at_mode(self):
        # at a stationary point: hessian = (p / sigma^2)(jacobian - I)
        from modeseek import ms_jacobian

        rng = np.random.default_rng(13)
        X = rng.normal(size=(25, 2))
        sigma = 0.8
        m = KdeModel(X, Kernel.GAUSSIAN, sigma)
        tr = find_mode(m, X[0], MsConfig(tol=1e-13, max_iter=200000))
        H = hessian(m, tr.mode)
        rhs = density(m, tr.mode) / sigma**2 * (ms_jacobian(m, tr.mode) - np.eye(2))
        assert np.abs(H - rhs).max() <= 1e-5 * np.abs(H).max()

    def test_rejects_epanechnikov(self):
        m = KdeModel(np.zeros((2, 1)), Kernel.EPANECHNIKOV, 1.0)
        with pytest.raises(UnsupportedKernelError):
            hessian(m, [0.0])


class TestPosteriorAndCovariance:
    def test_posterior_normalized(self):
        rng = np.random.default_rng(3)
        m = KdeModel(rng.normal(size=(30, 2)), Kernel.GAUSSIAN, 0.6)
        for _ in range(10):
            r = posterior(m, rng.normal(size=2))
            assert (r >= 0).all()
            assert abs(r.sum() - 1.0) < 1e-12

    def test_single_point_zero_covariance(self):
        m = KdeModel(np.array([[2.0, 3.0]]), Kernel.GAUSSIAN, 1.0)
        assert np.abs(local_covariance(m, [0.0, 0.0])).max() == 0.0

    def test_wide_bandwidth_pair(self):
        m = KdeModel(np.array([[-1.0], [1.0]]), Kernel.GAUSSIAN, 10.0)
        assert local_covariance(m, [0.0])[0, 0] == pytest.approx(1.0, rel=1e-6)

    def test_psd_on_random_data(self):
        rng = np.random.default_rng(21)
        m = KdeModel(rng.normal(size=(40, 3)), Kernel.GAUSSIAN, 0.7)
        for _ in range(10):
            S = local_covariance(m, rng.normal(size=3))
            assert np.linalg.eigvalsh(S).min() >= -1e-12


class TestAffineEquivariance:
    def test_mode_scales_with_data_and_bandwidth(self):
        rng = np.random.default_rng(17)
        X = rng.normal(size=(20, 2))
        cfg = MsConfig(tol=1e-12, max_iter=100000)
        c = 3.7
        for start in X[:5]:
            m1 = find_mode(KdeModel(X, Kernel.GAUSSIAN, 0.9), start, cfg).mode
            m2 = find_mode(KdeModel(c * X, Kernel.GAUSSIAN, c * 0.9), c * start, cfg).mode
            assert np.abs(c * m1 - m2).max() < 1e-6


class TestEntropicBandwidths:
    def test_reproduces_target_perplexity(self):
        X = np.array([[0.0], [1.0], [3.0]])
        s = entropic_bandwidths(X, 1.5)
        d2 = np.array([1.0, 9.0])  # squared distances from point 0
        assert _perplexity(d2, 0.5 / s[0] ** 2) == pytest.approx(1.5, abs=1e-6)

    def test_k_equal_n_minus_one_uniform_limit(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(6, 2))
        s = entropic_bandwidths(X, 5.0)
        for n in range(6):
            d2 = ((X - X[n]) ** 2).sum(axis=1)
            d2 = np.delete(d2, n)
            assert _perplexity(d2, 0.5 / s[n] ** 2) == pytest.approx(5.0, abs=1e-6)

    def test_equidistant_pair_unreachable(self):
        X = np.array([[0.0], [1.0], [-1.0]])
        with pytest.raises(NoSolutionError, match="point 0"):
            entropic_bandwidths(X, 1.5)

    def test_perplexity_out_of_range(self):
        X = np.zeros((4, 1)) + np.arange(4)[:, None]
        with pytest.raises(InputError):
            entropic_bandwidths(X, 1.0)
        with pytest.raises(InputError):
            entropic_bandwidths(X, 3.5)
