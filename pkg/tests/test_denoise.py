"""Manifold denoising tests: tangent estimation and constrained motion."""

import numpy as np
import pytest

from modeseek import InputError, MbmsConfig, bms_step, local_tangent, mbms_run, mbms_step
from modeseek.denoise import _tangent_bases

from ._datasets import distance_to_curve, noisy_spiral, spiral_curve


def line_with_outlier():
    # exact +/- symmetry so neighbor distances tie bitwise
    xs = (np.arange(21) - 10) * 0.2
    pts = np.column_stack([xs, np.zeros_like(xs)])
    return np.vstack([pts, [[0.0, 0.5]]])


class TestLocalTangent:
    def test_collinear_points(self):
        xs = np.linspace(0, 1, 10)
        X = np.column_stack([xs, np.zeros_like(xs)])
        _, basis = local_tangent(X, 4, k=5, tangent_dim=1)
        assert abs(basis[:, 0] @ np.array([1.0, 0.0])) > 1.0 - 1e-8

    def test_zero_dim_basis(self):
        X = np.random.default_rng(0).normal(size=(10, 2))
        base, basis = local_tangent(X, 0, k=4, tangent_dim=0)
        assert basis.shape == (2, 0)

    def test_circle_tangent_perpendicular_to_radius(self):
        theta = np.linspace(0, 2 * np.pi, 120, endpoint=False)
        X = np.column_stack([np.cos(theta), np.sin(theta)])
        for n in (0, 30, 77):
            _, basis = local_tangent(X, n, k=7, tangent_dim=1)
            radial = X[n] / np.linalg.norm(X[n])
            angle = np.degrees(np.arcsin(np.clip(abs(basis[:, 0] @ radial), 0, 1)))
            assert angle < 5.0

    def test_orthonormal_columns(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(40, 4))
        _, basis = local_tangent(X, 5, k=10, tangent_dim=2)
        assert np.abs(basis.T @ basis - np.eye(2)).max() < 1e-10

    def test_config_validation(self):
        with pytest.raises(InputError):
            MbmsConfig(sigma=1.0, k=1, tangent_dim=1)
        with pytest.raises(InputError):
            MbmsConfig(sigma=-1.0)


class TestMbmsStep:
    def test_off_line_point_moves_only_orthogonally(self):
        # k = 8 gives the outlier a tie-free neighborhood symmetric about
        # x = 0, so its estimated tangent is exactly the line direction
        X = line_with_outlier()
        cfg = MbmsConfig(sigma=1.0, k=8, tangent_dim=1)
        Y = mbms_step(X, cfg)
        moved = Y[-1] - X[-1]
        assert abs(moved[0]) < 1e-6           # no motion along the line
        assert X[-1, 1] - Y[-1, 1] > 0.0      # strictly closer to the line
        assert abs(Y[-1, 1]) < abs(X[-1, 1])

    def test_zero_tangent_dim_is_plain_blurring(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(30, 2))
        cfg = MbmsConfig(sigma=0.8, k=5, tangent_dim=0)
        a = mbms_step(X, cfg)
        b = bms_step(X, 0.8)
        assert np.abs(a - b).max() < 1e-12

    def test_orthogonal_vector_unchanged_by_projection(self):
        # points on a line: every tangent is exactly the x axis, so motion
        # that is already vertical survives the projection unchanged
        xs = np.linspace(-2.0, 2.0, 21)
        X = np.column_stack([xs, np.zeros_like(xs)])
        bases, _ = _tangent_bases(X, 5, 1)
        v = np.zeros_like(X)
        v[:, 1] = 0.3
        tang = np.einsum("ndl,nd->nl", bases, v)
        v_perp = v - np.einsum("ndl,nl->nd", bases, tang)
        assert np.abs(v_perp - v).max() < 1e-9

    def test_displacement_orthogonal_to_tangent(self):
        X = noisy_spiral(n=300, n_outliers=30, seed=5)
        cfg = MbmsConfig(sigma=2.0, k=10, tangent_dim=1)
        bases, _ = _tangent_bases(X, cfg.k, cfg.tangent_dim)
        Y = mbms_step(X, cfg)
        moved = Y - X
        along = np.einsum("ndl,nd->nl", bases, moved)
        assert np.abs(along).max() < 1e-10


class TestMbmsRun:
    def test_zero_noise_line_barely_moves(self):
        xs = np.linspace(-2.0, 2.0, 40)
        X = np.column_stack([xs, np.zeros_like(xs)])
        cfg = MbmsConfig(sigma=0.5, k=6, tangent_dim=1, max_iter=3, stop_ratio=0.0)
        Y = mbms_run(X, cfg)
        assert np.abs(Y - X).max() < 1e-6

    def test_max_iter_zero_identity(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(20, 2))
        cfg = MbmsConfig(sigma=1.0, k=5, tangent_dim=1, max_iter=0)
        assert np.array_equal(mbms_run(X, cfg), X)

    def test_spiral_denoising_improves_median_distance(self):
        X = noisy_spiral()
        curve = spiral_curve()
        before = np.median(distance_to_curve(X[:1000], curve))
        cfg = MbmsConfig(sigma=1.5, k=20, tangent_dim=1, max_iter=3, stop_ratio=0.0)
        Y = mbms_run(X, cfg)
        after = np.median(distance_to_curve(Y[:1000], curve))
        assert after < 0.6 * before

    def test_no_tangential_shrinkage_on_noisy_line(self):
        rng = np.random.default_rng(7)
        xs = np.linspace(-3.0, 3.0, 120)
        X = np.column_stack([xs, 0.05 * rng.normal(size=xs.size)])
        cfg = MbmsConfig(sigma=0.5, k=8, tangent_dim=1)
        spread_before = X[:, 0].std()
        ortho_before = X[:, 1].std()
        Y = mbms_step(X, cfg)
        assert abs(Y[:, 0].std() - spread_before) / spread_before < 0.01
        assert Y[:, 1].std() < ortho_before
