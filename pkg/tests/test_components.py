"""Connected-components merging tests."""

import numpy as np
import pytest

from modeseek import cc_naive, cc_tight
from modeseek._kernels import pure

from ._datasets import tight_cluster_instance as tight_instance


def partitions_equal(a, b):
    """Same partition up to label renaming."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    pairing = {}
    for x, y in zip(a, b):
        if pairing.setdefault(x, y) != y:
            return False
    return len(set(pairing.values())) == len(pairing)


class TestNaive:
    def test_separated_pairs(self):
        pts = np.array([[0.0], [0.1], [5.0], [5.1]])
        res = cc_naive(pts, 0.5)
        assert res.k == 2
        assert list(res.labels) == [0, 0, 1, 1]

    def test_huge_eps_single_component(self):
        pts = np.array([[0.0], [0.1], [5.0], [5.1]])
        assert cc_naive(pts, 100.0).k == 1

    def test_chain_transitivity(self):
        pts = np.array([[0.0], [0.4], [0.8]])
        assert cc_naive(pts, 0.5).k == 1

    def test_strict_inequality(self):
        pts = np.array([[0.0], [0.5]])
        assert cc_naive(pts, 0.5).k == 2

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        pts = tight_instance(rng)
        base = cc_naive(pts, 0.3)
        for _ in range(5):
            perm = rng.permutation(len(pts))
            shuffled = cc_naive(pts[perm], 0.3)
            assert partitions_equal(base.labels[perm], shuffled.labels)

    def test_representative_is_member(self):
        rng = np.random.default_rng(1)
        pts = tight_instance(rng)
        res = cc_naive(pts, 0.3)
        for k, rep in enumerate(res.representatives):
            members = pts[res.labels == k]
            assert (np.abs(members - rep).sum(axis=1) == 0).any()

    def test_callable_metric(self):
        pts = np.array([[0.0], [3.0], [7.0]])
        res = cc_naive(pts, 4.5, metric=lambda a, b: abs(a[0] - b[0]))
        assert res.k == 1


class TestTight:
    def test_matches_naive_on_separated_pairs(self):
        pts = np.array([[0.0], [0.1], [5.0], [5.1]])
        assert list(cc_tight(pts, 0.5).labels) == list(cc_naive(pts, 0.5).labels)

    def test_matches_naive_on_random_tight_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            pts = tight_instance(rng)
            a = cc_tight(pts, 0.3)
            b = cc_naive(pts, 0.3)
            assert partitions_equal(a.labels, b.labels)

    def test_chain_may_split(self):
        # assumption violated: the scan may or may not join the chain ends
        pts = np.array([[0.0], [0.4], [0.8]])
        res = cc_tight(pts, 0.5)
        assert res.k in (1, 2)

    def test_first_point_is_representative(self):
        pts = np.array([[0.0], [0.05], [9.0], [9.05]])
        res = cc_tight(pts, 0.5)
        assert np.array_equal(res.representatives, np.array([[0.0], [9.0]]))

    def test_hints_do_not_change_tight_result(self):
        rng = np.random.default_rng(3)
        pts = tight_instance(rng)
        plain = cc_tight(pts, 0.3)
        hinted = cc_tight(pts, 0.3, hints=np.zeros(len(pts), dtype=np.int64))
        assert np.array_equal(plain.labels, hinted.labels)

    def test_callable_metric(self):
        pts = np.array([[0.0], [0.1], [2.0]])
        res = cc_tight(pts, 0.5, metric=lambda a, b: abs(a[0] - b[0]))
        assert list(res.labels) == [0, 0, 1]


class TestEarlyExit:
    def test_same_edges_as_full_distance(self):
        # dimension-wise accumulation with cutoff must give the d < eps
        # decision of the full sum
        rng = np.random.default_rng(11)
        pts = rng.normal(size=(60, 5))
        eps = 1.7
        labels, rep_idx = pure.cc_tight_labels(pts, eps)
        # replay the scan with full-precision distances
        reps = []
        for n in range(len(pts)):
            assigned = -1
            for j, r in enumerate(reps):
                if np.sqrt(((pts[n] - pts[r]) ** 2).sum()) < eps:
                    assigned = j
                    break
            if assigned < 0:
                reps.append(n)
                assigned = len(reps) - 1
            assert labels[n] == assigned
        assert list(rep_idx) == reps


def test_eps_must_be_positive():
    from modeseek.errors import InputError

    with pytest.raises(InputError):
        cc_naive(np.zeros((2, 1)), 0.0)
