
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixedisc.errors import UndefinedRatioError
from mixedisc.linalg import build_adjacency
from mixedisc.metrics import (classify_from_eigenvalues, classify_signal, hard_error_rate,
                              hard_error_rate_brute, mixed_hamming, mixed_hamming_brute,
                              summary_stats)


def random_pmfs(rng, n, K, pure_frac=0.3):
    Pi = rng.dirichlet(np.ones(K), size=n)
    pure = rng.random(n) < pure_frac
    Pi[pure] = np.eye(K)[rng.integers(0, K, pure.sum())]
    return Pi


class TestMixedHamming:
    def test_identical(self, rng):
        Pi = random_pmfs(rng, 30, 3)
        assert mixed_hamming(Pi, Pi) == 0.0

    def test_column_swap(self, rng):
        Pi = random_pmfs(rng, 30, 3)
        assert mixed_hamming(Pi[:, [2, 0, 1]], Pi) == pytest.approx(0.0, abs=1e-15)

    def test_half_half(self):
        Pi_hat = np.eye(2)
        Pi = np.full((2, 2), 0.5)
        assert mixed_hamming(Pi_hat, Pi) == pytest.approx(1.0)
        assert mixed_hamming_brute(Pi_hat, Pi) == pytest.approx(1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            mixed_hamming(np.eye(3), np.eye(2))

    @pytest.mark.parametrize("K", [1, 2, 3, 4, 5])
    def test_matches_enumeration(self, rng, K):
        for _ in range(10):
            a, b = random_pmfs(rng, 25, K), random_pmfs(rng, 25, K)
            assert mixed_hamming(a, b) == pytest.approx(mixed_hamming_brute(a, b), abs=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10**6), K=st.integers(1, 4), n=st.integers(1, 20))
    def test_pseudometric(self, seed, K, n):
        rng = np.random.default_rng(seed)
        a, b, c = (random_pmfs(rng, n, K) for _ in range(3))
        ab, ba = mixed_hamming(a, b), mixed_hamming(b, a)
        assert ab == pytest.approx(ba, abs=1e-12)
        assert 0 <= ab <= 2 + 1e-12
        assert mixed_hamming(a, c) <= ab + mixed_hamming(b, c) + 1e-12
        perm = rng.permutation(K)
        assert mixed_hamming(a[:, perm], a) == pytest.approx(0.0, abs=1e-15)


class TestHardError:
    def test_exact(self):
        Pi = np.eye(3)[[0, 1, 2, 2]]
        assert hard_error_rate(Pi, [0, 1, 2, 2]) == (0, 0.0)

    def test_relabeled(self):
        Pi = np.eye(3)[[0, 1, 2, 2]]
        assert hard_error_rate(Pi, [2, 0, 1, 1]) == (0, 0.0)

    def test_one_mistake(self):
        Pi = np.eye(2)[[0, 0, 1, 1]]
        assert hard_error_rate(Pi, [0, 1, 1, 1]) == (1, 0.25)
        assert hard_error_rate_brute(Pi, [0, 1, 1, 1]) == (1, 0.25)

    def test_argmax_tie_lowest(self):
        Pi = np.array([[0.5, 0.5], [0.0, 1.0]])
        assert hard_error_rate(Pi, [0, 1]) == (0, 0.0)
        assert hard_error_rate(Pi, [1, 1]) == (1, 0.5)

    @pytest.mark.parametrize("K", [2, 3, 4, 5])
    def test_matches_enumeration(self, rng, K):
        for _ in range(10):
            Pi = random_pmfs(rng, 30, K)
            labels = rng.integers(0, K, 30)
            assert hard_error_rate(Pi, labels) == hard_error_rate_brute(Pi, labels)

    def test_bad_labels(self):
        with pytest.raises(ValueError):
            hard_error_rate(np.eye(2), [0, 2])
        with pytest.raises(ValueError):
            hard_error_rate(np.eye(2), [0])


class TestClassification:
    def test_opposite_signs_weak(self):
        cls = classify_from_eigenvalues(5.0, -4.8)
        assert cls.ratio_gap == pytest.approx(0.04)
        assert cls.is_weak

    def test_strong(self):
        cls = classify_from_eigenvalues(5.0, 1.0)
        assert cls.ratio_gap == pytest.approx(0.8)
        assert not cls.is_weak

    def test_threshold_inclusive(self):
        assert classify_from_eigenvalues(1.0, 0.9).is_weak

    def test_zero_lambda(self):
        with pytest.raises(UndefinedRatioError):
            classify_from_eigenvalues(0.0, 0.0)

    def test_adjacency_source(self):
        # two disjoint triangles joined by one edge: spectrum computed densely
        A = build_adjacency(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)])
        w = np.linalg.eigvalsh(A.toarray())
        w = w[np.argsort(-np.abs(w))]
        cls = classify_signal(A, 2, "adjacency")
        assert cls.lambda_K == pytest.approx(w[1])
        assert cls.lambda_K1 == pytest.approx(w[2])
        assert cls.ratio_gap == pytest.approx(1 - abs(w[2] / w[1]))

    def test_laplacian_source(self):
        A = build_adjacency(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (2, 3)])
        cls = classify_signal(A, 2, "laplacian", c=0.1)
        d = A.degrees()
        tau = 0.1 * (d.max() + d.min()) / 2
        s = 1 / np.sqrt(d + tau)
        w = np.linalg.eigvalsh(A.toarray() * s[:, None] * s[None, :])
        w = w[np.argsort(-np.abs(w))]
        assert cls.tau == pytest.approx(tau)
        assert cls.ratio_gap == pytest.approx(1 - abs(w[2] / w[1]))

    def test_disconnected_warns(self):
        A = build_adjacency(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
        with pytest.warns(RuntimeWarning, match="not connected"):
            classify_signal(A, 1)


class TestSummaryStats:
    def test_triangle(self, triangle):
        s = summary_stats(triangle, np.eye(3))
        assert (s.n, s.K) == (3, 3)
        assert s.density == 1.0 and s.mean_degree == 2.0 and s.overlap_fraction == 0.0

    def test_empty(self):
        s = summary_stats(build_adjacency(5, []))
        assert s.density == 0.0 and s.overlap_fraction is None

    def test_identity_mean_degree(self, rng):
        from tests.test_linalg import random_graph

        A = random_graph(40, 0.2, 3)
        Pi = random_pmfs(rng, 40, 3)
        s = summary_stats(A, Pi)
        assert s.mean_degree == pytest.approx(s.density * 39)
        assert s.overlap_fraction == pytest.approx(np.mean(Pi.max(axis=1) < 1))
