import numpy as np
import pytest
from scipy import stats

from mixedisc.dcmm import (EXPERIMENT_GRIDS, DcmmParams, design_membership, expected_adjacency,
                           experiment_params, population_laplacian, sample_adjacency)
from mixedisc.errors import InvalidParametersError


def brute_omega(params):
    n, K = params.Pi.shape
    om = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            s = 0.0
            for k in range(K):
                for l in range(K):
                    s += params.Pi[i, k] * params.Pi[j, l] * params.P[k, l]
            om[i, j] = params.theta[i] * params.theta[j] * s
    return om


def random_params(rng, n=40, K=3, pure_frac=0.5):
    Pi = rng.dirichlet(np.ones(K), size=n)
    pure = rng.random(n) < pure_frac
    Pi[pure] = np.eye(K)[rng.integers(0, K, pure.sum())]
    Pi[:K] = np.eye(K)
    P = rng.uniform(0, 0.3, (K, K))
    P = (P + P.T) / 2
    np.fill_diagonal(P, rng.uniform(0.5, 1.0, K))
    return DcmmParams(P=P, theta=rng.uniform(0.2, 1.0, n), Pi=Pi)


class TestExpectedAdjacency:
    def test_pure_nodes_give_P(self):
        P = np.array([[0.8, 0.3], [0.3, 0.6]])
        params = DcmmParams(P=P, theta=np.ones(4), Pi=np.eye(2)[[0, 0, 1, 1]])
        om = expected_adjacency(params)
        assert om[0, 2] == pytest.approx(0.3)
        assert om[0, 1] == pytest.approx(0.8)
        assert om[2, 3] == pytest.approx(0.6)

    def test_theta_product(self):
        params = DcmmParams(P=np.array([[0.8, 0.1], [0.1, 0.5]]), theta=[0.5, 0.5, 1.0],
                            Pi=np.eye(2)[[0, 0, 1]])
        assert expected_adjacency(params)[0, 1] == pytest.approx(0.2)

    def test_half_half(self):
        P = np.array([[0.8, 0.3], [0.3, 0.8]])
        params = DcmmParams(P=P, theta=np.ones(2), Pi=np.full((2, 2), 0.5))
        assert expected_adjacency(params)[0, 1] == pytest.approx(0.55)
        assert brute_omega(params)[0, 1] == pytest.approx(0.55)

    def test_matches_brute_force(self, rng):
        params = random_params(rng, n=25)
        om = expected_adjacency(params)
        np.testing.assert_allclose(om, brute_omega(params), atol=1e-14)
        np.testing.assert_array_equal(np.diag(om), 0)
        assert np.all((om >= 0) & (om <= 1))
        np.testing.assert_allclose(om, om.T, atol=0)

    def test_full_form_keeps_diagonal(self, rng):
        params = random_params(rng, n=10)
        full = expected_adjacency(params, zero_diagonal=False)
        assert np.all(np.diag(full) > 0)
        assert np.linalg.matrix_rank(full) == params.K

    def test_dcsbm_depends_on_labels_only(self):
        labels = np.array([0, 1, 2, 0, 1, 2, 2])
        P = np.array([[0.7, 0.2, 0.1], [0.2, 0.6, 0.3], [0.1, 0.3, 0.9]])
        c0 = 0.8
        params = DcmmParams(P=P, theta=np.full(7, c0), Pi=np.eye(3)[labels])
        om = expected_adjacency(params)
        for i in range(7):
            for j in range(7):
                if i != j:
                    assert om[i, j] == pytest.approx(c0**2 * P[labels[i], labels[j]])


class TestValidation:
    def test_singular_P(self):
        with pytest.raises(InvalidParametersError, match="nonsingular"):
            DcmmParams(P=np.full((2, 2), 0.5), theta=np.ones(2), Pi=np.eye(2))

    def test_row_sums(self):
        with pytest.raises(InvalidParametersError, match="row 1"):
            DcmmParams(P=np.eye(2) * 0.5, theta=np.ones(2), Pi=[[1, 0], [0.5, 0.6]])

    def test_theta_positive(self):
        with pytest.raises(InvalidParametersError, match="theta"):
            DcmmParams(P=np.eye(2) * 0.5, theta=[1.0, 0.0], Pi=np.eye(2))

    def test_probability_over_one(self):
        with pytest.raises(InvalidParametersError, match="exceeds 1"):
            DcmmParams(P=np.eye(2) * 0.9, theta=[1.2, 1.2, 1.0], Pi=np.eye(2)[[0, 0, 1]])

    def test_large_theta_ok_if_omega_fine(self):
        # theta_max^2 * max(P) > 1, but the only pair with theta 1.5 is cross-community
        params = DcmmParams(P=np.array([[0.9, 0.1], [0.1, 0.9]]), theta=[1.5, 1.0, 0.5],
                            Pi=np.eye(2)[[0, 1, 1]])
        assert expected_adjacency(params).max() <= 1


class TestSampler:
    def test_zero_probability_gives_empty(self):
        # P = 0 is singular, so zero edge probability comes from one pure node per community
        params = DcmmParams(P=np.eye(3) * 0.9, theta=np.ones(3), Pi=np.eye(3))
        assert sample_adjacency(params, 1).n_edges == 0

    def test_unit_probability_gives_complete(self):
        params = DcmmParams(P=np.ones((1, 1)), theta=np.ones(6), Pi=np.ones((6, 1)))
        assert sample_adjacency(params, 5).n_edges == 15

    def test_deterministic(self, rng):
        params = random_params(rng, n=60)
        a = sample_adjacency(params, (3, 4))
        b = sample_adjacency(params, (3, 4))
        c = sample_adjacency(params, (3, 5))
        assert a.edges() == b.edges()
        assert a.edges() != c.edges()

    def test_structure(self, rng):
        A = sample_adjacency(random_params(rng, n=50), 9).toarray()
        np.testing.assert_array_equal(A, A.T)
        np.testing.assert_array_equal(np.diag(A), 0)

    def test_block_size_does_not_change_draws(self, rng, monkeypatch):
        import mixedisc.dcmm as dcmm

        params = random_params(rng, n=37)
        ref = sample_adjacency(params, 17).edges()
        monkeypatch.setattr(dcmm, "SAMPLE_BLOCK_ENTRIES", 80)
        assert sample_adjacency(params, 17).edges() == ref

    def test_monte_carlo_frequencies(self):
        # design-3 parameters at n = 100 (n0 scaled to 20)
        params = experiment_params(3, 0.4, 0, n=100)
        om = expected_adjacency(params)
        reps = 2000
        counts = np.zeros_like(om)
        for s in range(reps):
            counts += sample_adjacency(params, (99, s)).toarray()
        freq = counts / reps
        iu = np.triu_indices(params.n, 1)
        band = 3 * np.sqrt(om[iu] * (1 - om[iu]) / reps)
        inside = np.abs(freq[iu] - om[iu]) <= band
        assert inside.mean() >= 0.99

    def test_chi_square_single_pair(self):
        params = DcmmParams(P=np.array([[0.6, 0.2], [0.2, 0.5]]), theta=[0.9, 0.8, 1.0],
                            Pi=[[1, 0], [0.3, 0.7], [0, 1]])
        p = expected_adjacency(params)[0, 1]
        hits = sum(sample_adjacency(params, s).toarray()[0, 1] for s in range(3000))
        chi2 = stats.chisquare([hits, 3000 - hits], [3000 * p, 3000 * (1 - p)])
        assert chi2.pvalue > 1e-3


class TestPopulationLaplacian:
    def test_rank_K(self, rng):
        for K in (2, 3, 4):
            params = random_params(rng, n=60, K=K)
            L = population_laplacian(params, 0.5)
            s = np.linalg.svd(L, compute_uv=False)
            assert s[K] < 1e-10 * s[0]
            assert s[K - 1] > 1e-10 * s[0]

    def test_single_community_constant(self):
        n, t, p = 8, 0.7, 0.4
        params = DcmmParams(P=np.array([[p]]), theta=np.full(n, t), Pi=np.ones((n, 1)))
        L = population_laplacian(params, 0.0)
        np.testing.assert_allclose(L, 1.0 / n, atol=1e-15)

    def test_large_tau_limit(self, rng):
        params = random_params(rng, n=20)
        tau = 1e12
        L = population_laplacian(params, tau)
        om = expected_adjacency(params, zero_diagonal=False)
        np.testing.assert_allclose(L, om / tau, rtol=1e-9)
        assert np.linalg.norm(L, 2) < 1e-10

    def test_positive_eigenvalues_for_pd_P(self, rng):
        params = random_params(rng, n=50)
        assert np.all(np.linalg.eigvalsh(params.P) > 0)
        w = np.linalg.eigvalsh(population_laplacian(params, 1.0))
        big = w[np.abs(w) > 1e-10 * np.abs(w).max()]
        assert big.size == params.K and np.all(big > 0)


class TestExperimentDesigns:
    def test_exp1_counts(self):
        params = experiment_params(1, 40, 0)
        assert params.n == 500 and params.K == 3
        pure = params.pure_nodes()
        np.testing.assert_array_equal(pure, np.arange(120))
        mixed = params.Pi[120:]
        rows, counts = np.unique(np.round(mixed, 12), axis=0, return_counts=True)
        assert len(rows) == 4
        assert set(counts) == {95}

    def test_exp2_mixing_matrix(self):
        params = experiment_params(2, 0.3, 0)
        np.testing.assert_allclose(params.P, [[0.8, 0.3, 0.3], [0.3, 0.8, 0.3], [0.3, 0.3, 0.8]])

    def test_exp4_z1_constant_theta(self):
        np.testing.assert_array_equal(experiment_params(4, 1, 123).theta, 1.0)

    def test_theta_range_and_seed(self):
        a = experiment_params(4, 8, 5)
        b = experiment_params(4, 8, 5)
        np.testing.assert_array_equal(a.theta, b.theta)
        assert a.theta.min() >= 1 / 8 and a.theta.max() <= 1

    def test_fixed_parameters(self):
        p = experiment_params(3, 0.25, 0)
        assert p.meta["n0"] == 100 and p.meta["rho"] == 0.3 and p.meta["z"] == 4.0
        np.testing.assert_allclose(p.Pi[300], [0.25, 0.25, 0.5])

    @pytest.mark.parametrize("exp,bad", [(1, 20), (1, 170), (2, 0.5), (3, 0.55), (4, 9), (4, 0.5)])
    def test_out_of_range(self, exp, bad):
        with pytest.raises(InvalidParametersError):
            experiment_params(exp, bad, 0)

    def test_indivisible(self):
        with pytest.raises(InvalidParametersError, match="4 equal groups"):
            design_membership(500, 41, 0.4)

    def test_x_above_half(self):
        with pytest.raises(InvalidParametersError):
            design_membership(500, 100, 0.6)

    @pytest.mark.parametrize("exp", [1, 2, 3, 4])
    def test_published_grids_valid(self, exp):
        for g in EXPERIMENT_GRIDS[exp]:
            experiment_params(exp, g, 0)
            experiment_params(exp, g, 0, n=300)
