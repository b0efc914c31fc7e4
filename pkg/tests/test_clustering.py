"""PCA, mini-batch k-means, elbow heuristic, and silhouette scores."""

import itertools

import numpy as np
import pytest

from helpers import brute_silhouette, gaussian_blobs

from energyseg.clustering import (
    KMeansParams,
    elbow_curve,
    minibatch_kmeans,
    pca_fit,
    pca_inverse_transform,
    pca_transform,
    silhouette,
)
from energyseg.errors import (
    InvalidConfig,
    KTooLarge,
    RangeTooNarrow,
    SingleCluster,
    TooFewRows,
)
from energyseg.features import DEFAULT_CLUSTERING_FEATURES, FeatureSpec, pool_features, standardize
from energyseg.synthetic import GeneratorConfig, generate_synthetic


class TestPca:
    def test_axis_aligned_example(self):
        data = np.array([[2.0, 0.0], [-2.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        model = pca_fit(data, dim=1)
        direction = model.components[0]
        assert abs(abs(direction[0]) - 1.0) <= 1e-12
        assert abs(direction[1]) <= 1e-12
        assert model.explained_variance_ratio[0] == pytest.approx(0.8, abs=1e-12)

    def test_full_rank_round_trip(self):
        rng = np.random.default_rng(50)
        data = rng.standard_normal((40, 6))
        model = pca_fit(data, dim=6)
        recon = pca_inverse_transform(model, pca_transform(model, data))
        assert np.abs(recon - data).max() <= 1e-8

    def test_components_orthonormal(self):
        rng = np.random.default_rng(51)
        data = rng.standard_normal((60, 8)) @ rng.standard_normal((8, 8))
        model = pca_fit(data, dim=8)
        gram = model.components @ model.components.T
        assert np.abs(gram - np.eye(8)).max() <= 1e-8

    def test_ratios_nonincreasing_and_bounded(self):
        rng = np.random.default_rng(52)
        data = rng.standard_normal((80, 7)) * np.arange(7, 0, -1)
        model = pca_fit(data, dim=7)
        ratios = np.asarray(model.explained_variance_ratio)
        assert np.all(np.diff(ratios) <= 1e-12)
        assert ratios.sum() <= 1.0 + 1e-9
        assert np.all(ratios >= -1e-12)

    def test_variance_target_residual(self):
        rng = np.random.default_rng(53)
        data = rng.standard_normal((100, 10)) * np.linspace(3.0, 0.2, 10)
        model = pca_fit(data, variance=0.9)
        recon = pca_inverse_transform(model, pca_transform(model, data))
        centered = data - data.mean(axis=0)
        residual = ((recon - data) ** 2).sum() / (centered**2).sum()
        assert residual <= 0.1 + 1e-9

    def test_variance_picks_smallest_dim(self):
        rng = np.random.default_rng(54)
        # exact sample spectrum via SVD: zero-mean orthonormal score columns
        q, _ = np.linalg.qr(np.column_stack([np.ones(200), rng.standard_normal((200, 4))]))
        u = q[:, 1:]  # orthonormal, each orthogonal to the ones vector => zero mean
        v, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        spectrum = np.array([5.0, 4.0, 3.5, 0.5])  # cumsums 38%, 69%, 96%, 100%
        data = (u * np.sqrt(spectrum)) @ v.T
        model = pca_fit(data, variance=0.9)
        ratios = np.asarray(model.explained_variance_ratio)
        assert len(ratios) == 3
        assert ratios.sum() >= 0.9
        assert ratios[:2].sum() < 0.9

    def test_full_rank_preserves_distances(self):
        rng = np.random.default_rng(55)
        data = rng.standard_normal((30, 5))
        scores = pca_transform(pca_fit(data, dim=5), data)
        for i, j in ((0, 1), (3, 17), (9, 28)):
            orig = np.linalg.norm(data[i] - data[j])
            proj = np.linalg.norm(scores[i] - scores[j])
            assert abs(orig - proj) <= 1e-8

    def test_errors(self):
        rng = np.random.default_rng(56)
        with pytest.raises(TooFewRows):
            pca_fit(rng.standard_normal((1, 3)))
        with pytest.raises(InvalidConfig):
            pca_fit(rng.standard_normal((10, 3)), dim=4)
        with pytest.raises(InvalidConfig):
            pca_fit(rng.standard_normal((10, 3)), variance=1.5)


class TestMinibatchKmeans:
    def test_two_group_example(self):
        offsets = np.array([[0.1, 0.0], [-0.1, 0.0], [0.0, 0.1], [0.0, -0.1], [0.0, 0.0]])
        data = np.concatenate([offsets, offsets + 10.0])
        model = minibatch_kmeans(data, k=2, seed=0)
        a = np.asarray(model.assignments)
        assert len(set(a[:5])) == 1 and len(set(a[5:])) == 1 and a[0] != a[5]
        # each group's within-SS is 4 * 0.1^2 = 0.04
        assert model.inertia == pytest.approx(0.08, abs=1e-12)

    def test_k_equals_n(self):
        rng = np.random.default_rng(57)
        data = rng.standard_normal((12, 3))
        model = minibatch_kmeans(data, k=12, seed=0)
        assert model.inertia <= 1e-12
        assert sorted(model.assignments) == list(range(12))

    def test_k_too_large(self):
        with pytest.raises(KTooLarge):
            minibatch_kmeans(np.zeros((5, 2)), k=6)

    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(58)
        data = rng.standard_normal((50, 4))
        m1 = minibatch_kmeans(data, k=4, seed=7)
        m2 = minibatch_kmeans(data, k=4, seed=7)
        assert np.array_equal(m1.centroids, m2.centroids)
        assert np.array_equal(m1.assignments, m2.assignments)
        assert m1.inertia == m2.inertia

    def test_assignments_are_nearest_centroid(self):
        rng = np.random.default_rng(59)
        data, _ = gaussian_blobs(rng, [(0, 0), (8, 0), (0, 8)], 30)
        model = minibatch_kmeans(data, k=3, seed=1)
        centroids = np.asarray(model.centroids)
        dists = ((data[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        chosen = dists[np.arange(len(data)), model.assignments]
        assert np.all(chosen <= dists.min(axis=1) + 1e-9)

    def test_inertia_matches_recompute(self):
        rng = np.random.default_rng(60)
        data = rng.standard_normal((70, 5))
        model = minibatch_kmeans(data, k=5, seed=2)
        centroids = np.asarray(model.centroids)
        recomputed = float(((data - centroids[model.assignments]) ** 2).sum())
        assert model.inertia == pytest.approx(recomputed, rel=1e-6)

    def test_row_permutation_consistency(self):
        rng = np.random.default_rng(61)
        data, _ = gaussian_blobs(rng, [(0, 0), (12, 12)], 25, scale=0.4)
        base = minibatch_kmeans(data, k=2, seed=3)
        perm = rng.permutation(len(data))
        shuffled = minibatch_kmeans(data[perm], k=2, seed=3)
        assert np.array_equal(
            np.asarray(shuffled.assignments), np.asarray(base.assignments)[perm]
        )

    def test_batch_size_clamped_to_n(self):
        rng = np.random.default_rng(62)
        data = rng.standard_normal((20, 3))
        model = minibatch_kmeans(data, k=2, params=KMeansParams(batch_size=10_000), seed=0)
        assert model.k == 2
        assert len(model.assignments) == 20


class TestElbow:
    def test_three_blob_example(self):
        rng = np.random.default_rng(63)
        data, _ = gaussian_blobs(rng, [(0, 0), (12, 0), (0, 12)], 60)
        inertias, suggested = elbow_curve(data, (1, 6), seed=0)
        assert suggested == 3
        assert len(inertias) == 6
        tol = 1e-6 * inertias[0]
        assert np.all(np.diff(inertias) <= tol)

    def test_range_too_narrow(self):
        rng = np.random.default_rng(64)
        data = rng.standard_normal((30, 2))
        with pytest.raises(RangeTooNarrow):
            elbow_curve(data, (2, 3))
        with pytest.raises(RangeTooNarrow):
            elbow_curve(data, (5, 2))

    def test_seed_determinism(self):
        rng = np.random.default_rng(65)
        data = rng.standard_normal((40, 3))
        i1, s1 = elbow_curve(data, (1, 5), seed=11)
        i2, s2 = elbow_curve(data, (1, 5), seed=11)
        assert np.array_equal(i1, i2) and s1 == s2


class TestSilhouette:
    def test_well_separated(self):
        rng = np.random.default_rng(66)
        data, _ = gaussian_blobs(rng, [(0, 0), (20, 20)], 40, scale=0.5)
        truth = np.repeat([0, 1], 40)
        mean_s, per = silhouette(data, truth)
        assert mean_s > 0.9
        assert np.all(per > 0.9)

    def test_cross_blob_pairing_negative(self):
        rng = np.random.default_rng(67)
        data, _ = gaussian_blobs(rng, [(0, 0), (20, 20)], 40, scale=0.5)
        # cluster i = {A_i, B_i}: every point sits far from its own cluster mate
        pairing = np.tile(np.arange(40), 2)
        mean_s, per = silhouette(data, pairing)
        assert mean_s < 0.0
        assert np.all(per < 0.0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(68)
        for trial in range(5):
            data = rng.standard_normal((60, 4))
            labels = rng.integers(0, 3, size=60)
            labels[:3] = [0, 1, 2]
            mean_s, per = silhouette(data, labels)
            oracle = brute_silhouette(data, labels)
            assert np.abs(per - oracle).max() <= 1e-10
            assert mean_s == pytest.approx(oracle.mean(), abs=1e-10)

    def test_singleton_cluster_scores_zero(self):
        data = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 10.0]])
        _, per = silhouette(data, np.array([0, 0, 1]))
        assert per[2] == 0.0

    def test_bounds(self):
        rng = np.random.default_rng(69)
        data = rng.standard_normal((50, 3))
        labels = rng.integers(0, 4, size=50)
        labels[:4] = [0, 1, 2, 3]
        _, per = silhouette(data, labels)
        assert np.all(per >= -1.0 - 1e-12) and np.all(per <= 1.0 + 1e-12)

    def test_errors(self):
        rng = np.random.default_rng(70)
        with pytest.raises(SingleCluster):
            silhouette(rng.standard_normal((10, 2)), np.zeros(10, dtype=int))
        with pytest.raises(TooFewRows):
            silhouette(rng.standard_normal((2, 2)), np.array([0, 1]))


class TestGeneratorAgreement:
    def test_latent_class_recovery(self):
        scores = []
        for seed in range(20):
            table = generate_synthetic(
                GeneratorConfig(players_per_class=(4, 4, 4), n_days=14), seed=seed
            )
            matrix = standardize(
                pool_features(
                    table,
                    FeatureSpec(features=DEFAULT_CLUSTERING_FEATURES, granularity="daily"),
                )
            )
            model = minibatch_kmeans(matrix, k=3, seed=seed)
            truth = np.array(
                [
                    {"low": 0, "medium": 1, "high": 2}[p.rsplit("_", 1)[0]]
                    for p in matrix.row_players
                ]
            )
            best = 0.0
            for perm in itertools.permutations(range(3)):
                mapped = np.array([perm[a] for a in model.assignments])
                best = max(best, float(np.mean(mapped == truth)))
            scores.append(best)
        assert float(np.median(scores)) >= 0.8
