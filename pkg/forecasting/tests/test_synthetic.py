import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from forecasting.data import load_coordinates, load_panel
from forecasting.exceptions import ConfigurationError
from forecasting.synthetic import (
    SynthConfig,
    generate,
    lagged_cross_correlation,
    neighbor_rank_score,
    permutation_test,
    permute_adjacency,
    planted_adjacency,
    rank_profile_frame,
    read_adjacency,
    write_dataset,
)
from forecasting.synthetic.analysis import haversine_km


def weights_from(adjacency, boost=4.0):
    """Gate weights that rank every true neighbor above every other node."""
    weights = 1.0 + boost * adjacency
    np.fill_diagonal(weights, 2.0 + boost)
    return weights


class GeneratorTests(SimpleTestCase):
    def test_same_seed_same_dataset(self):
        config = SynthConfig(num_nodes=5, num_steps=600, seed=3)
        first, second = generate(config), generate(config)
        self.assertEqual(first.panel, second.panel)
        np.testing.assert_array_equal(first.adjacency, second.adjacency)
        self.assertNotEqual(generate(SynthConfig(num_nodes=5, num_steps=600, seed=4)).panel, first.panel)

    def test_quiet_panel_is_periodic(self):
        config = SynthConfig(num_nodes=4, num_steps=900, noise=0.0, event_rate=0.0, seed=1)
        values = generate(config).panel.values
        np.testing.assert_array_equal(values[:600], values[288:888])
        self.assertTrue(np.all(values > 0))

    def test_planted_adjacency(self):
        dataset = generate(SynthConfig(num_nodes=7, num_steps=300, neighbors=3))
        adjacency = dataset.adjacency
        np.testing.assert_array_equal(adjacency.sum(axis=1), np.full(7, 3.0))
        np.testing.assert_array_equal(np.diag(adjacency), np.zeros(7))
        self.assertEqual(dataset.panel.coordinates.shape, (7, 2))

    def test_nearest_neighbors_ties_by_index(self):
        coordinates = np.array([[0.0, 0.0], [0.0, 1.0], [0.0, -1.0], [0.0, 5.0]])
        adjacency = planted_adjacency(coordinates, 1)
        np.testing.assert_array_equal(np.argmax(adjacency, axis=1), [1, 0, 0, 1])

    def test_coupling_shows_up_at_the_lag(self):
        common = dict(num_nodes=6, num_steps=4032, neighbors=1, seasonal_amplitude=0.0, event_rate=0.03, seed=5)
        coupled = generate(SynthConfig(coupling=0.8, **common))
        uncoupled = generate(SynthConfig(coupling=0.0, **common))
        i = 0
        j = int(np.argmax(coupled.adjacency[i]))
        self.assertGreater(lagged_cross_correlation(coupled.panel, i, j, 3), 0.25)
        self.assertLess(abs(lagged_cross_correlation(uncoupled.panel, i, j, 3)), 0.15)

    def test_invalid_settings(self):
        with self.assertRaises(ConfigurationError):
            SynthConfig(num_nodes=3, neighbors=3)
        with self.assertRaises(ConfigurationError):
            SynthConfig(event_decay=0.0)

    def test_dataset_files(self):
        dataset = generate(SynthConfig(num_nodes=4, num_steps=100))
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_dataset(dataset, Path(tmp) / 'synth')
            panel = load_panel(paths['panel'])
            node_ids = panel.node_ids
            np.testing.assert_array_equal(panel.values, dataset.panel.values)
            np.testing.assert_array_equal(read_adjacency(paths['adjacency'], node_ids), dataset.adjacency)
            reordered = list(reversed(node_ids))
            np.testing.assert_array_equal(
                read_adjacency(paths['adjacency'], reordered), dataset.adjacency[::-1, ::-1],
            )
            np.testing.assert_array_equal(load_coordinates(paths['coordinates'], node_ids), dataset.panel.coordinates)
            with self.assertRaises(ConfigurationError):
                read_adjacency(paths['adjacency'], ['n999'])


class AnalysisTests(SimpleTestCase):
    def setUp(self):
        self.adjacency = generate(SynthConfig(num_nodes=10, num_steps=50, neighbors=2, seed=8)).adjacency

    def test_perfect_ranking_scores_one(self):
        [result] = neighbor_rank_score([weights_from(self.adjacency)], self.adjacency)
        self.assertEqual(result.score, 1.0)
        self.assertEqual(result.weight_profile.shape, (9,))
        self.assertTrue(np.all(np.diff(result.weight_profile) <= 0))

    def test_filtered_reciprocal_rank(self):
        adjacency = np.zeros((3, 3))
        adjacency[0, 2] = 1.0
        weights = np.array([[1.0, 0.9, 0.1], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0]])
        [result] = neighbor_rank_score([weights], adjacency)
        self.assertAlmostEqual(result.score, 0.5)

    def test_uninformative_weights_score_random_baseline(self):
        # 9 candidates, 2 true neighbors: a uniformly random order scores H(8) / 8
        baseline = sum(1.0 / k for k in range(1, 9)) / 8
        for weights in (np.eye(10), np.ones((10, 10))):
            [result] = neighbor_rank_score([weights], self.adjacency)
            self.assertAlmostEqual(result.score, baseline, places=12)
        relabelled = permute_adjacency(self.adjacency, np.random.default_rng(4).permutation(10))
        [result] = neighbor_rank_score([np.eye(10)], relabelled)
        self.assertAlmostEqual(result.score, baseline, places=12)

    def test_ties_share_reciprocal_rank(self):
        adjacency = np.zeros((4, 4))
        adjacency[0, 3] = 1.0
        # node 3 ties with node 2 behind node 1: ranks 2 and 3 are equally likely
        weights = np.array([[1.0, 0.9, 0.5, 0.5], [1, 1, 1, 1], [1, 1, 1, 1], [1, 1, 1, 1]])
        [result] = neighbor_rank_score([weights], adjacency)
        self.assertAlmostEqual(result.score, (1 / 2 + 1 / 3) / 2)
        [reversed_labels] = neighbor_rank_score([weights[:, [0, 1, 3, 2]]], adjacency[:, [0, 1, 3, 2]])
        self.assertAlmostEqual(reversed_labels.score, result.score)

    def test_shuffled_truth_stays_inside_null(self):
        weights = weights_from(self.adjacency)
        p_values = []
        for seed in range(20):
            shuffled = permute_adjacency(self.adjacency, np.random.default_rng(100 + seed).permutation(10))
            [result] = permutation_test([weights], shuffled, n_permutations=200, rng=seed)
            p_values.append(result.p_value)
        self.assertLessEqual(sum(p < 0.05 for p in p_values), 5, p_values)
        self.assertTrue(0.25 <= np.mean(p_values) <= 0.85, p_values)
        [truth] = permutation_test([weights], self.adjacency, n_permutations=200, rng=0)
        self.assertTrue(truth.significant)

    def test_permutation_test_separates_signal(self):
        weights = weights_from(self.adjacency)
        [result] = permutation_test([weights], self.adjacency, n_permutations=200, rng=0)
        self.assertEqual(result.observed, 1.0)
        self.assertTrue(result.significant)
        self.assertLess(result.p_value, 0.05)
        self.assertEqual(result.null_scores.shape, (200,))

    def test_relabelled_truth_keeps_perfect_score(self):
        permutation = np.random.default_rng(2).permutation(10)
        shuffled = permute_adjacency(self.adjacency, permutation)
        [result] = neighbor_rank_score([weights_from(shuffled)], shuffled)
        self.assertEqual(result.score, 1.0)
        np.testing.assert_array_equal(permute_adjacency(self.adjacency, np.arange(10)), self.adjacency)

    def test_rank_profile_frame(self):
        coordinates = np.random.default_rng(1).uniform(34.0, 34.2, size=(10, 2))
        weights = weights_from(self.adjacency)
        frame = rank_profile_frame([weights, weights], coordinates)
        self.assertEqual(list(frame.columns), ['layer', 'rank', 'mean_normalized_weight', 'mean_distance_km'])
        self.assertEqual(len(frame), 2 * 9)
        self.assertTrue(frame.mean_distance_km.notna().all())
        self.assertTrue(rank_profile_frame([weights]).mean_distance_km.isna().all())

    def test_haversine(self):
        distance = haversine_km(np.array([0.0, 0.0]), np.array([1.0, 0.0]))
        self.assertAlmostEqual(distance, 111.19492664455873, places=6)
