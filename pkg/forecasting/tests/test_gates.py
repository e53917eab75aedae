import numpy as np
from django.test import SimpleTestCase

from forecasting.engine import Tensor
from forecasting.exceptions import ConfigurationError
from forecasting.network import (
    FixedGate,
    GateVariant,
    LearnableGate,
    ModelConfig,
    ModelParams,
    attention_weights,
    edge_weights,
    graph_gate,
    make_gate_variant,
    node_level,
)
from forecasting.network.gates import AttentionGate


def small_params(gate_variant=GateVariant.LEARNABLE_PER_LAYER, layers=3):
    config = ModelConfig(
        num_nodes=4, window=3, horizon=3, embedding_dim=2, hidden_dim=4,
        layers=layers, gate_variant=gate_variant,
    )
    return ModelParams.init(config, 0)


class EdgeWeightTests(SimpleTestCase):
    def test_zero_embeddings_give_ones(self):
        weights = edge_weights(Tensor(np.zeros((3, 2))), 10.0)
        np.testing.assert_array_equal(weights.values, np.ones((3, 3)))

    def test_orthonormal_embeddings(self):
        weights = edge_weights(Tensor([[1.0, 0.0], [0.0, 1.0]]), 1.0)
        np.testing.assert_allclose(weights.values, [[np.e, 1.0], [1.0, np.e]], rtol=1e-15)

    def test_large_inner_product_stays_finite(self):
        weights = edge_weights(Tensor([[3.0], [3.0]]), 10.0)
        self.assertTrue(np.all(np.isfinite(weights.values)))
        np.testing.assert_allclose(weights.values, np.full((2, 2), np.exp(90.0)), rtol=1e-12)

    def test_symmetry_is_exact(self):
        embeddings = Tensor(np.random.default_rng(3).normal(0.0, 0.3, size=(6, 4)))
        weights = edge_weights(embeddings, 10.0).values
        np.testing.assert_array_equal(weights, weights.T)
        self.assertTrue(np.all(np.diag(weights) >= 1.0))

    def test_attention_rows_sum_to_one(self):
        embeddings = Tensor(np.random.default_rng(4).normal(size=(5, 3)))
        rows = attention_weights(embeddings, 10.0).values.sum(axis=1)
        np.testing.assert_allclose(rows, np.ones(5), rtol=0, atol=1e-12)


class GraphGateTests(SimpleTestCase):
    def test_hand_oracle(self):
        weights = Tensor([[1.0, 2.0], [0.5, 1.0]])
        x = Tensor([[1.0, 2.0], [3.0, 4.0]])
        gated = graph_gate(weights, x)
        np.testing.assert_array_equal(gated.values, [[0.0, 0.0, 2.0, 3.0], [0.0, 0.0, 0.0, 0.0]])

    def test_ones_with_equal_constant_rows_is_zero(self):
        x = Tensor(np.full((3, 4), 55.0))
        gated = graph_gate(Tensor(np.ones((3, 3))), x)
        np.testing.assert_array_equal(gated.values, np.zeros((3, 12)))

    def test_identity_zeroes_other_blocks(self):
        x = Tensor(np.random.default_rng(0).uniform(1.0, 70.0, size=(4, 3)))
        gated = graph_gate(Tensor(np.eye(4)), x).values.reshape(4, 4, 3)
        for i in range(4):
            for j in range(4):
                if i != j:
                    np.testing.assert_array_equal(gated[i, j], np.zeros(3))

    def test_positive_entries_match_predicate(self):
        rng = np.random.default_rng(11)
        weights = rng.uniform(0.2, 3.0, size=(5, 5))
        x = rng.uniform(0.0, 70.0, size=(5, 6))
        gated = graph_gate(Tensor(weights), Tensor(x)).values.reshape(5, 5, 6)
        level = x.max(axis=1)
        predicate = weights[:, :, None] * x[None, :, :] > level[:, None, None]
        np.testing.assert_array_equal(gated > 0, predicate)
        self.assertAlmostEqual(float(np.mean(gated > 0)), float(np.mean(predicate)))

    def test_batched_matches_single(self):
        rng = np.random.default_rng(5)
        weights = Tensor(rng.uniform(0.5, 2.0, size=(3, 3)))
        x = rng.uniform(1.0, 60.0, size=(2, 3, 4))
        batched = graph_gate(weights, Tensor(x)).values
        self.assertEqual(batched.shape, (2, 3, 12))
        for b in range(2):
            np.testing.assert_array_equal(batched[b], graph_gate(weights, Tensor(x[b])).values)

    def test_dead_sensor_level_floor(self):
        x = Tensor([[[0.0, 0.0, 0.0], [10.0, 20.0, 5.0]]])
        np.testing.assert_array_equal(node_level(x).values, [[[1.0], [20.0]]])


class GateVariantTests(SimpleTestCase):
    def test_identity_registers_nothing(self):
        gate = make_gate_variant(GateVariant.IDENTITY, 0, small_params())
        self.assertIsInstance(gate, FixedGate)
        self.assertEqual(gate.parameters(), [])
        np.testing.assert_array_equal(gate.weights().values, np.eye(4))

    def test_ones_reduces_to_level_threshold(self):
        gate = make_gate_variant(GateVariant.ONES, 1, small_params())
        x = np.random.default_rng(2).uniform(1.0, 50.0, size=(4, 3))
        expected = np.maximum((x[None, :, :] - x.max(axis=1)[:, None, None]) / x.max(axis=1)[:, None, None], 0.0)
        np.testing.assert_allclose(gate.gate(Tensor(x)).values, expected.reshape(4, 12), rtol=1e-15)

    def test_learnable_per_layer_uses_own_embeddings(self):
        params = small_params()
        gates = [make_gate_variant(GateVariant.LEARNABLE_PER_LAYER, m, params) for m in range(3)]
        for m, gate in enumerate(gates):
            self.assertIsInstance(gate, LearnableGate)
            self.assertIs(gate.embeddings, params.layers[m].embeddings)
        self.assertIsNot(params.layers[0].embeddings, params.layers[1].embeddings)

    def test_shared_learnable(self):
        params = small_params(GateVariant.SHARED_LEARNABLE)
        gate = make_gate_variant(GateVariant.SHARED_LEARNABLE, 2, params)
        self.assertIs(gate.embeddings, params.layers[0].embeddings)
        self.assertIs(params.layers[2].embeddings, params.layers[0].embeddings)
        names = [name for name, _ in params.named_parameters() if name.endswith('embeddings')]
        self.assertEqual(names, ['layer_0.embeddings'])

    def test_learnable_first_layer(self):
        params = small_params(GateVariant.LEARNABLE_FIRST_LAYER)
        self.assertIsInstance(make_gate_variant(GateVariant.LEARNABLE_FIRST_LAYER, 0, params), LearnableGate)
        later = make_gate_variant(GateVariant.LEARNABLE_FIRST_LAYER, 2, params)
        np.testing.assert_array_equal(later.weights().values, np.ones((4, 4)))

    def test_identity_last_layer(self):
        params = small_params(GateVariant.IDENTITY_LAST_LAYER, layers=4)
        kinds = [make_gate_variant(GateVariant.IDENTITY_LAST_LAYER, m, params).kind for m in range(4)]
        self.assertEqual(kinds[:3], [GateVariant.IDENTITY_LAST_LAYER] * 3)
        self.assertEqual(kinds[3], GateVariant.IDENTITY)

    def test_graph_attention_is_soft(self):
        params = small_params(GateVariant.GRAPH_ATTENTION)
        gate = make_gate_variant(GateVariant.GRAPH_ATTENTION, 0, params)
        self.assertIsInstance(gate, AttentionGate)
        x = np.random.default_rng(9).uniform(1.0, 50.0, size=(4, 3))
        weights = gate.weights().values
        expected = weights[:, :, None] * x[None, :, :] / x.max(axis=1)[:, None, None]
        np.testing.assert_allclose(gate.gate(Tensor(x)).values, expected.reshape(4, 12), rtol=1e-14)

    def test_unknown_kind(self):
        with self.assertRaises(ConfigurationError):
            make_gate_variant('random_graph', 0, small_params())
