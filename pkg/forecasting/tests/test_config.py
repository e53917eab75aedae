import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from forecasting.config import RunConfig, VariantSpec, parse_variant
from forecasting.exceptions import ConfigurationError, MissingInputError
from forecasting.network import GateVariant


class RunConfigTests(SimpleTestCase):
    def test_defaults(self):
        config = RunConfig.from_mapping({})
        self.assertEqual((config.window, config.horizon, config.layers, config.blocks), (12, 12, 3, 2))
        self.assertEqual((config.embedding_dim, config.hidden_dim, config.fc_layers), (64, 128, 3))
        self.assertEqual(config.horizons, (3, 6, 12))
        self.assertEqual(config.gate_variant, 'learnable_per_layer')
        self.assertEqual(config.training_config().total_steps, 48000)
        self.assertEqual(config.variant_specs(), [VariantSpec('learnable_per_layer', 'learnable_per_layer')])

    def test_file_round_trip_and_hash(self):
        config = RunConfig.from_mapping({'window': 6, 'horizon': 6, 'horizons': [1, 6], 'variants': ['ones', 'identity@1']})
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'config.json'
            config.dump(path)
            loaded = RunConfig.load(path)
        self.assertEqual(loaded, config)
        self.assertEqual(loaded.config_hash(), config.config_hash())
        self.assertEqual(len(config.config_hash()), 64)
        self.assertNotEqual(config.with_overrides(seed=1).config_hash(), config.config_hash())

    def test_unknown_key(self):
        with self.assertRaises(ConfigurationError) as caught:
            RunConfig.from_mapping({'windw': 12})
        self.assertIn('windw', caught.exception.errors)

    def test_not_an_object(self):
        with self.assertRaises(ConfigurationError):
            RunConfig.from_mapping([('window', 12)])

    def test_fractions(self):
        with self.assertRaises(ConfigurationError) as caught:
            RunConfig.from_mapping({'val_fraction': 0.2})
        self.assertIn('train_fraction', caught.exception.errors)
        config = RunConfig.from_mapping({'train_fraction': 0.6, 'val_fraction': 0.2, 'test_fraction': 0.2})
        self.assertEqual(config.split_spec().fractions()[0] * 5, 3)

    def test_stacking_needs_matching_window(self):
        with self.assertRaises(ConfigurationError) as caught:
            RunConfig.from_mapping({'window': 12, 'horizon': 6, 'horizons': [3, 6]})
        self.assertIn('window', caught.exception.errors)
        config = RunConfig.from_mapping({'window': 12, 'horizon': 6, 'horizons': [3, 6], 'layers': 1})
        self.assertEqual(config.model_config(num_nodes=3).input_width, 64 + 12 + 36)
        with self.assertRaises(ConfigurationError):
            RunConfig.from_mapping({'window': 12, 'horizon': 6, 'horizons': [6], 'layers': 1, 'variants': ['ones@2']})

    def test_single_layer_variants_skip_default_depth(self):
        config = RunConfig.from_mapping({'window': 12, 'horizon': 6, 'horizons': [3, 6], 'variants': ['ones@1']})
        self.assertEqual(config.layers, 3)
        [spec] = config.variant_specs()
        self.assertEqual(config.model_config(num_nodes=3, variant=spec).layers, 1)
        with self.assertRaises(ConfigurationError):
            config.model_config(num_nodes=3)
        with self.assertRaises(ConfigurationError):
            RunConfig.from_mapping({'window': 12, 'horizon': 6, 'horizons': [6], 'variants': ['ones@1', 'ones']})

    def test_horizons_within_forecast(self):
        with self.assertRaises(ConfigurationError) as caught:
            RunConfig.from_mapping({'horizons': [3, 24]})
        self.assertIn('horizons', caught.exception.errors)

    def test_epsilon_must_be_finite(self):
        with self.assertRaises(ConfigurationError):
            RunConfig.from_mapping({'epsilon': float('inf')})

    def test_synthetic_neighbors(self):
        with self.assertRaises(ConfigurationError):
            RunConfig.from_mapping({'synth_num_nodes': 3, 'synth_neighbors': 3})
        synth = RunConfig.from_mapping({'seed': 9}).synth_config()
        self.assertEqual((synth.num_nodes, synth.seed), (8, 9))

    def test_load_errors(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(MissingInputError):
                RunConfig.load(Path(tmp) / 'absent.json')
            broken = Path(tmp) / 'broken.json'
            broken.write_text('{"window": 12,')
            with self.assertRaises(ConfigurationError):
                RunConfig.load(broken)
            listed = Path(tmp) / 'list.json'
            listed.write_text(json.dumps([1, 2]))
            with self.assertRaises(ConfigurationError):
                RunConfig.load(listed)

    def test_overrides(self):
        config = RunConfig.from_mapping({})
        self.assertIs(config.with_overrides(seed=None), config)
        changed = config.with_overrides(seed=3, deterministic=False, variants=('ones', 'identity'))
        self.assertEqual((changed.seed, changed.deterministic, changed.variants), (3, False, ('ones', 'identity')))
        with self.assertRaises(ConfigurationError):
            config.with_overrides(learning_rates=0.1)
        with self.assertRaises(ConfigurationError):
            config.with_overrides(variants=('unknown_gate',))

    def test_model_config_for_variant(self):
        config = RunConfig.from_mapping({'variants': ['identity_last_layer@4+notime']})
        [variant] = config.variant_specs()
        self.assertEqual(variant, VariantSpec('identity_last_layer@4+notime', 'identity_last_layer', 4, False))
        model = config.model_config(num_nodes=5, variant=variant)
        self.assertEqual((model.layers, model.use_time_gate, model.num_nodes), (4, False, 5))
        self.assertEqual(model.gate_variant, GateVariant.IDENTITY_LAST_LAYER)
        self.assertEqual(config.model_config(num_nodes=5, variant=parse_variant('ones')).layers, 3)


class VariantTokenTests(SimpleTestCase):
    def test_tokens(self):
        self.assertEqual(parse_variant(' ones '), VariantSpec('ones', 'ones', None, True))
        self.assertEqual(parse_variant('shared_learnable@2').layers, 2)
        self.assertFalse(parse_variant('graph_attention+notime').use_time_gate)

    def test_bad_tokens(self):
        for token in ('random', 'ones@0', 'ones@two', 'identity+time'):
            with self.subTest(token=token):
                with self.assertRaises(ConfigurationError):
                    parse_variant(token)
