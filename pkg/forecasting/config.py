"""
Run-level configuration: one flat JSON object validated by
``RunConfigSerializer`` and frozen into a ``RunConfig``.
"""
import hashlib
import json
import logging
from collections.abc import Mapping
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from rest_framework import serializers

from .data.windows import SplitSpec, TimeFeatureSpec
from .exceptions import ConfigurationError, MissingInputError
from .network.config import ModelConfig
from .serializers.config_serializers import RunConfigSerializer, parse_variant_token
from .synthetic.generator import SynthConfig
from .training.trainer import TrainingConfig

logger = logging.getLogger(__name__)


def _flatten_errors(detail, prefix=''):
    if isinstance(detail, dict):
        items = []
        for key, value in detail.items():
            items.extend(_flatten_errors(value, f'{prefix}{key}' if not prefix else f'{prefix}.{key}'))
        return items
    if isinstance(detail, list):
        items = []
        for value in detail:
            items.extend(_flatten_errors(value, prefix))
        return items
    return [(prefix or 'config', str(detail))]


def _as_configuration_error(exc, source='run configuration'):
    pairs = _flatten_errors(exc.detail)
    errors = {}
    for key, message in pairs:
        errors.setdefault(key, message)
    detail = '; '.join(f'{key}: {message}' for key, message in errors.items())
    return ConfigurationError(f'invalid {source}: {detail}', errors)


@dataclass(frozen=True)
class VariantSpec:
    """
    One ablation row: gate variant, optional layer override, time gate flag.
    """
    token: str
    gate_variant: str
    layers: int = None
    use_time_gate: bool = True


def parse_variant(token):
    try:
        gate_variant, layers, use_time_gate = parse_variant_token(token)
    except serializers.ValidationError as exc:
        raise _as_configuration_error(exc, source='ablation variant') from exc
    return VariantSpec(token.strip(), gate_variant, layers, use_time_gate)


@dataclass(frozen=True)
class RunConfig:
    """
    Immutable validated run configuration. Build it with ``from_mapping`` or
    ``load``; every omitted key takes its default.
    """
    dataset_path: str
    dataset_format: str
    coordinates_path: str
    adjacency_path: str

    window: int
    horizon: int
    embedding_dim: int
    hidden_dim: int
    fc_layers: int
    blocks: int
    layers: int
    epsilon: float
    gate_variant: str
    time_of_day: bool
    day_of_week: bool
    use_time_gate: bool

    train_fraction: float
    val_fraction: float
    test_fraction: float

    epochs: int
    batches_per_epoch: int
    batch_size: int
    weight_decay: float
    learning_rate: float
    anneal_start: int
    anneal_every: int
    eval_batch_size: int
    max_steps: int
    horizons: tuple
    seed: int
    deterministic: bool

    output_dir: str
    variants: tuple
    ablation_seeds: int
    n_permutations: int
    decomposition_anchors: int

    synth_num_nodes: int
    synth_num_steps: int
    synth_neighbors: int
    synth_coupling: float
    synth_lag: int
    synth_noise: float
    synth_event_rate: float
    synth_event_decay: float
    synth_event_depth: float
    synth_seasonal_amplitude: float

    @classmethod
    def from_mapping(cls, data=None):
        if data is not None and not isinstance(data, Mapping):
            raise ConfigurationError('invalid run configuration: expected a JSON object')
        serializer = RunConfigSerializer(data=dict(data or {}))
        try:
            serializer.is_valid(raise_exception=True)
        except serializers.ValidationError as exc:
            raise _as_configuration_error(exc) from exc
        values = dict(serializer.validated_data)
        values['horizons'] = tuple(values['horizons'])
        values['variants'] = tuple(token.strip() for token in values['variants'])
        values['gate_variant'] = str(values['gate_variant'])
        return cls(**values)

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise MissingInputError(f'config file not found: {path}')
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f'config file {path} is not valid JSON: {exc.msg} (line {exc.lineno})') from exc
        logger.debug('Loaded run configuration from %s', path)
        return cls.from_mapping(data)

    def to_dict(self):
        data = asdict(self)
        data['horizons'] = list(self.horizons)
        data['variants'] = list(self.variants)
        return data

    def dump(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + '\n')

    def config_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def with_overrides(self, **overrides):
        """
        Apply command-line overrides; ``None`` values are ignored and the
        result is validated again.
        """
        changes = {key: value for key, value in overrides.items() if value is not None}
        if not changes:
            return self
        known = {item.name for item in fields(self)}
        unknown = sorted(set(changes) - known)
        if unknown:
            raise ConfigurationError(f'unknown configuration overrides: {unknown}')
        return type(self).from_mapping({**self.to_dict(), **{k: _plain(v) for k, v in changes.items()}})

    @property
    def time_features(self):
        return TimeFeatureSpec(time_of_day=self.time_of_day, day_of_week=self.day_of_week)

    def model_config(self, num_nodes, variant=None):
        layers = self.layers if variant is None or variant.layers is None else variant.layers
        config = ModelConfig(
            num_nodes=num_nodes,
            window=self.window,
            horizon=self.horizon,
            embedding_dim=self.embedding_dim,
            hidden_dim=self.hidden_dim,
            fc_layers=self.fc_layers,
            blocks=self.blocks,
            layers=layers,
            epsilon=self.epsilon,
            gate_variant=self.gate_variant,
            time_features=self.time_features,
            use_time_gate=self.use_time_gate,
        )
        if variant is None:
            return config
        return replace(
            config,
            gate_variant=variant.gate_variant,
            use_time_gate=config.use_time_gate and variant.use_time_gate,
        )

    def training_config(self):
        return TrainingConfig(
            epochs=self.epochs,
            batches_per_epoch=self.batches_per_epoch,
            batch_size=self.batch_size,
            weight_decay=self.weight_decay,
            learning_rate=self.learning_rate,
            anneal_start=self.anneal_start,
            anneal_every=self.anneal_every,
            eval_batch_size=self.eval_batch_size,
            horizons=self.horizons,
            deterministic=self.deterministic,
            max_steps=self.max_steps,
        )

    def split_spec(self):
        return SplitSpec(train=self.train_fraction, val=self.val_fraction, test=self.test_fraction)

    def synth_config(self, seed=None):
        return SynthConfig(
            num_nodes=self.synth_num_nodes,
            num_steps=self.synth_num_steps,
            neighbors=self.synth_neighbors,
            seasonal_amplitude=self.synth_seasonal_amplitude,
            coupling=self.synth_coupling,
            lag=self.synth_lag,
            noise=self.synth_noise,
            event_rate=self.synth_event_rate,
            event_depth=self.synth_event_depth,
            event_decay=self.synth_event_decay,
            seed=self.seed if seed is None else seed,
        )

    def variant_specs(self):
        tokens = self.variants or (self.gate_variant,)
        return [parse_variant(token) for token in tokens]


def _plain(value):
    if isinstance(value, tuple):
        return list(value)
    return value
