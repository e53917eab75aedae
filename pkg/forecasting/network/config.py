from dataclasses import asdict, dataclass, field, fields

import numpy as np
from django.db import models
from django.utils.translation import gettext_lazy as _

from ..data.windows import TimeFeatureSpec
from ..exceptions import ConfigurationError


class GateVariant(models.TextChoices):
    """
    Graph gate weight matrices available to a stack of layers.
    """
    LEARNABLE_PER_LAYER = 'learnable_per_layer', _('Learnable per layer')
    SHARED_LEARNABLE = 'shared_learnable', _('Shared learnable')
    LEARNABLE_FIRST_LAYER = 'learnable_first_layer', _('Learnable first layer')
    ONES = 'ones', _('Ones')
    IDENTITY = 'identity', _('Identity')
    GRAPH_ATTENTION = 'graph_attention', _('Graph attention')
    IDENTITY_LAST_LAYER = 'identity_last_layer', _('Identity last layer (4I)')


@dataclass(frozen=True)
class ModelConfig:
    """
    Structural hyperparameters of an FC-GAGA stack.

    Defaults follow the published training setup: d=64, d_h=128, L=3, R=2,
    w=H=12, three layers and epsilon=10.
    """
    num_nodes: int
    window: int = 12
    horizon: int = 12
    embedding_dim: int = 64
    hidden_dim: int = 128
    fc_layers: int = 3
    blocks: int = 2
    layers: int = 3
    epsilon: float = 10.0
    gate_variant: str = GateVariant.LEARNABLE_PER_LAYER
    time_features: TimeFeatureSpec = field(default_factory=TimeFeatureSpec)
    use_time_gate: bool = True

    def __post_init__(self):
        errors = {}
        for name in ('num_nodes', 'window', 'horizon', 'embedding_dim', 'hidden_dim', 'blocks', 'layers'):
            if getattr(self, name) < 1:
                errors[name] = 'must be positive'
        if self.fc_layers < 2:
            errors['fc_layers'] = 'at least two fully connected layers per block are required'
        if self.layers > 1 and self.window != self.horizon:
            errors['window'] = 'stacking more than one layer requires window == horizon'
        if not np.isfinite(self.epsilon):
            errors['epsilon'] = 'must be finite'
        if self.gate_variant not in GateVariant.values:
            errors['gate_variant'] = f'unknown gate variant {self.gate_variant!r}'
        if errors:
            detail = '; '.join(f'{key}: {message}' for key, message in errors.items())
            raise ConfigurationError(f'invalid model configuration: {detail}', errors)
        object.__setattr__(self, 'gate_variant', str(GateVariant(self.gate_variant).value))

    @property
    def time_dim(self):
        return self.time_features.dim

    @property
    def input_width(self):
        """Width of one node's block input [E, X / X_max, G]."""
        return self.embedding_dim + self.window + self.num_nodes * self.window

    def as_dict(self):
        data = asdict(self)
        data['time_features'] = self.time_features.as_dict()
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        known = {item.name for item in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f'unknown model configuration keys: {sorted(unknown)}')
        if 'time_features' in data and not isinstance(data['time_features'], TimeFeatureSpec):
            data['time_features'] = TimeFeatureSpec(**data['time_features'])
        return cls(**data)
