"""
Learnable state of an FC-GAGA stack.

Weights are stored as (fan_in, fan_out) so a batch of row vectors ``x``
maps through ``x @ weight + bias``.
"""
from dataclasses import dataclass, field

import numpy as np

from ..engine import ops
from ..engine.tensor import Tensor
from .config import GateVariant


def glorot_uniform(rng, fan_in, fan_out, name):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out)), requires_grad=True, name=name)


def zeros(shape, name):
    return Tensor(np.zeros(shape), requires_grad=True, name=name)


@dataclass
class Dense:
    """
    Affine map ``x @ weight + bias``.
    """
    weight: Tensor
    bias: Tensor

    @classmethod
    def init(cls, rng, fan_in, fan_out, name):
        return cls(glorot_uniform(rng, fan_in, fan_out, f'{name}.weight'), zeros((fan_out,), f'{name}.bias'))

    def __call__(self, x):
        return ops.add_bias(ops.matmul(x, self.weight), self.bias)

    def named_parameters(self, prefix):
        return [(f'{prefix}.weight', self.weight), (f'{prefix}.bias', self.bias)]


@dataclass
class TimeGateParams:
    """
    Shared hidden layer over [E_i, time features] with separate input and
    output heads.
    """
    hidden: Dense
    input_head: Dense
    output_head: Dense

    @classmethod
    def init(cls, rng, config, name):
        # Zero head weights and unit head biases make the gate an identity at init.
        def head(width, suffix):
            return Dense(
                zeros((config.hidden_dim, width), f'{name}.{suffix}.weight'),
                Tensor(np.ones(width), requires_grad=True, name=f'{name}.{suffix}.bias'),
            )

        return cls(
            hidden=Dense.init(rng, config.embedding_dim + config.time_dim, config.hidden_dim, f'{name}.hidden'),
            input_head=head(config.window, 'input_head'),
            output_head=head(config.horizon, 'output_head'),
        )

    def named_parameters(self, prefix):
        return (
            self.hidden.named_parameters(f'{prefix}.hidden')
            + self.input_head.named_parameters(f'{prefix}.input_head')
            + self.output_head.named_parameters(f'{prefix}.output_head')
        )

    def weights(self):
        return [self.hidden.weight, self.input_head.weight, self.output_head.weight]


@dataclass
class BlockParams:
    """
    One residual block: L fully connected layers, then the backcast and
    forecast projections.
    """
    layers: list
    backcast: Tensor
    forecast: Tensor

    @classmethod
    def init(cls, rng, config, name):
        width = config.input_width
        layers = [Dense.init(rng, width, config.hidden_dim, f'{name}.fc_0')]
        for index in range(1, config.fc_layers):
            layers.append(Dense.init(rng, config.hidden_dim, config.hidden_dim, f'{name}.fc_{index}'))
        return cls(
            layers=layers,
            backcast=glorot_uniform(rng, config.hidden_dim, width, f'{name}.backcast'),
            forecast=glorot_uniform(rng, config.hidden_dim, config.horizon, f'{name}.forecast'),
        )

    def named_parameters(self, prefix):
        named = []
        for index, layer in enumerate(self.layers):
            named.extend(layer.named_parameters(f'{prefix}.fc_{index}'))
        named.append((f'{prefix}.backcast', self.backcast))
        named.append((f'{prefix}.forecast', self.forecast))
        return named

    def weights(self):
        return [layer.weight for layer in self.layers] + [self.backcast, self.forecast]


@dataclass
class LayerParams:
    embeddings: Tensor
    blocks: list
    time_gate: TimeGateParams = None

    def named_parameters(self, prefix):
        named = [(f'{prefix}.embeddings', self.embeddings)]
        if self.time_gate is not None:
            named.extend(self.time_gate.named_parameters(f'{prefix}.time_gate'))
        for index, block in enumerate(self.blocks):
            named.extend(block.named_parameters(f'{prefix}.block_{index}'))
        return named

    def weights(self):
        weights = [] if self.time_gate is None else self.time_gate.weights()
        for block in self.blocks:
            weights.extend(block.weights())
        return weights


@dataclass
class ModelParams:
    """
    All learnable tensors of the model, one ``LayerParams`` per FC-GAGA layer.
    Under the shared_learnable variant every layer holds the same embedding
    tensor object.
    """
    layers: list = field(default_factory=list)

    @classmethod
    def init(cls, config, rng):
        if isinstance(rng, (int, np.integer)):
            rng = np.random.default_rng(rng)
        scale = 1.0 / np.sqrt(config.embedding_dim)
        shared = None
        layers = []
        for index in range(config.layers):
            name = f'layer_{index}'
            if config.gate_variant == GateVariant.SHARED_LEARNABLE and shared is not None:
                embeddings = shared
            else:
                embeddings = Tensor(
                    rng.normal(0.0, scale, size=(config.num_nodes, config.embedding_dim)),
                    requires_grad=True,
                    name=f'{name}.embeddings',
                )
                shared = embeddings
            time_gate = TimeGateParams.init(rng, config, f'{name}.time_gate') if config.use_time_gate else None
            blocks = [BlockParams.init(rng, config, f'{name}.block_{b}') for b in range(config.blocks)]
            layers.append(LayerParams(embeddings=embeddings, blocks=blocks, time_gate=time_gate))
        return cls(layers=layers)

    def named_parameters(self):
        """(name, tensor) pairs; a tensor shared by several layers appears once."""
        seen = set()
        named = []
        for index, layer in enumerate(self.layers):
            for name, tensor in layer.named_parameters(f'layer_{index}'):
                if id(tensor) in seen:
                    continue
                seen.add(id(tensor))
                named.append((name, tensor))
        return named

    def parameters(self):
        return [tensor for _, tensor in self.named_parameters()]

    def decay_weights(self):
        """FC weight matrices subject to weight decay; biases and embeddings are excluded."""
        return [tensor for layer in self.layers for tensor in layer.weights()]

    def zero_grad(self):
        for tensor in self.parameters():
            tensor.grad = None

    def state_dict(self):
        return {name: tensor.values.copy() for name, tensor in self.named_parameters()}

    def num_parameters(self):
        return int(sum(tensor.size for tensor in self.parameters()))
