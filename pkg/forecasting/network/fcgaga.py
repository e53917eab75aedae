"""
FC-GAGA layers and the stacked model.

A layer divides its input by the time gate's input effect, gates the
histories of all nodes through the graph gate, runs the residual blocks on
[E, X / X_max, G] per node, multiplies the forecast by the output effect and
returns it to input units by multiplying with X_max. Layer m > 1 receives
relu(sum of the earlier layer forecasts); the model output is the mean of
the layer forecasts.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from ..engine import ops
from ..engine.tensor import Tensor, no_grad
from ..exceptions import ConfigurationError, ShapeError
from .blocks import fc_ts_block_stack
from .gates import make_gate_variant, node_level
from .params import ModelParams
from .time_gate import apply_input_effect, time_gate

logger = logging.getLogger(__name__)


@dataclass
class LayerOutput:
    forecast: Tensor
    gate: Tensor
    level: Tensor


@dataclass
class ForecastOutput:
    """
    Model forecast (B, N, H) plus what each layer produced.
    """
    forecast: Tensor
    layer_forecasts: list = field(default_factory=list)
    gate_outputs: list = field(default_factory=list)

    def contributions(self):
        """Per-layer forecasts scaled by 1/M; they sum to ``forecast``."""
        share = 1.0 / len(self.layer_forecasts)
        return [layer.values * share for layer in self.layer_forecasts]


def _as_inputs(x, config):
    values = x.values if isinstance(x, Tensor) else np.asarray(x, dtype=np.float64)
    squeeze = values.ndim == 2
    if squeeze:
        values = values[None]
    if values.ndim != 3 or values.shape[1:] != (config.num_nodes, config.window):
        raise ShapeError(
            'model_forward', values.shape, (config.num_nodes, config.window),
            detail='expected (B, N, w) or (N, w) histories',
        )
    if np.any(values < 0):
        raise ConfigurationError('input histories must be non-negative')
    return Tensor(values), squeeze


def _as_time_features(time_features, batch, config):
    if time_features is None:
        return np.zeros((batch, config.time_dim))
    values = np.asarray(time_features, dtype=np.float64)
    if values.ndim == 1:
        values = np.broadcast_to(values, (batch, values.shape[0]))
    return values


def layer_forward(x, time_features, layer, gate, config):
    """
    One FC-GAGA layer on ``x`` (B, N, w); returns the layer forecast
    (B, N, H) together with its gate output and node levels.
    """
    batch, num_nodes, window = x.shape
    output_effect = None
    if layer.time_gate is not None:
        input_effect, output_effect = time_gate(layer.time_gate, layer.embeddings, time_features)
        x = apply_input_effect(x, input_effect)

    level = node_level(x)
    normalized = ops.div(x, ops.broadcast_to(level, x.shape), floor=0.0)
    gated = gate.gate(x, level)
    dim = layer.embeddings.shape[1]
    embeddings = ops.broadcast_to(ops.reshape(layer.embeddings, (1, num_nodes, dim)), (batch, num_nodes, dim))
    z = ops.concat([embeddings, normalized, gated], axis=-1)
    z = ops.reshape(z, (batch * num_nodes, z.shape[-1]))

    forecast = fc_ts_block_stack(z, layer.blocks)
    forecast = ops.reshape(forecast, (batch, num_nodes, forecast.shape[-1]))
    if output_effect is not None:
        forecast = ops.mul(forecast, output_effect)
    forecast = ops.mul(forecast, ops.broadcast_to(level, forecast.shape))
    return LayerOutput(forecast=forecast, gate=gated, level=level)


def model_forward(x, time_features, params, config, gates=None):
    """Run the stack on (B, N, w) or (N, w) histories."""
    inputs, squeeze = _as_inputs(x, config)
    features = _as_time_features(time_features, inputs.shape[0], config)
    if gates is None:
        gates = [make_gate_variant(config.gate_variant, m, params, config.epsilon) for m in range(config.layers)]

    layer_forecasts = []
    gate_outputs = []
    cumulative = None
    layer_input = inputs
    for m, (layer, gate) in enumerate(zip(params.layers, gates)):
        if m > 0:
            negative = int(np.sum(cumulative.values < 0))
            if negative:
                logger.debug('layer %d input: clamped %d negative cumulative forecasts at 0', m, negative)
            layer_input = ops.relu(cumulative)
        output = layer_forward(layer_input, features, layer, gate, config)
        layer_forecasts.append(output.forecast)
        gate_outputs.append(output.gate)
        cumulative = output.forecast if cumulative is None else ops.add(cumulative, output.forecast)

    forecast = ops.scale(cumulative, 1.0 / len(layer_forecasts))
    if squeeze:
        forecast = ops.reshape(forecast, forecast.shape[1:])
        layer_forecasts = [ops.reshape(item, item.shape[1:]) for item in layer_forecasts]
    return ForecastOutput(forecast=forecast, layer_forecasts=layer_forecasts, gate_outputs=gate_outputs)


class FCGAGAModel:
    """
    Configuration, parameters and per-layer gate providers of one model.
    """

    def __init__(self, config, params=None, seed=0):
        self.config = config
        self.params = params if params is not None else ModelParams.init(config, seed)
        if len(self.params.layers) != config.layers:
            raise ConfigurationError(
                f'parameters hold {len(self.params.layers)} layers, configuration asks for {config.layers}'
            )
        self.gates = [
            make_gate_variant(config.gate_variant, m, self.params, config.epsilon)
            for m in range(config.layers)
        ]

    def forward(self, x, time_features=None):
        return model_forward(x, time_features, self.params, self.config, self.gates)

    __call__ = forward

    def predict(self, x, time_features=None):
        with no_grad():
            return self.forward(x, time_features).forecast.numpy()

    def named_parameters(self):
        return self.params.named_parameters()

    def parameters(self):
        return self.params.parameters()

    def edge_weight_matrices(self):
        """Gate weight matrix W of every layer as numpy arrays."""
        with no_grad():
            return [gate.weights().numpy() for gate in self.gates]

    def __repr__(self):
        return (
            f'FCGAGAModel(N={self.config.num_nodes}, layers={self.config.layers}, '
            f'gate={self.config.gate_variant}, params={self.params.num_parameters()})'
        )


def gate_statistics(model, x, time_features=None):
    """Fraction of strictly positive graph-gate entries in each layer."""
    with no_grad():
        output = model.forward(x, time_features)
    return [float(np.mean(gate.values > 0)) for gate in output.gate_outputs]
