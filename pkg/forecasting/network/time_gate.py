import logging

import numpy as np

from ..engine import ops
from ..engine.tensor import Tensor
from ..exceptions import ShapeError

logger = logging.getLogger(__name__)

INPUT_EFFECT_FLOOR = 0.01


def time_gate(params, embeddings, time_features):
    """
    Multiplicative seasonal effects for every (anchor, node) pair.

    ``time_features`` is (B, time_dim); each node sees [E_i, tf_b] through a
    shared ReLU layer and two linear heads. Returns ``(input_effect,
    output_effect)`` shaped (B, N, w) and (B, N, H).
    """
    num_nodes, dim = embeddings.shape
    values = np.asarray(time_features, dtype=np.float64)
    if values.ndim == 1:
        values = values[None, :]
    batch = values.shape[0]
    expected = params.hidden.weight.shape[0] - dim
    if values.shape[-1] != expected:
        raise ShapeError('time_gate', values.shape, detail=f'expected {expected} time features')
    node_embeddings = ops.broadcast_to(ops.reshape(embeddings, (1, num_nodes, dim)), (batch, num_nodes, dim))
    if expected:
        features = Tensor(values)
        covariates = ops.broadcast_to(ops.reshape(features, (batch, 1, expected)), (batch, num_nodes, expected))
        joined = ops.concat([node_embeddings, covariates], axis=-1)
    else:
        joined = node_embeddings
    rows = ops.reshape(joined, (batch * num_nodes, dim + expected))
    hidden = ops.relu(params.hidden(rows))
    input_effect = params.input_head(hidden)
    output_effect = params.output_head(hidden)
    return (
        ops.reshape(input_effect, (batch, num_nodes, input_effect.shape[-1])),
        ops.reshape(output_effect, (batch, num_nodes, output_effect.shape[-1])),
    )


def apply_input_effect(x, input_effect):
    """Divide the layer input by the input effect, flooring |effect| at 0.01."""
    divided = ops.div(x, input_effect, floor=INPUT_EFFECT_FLOOR)
    if divided.clamped_count:
        logger.debug('time gate clamped %d input effects to %s', divided.clamped_count, INPUT_EFFECT_FLOOR)
    return divided
