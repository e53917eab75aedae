"""
Edge weights, the hard graph gate and the gate variants used in ablations.

Batched shapes: X is (B, N, w), the node level X_max is (B, N, 1) and the
gate output G is (B, N, N * w) with source node j occupying columns
[j * w, (j + 1) * w) of row i.
"""
import logging

import numpy as np

from ..engine import ops
from ..engine.tensor import Tensor
from ..exceptions import ConfigurationError, ShapeError
from .config import GateVariant

logger = logging.getLogger(__name__)

LEVEL_FLOOR = 1e-6


def edge_weights(embeddings, epsilon):
    """W = exp(epsilon * E E^T), symmetrized so W[i, j] == W[j, i] exactly."""
    similarity = ops.matmul(embeddings, ops.transpose(embeddings))
    symmetric = ops.scale(ops.add(similarity, ops.transpose(similarity)), 0.5)
    return ops.exp(ops.scale(symmetric, epsilon), saturate=True)


def attention_weights(embeddings, epsilon):
    """Row-normalized soft weights softmax(epsilon * E E^T)."""
    similarity = ops.matmul(embeddings, ops.transpose(embeddings))
    return ops.softmax_rows(ops.scale(similarity, epsilon))


def node_level(x):
    """
    Per-node maximum over the window, (B, N, 1). Rows whose maximum is below
    1e-6 (dead sensors) use 1.0 instead.
    """
    peak = ops.max_rows(x)
    keep = (peak.values >= LEVEL_FLOOR).astype(np.float64)
    return ops.add(ops.mul(peak, Tensor(keep)), Tensor(1.0 - keep))


def _batched(x):
    if x.ndim == 2:
        return ops.reshape(x, (1,) + x.shape), True
    if x.ndim != 3:
        raise ShapeError('graph_gate', x.shape, detail='expected (N, w) or (B, N, w) histories')
    return x, False


def _pairwise(weights, x, level):
    batch, num_nodes, window = x.shape
    if weights.shape != (num_nodes, num_nodes):
        raise ShapeError('graph_gate', weights.shape, x.shape)
    full = (batch, num_nodes, num_nodes, window)
    weight = ops.broadcast_to(ops.reshape(weights, (1, num_nodes, num_nodes, 1)), full)
    source = ops.broadcast_to(ops.reshape(x, (batch, 1, num_nodes, window)), full)
    target = ops.broadcast_to(ops.reshape(level, (batch, num_nodes, 1, 1)), full)
    return ops.mul(weight, source), target


def graph_gate(weights, x, level=None):
    """
    G[i, j * w + k] = relu((W[i, j] * X[j, k] - X_max[i]) / X_max[i]).

    ``x`` may be (N, w) or batched (B, N, w); the result matches its rank.
    """
    x, squeeze = _batched(x)
    if level is None:
        level = node_level(x)
    batch, num_nodes, window = x.shape
    weighted, target = _pairwise(weights, x, level)
    gated = ops.relu(ops.div(ops.sub(weighted, target), target, floor=0.0))
    shape = (num_nodes, num_nodes * window) if squeeze else (batch, num_nodes, num_nodes * window)
    return ops.reshape(gated, shape)


def attention_gate(weights, x, level=None):
    """Soft gate W[i, j] * X[j, k] / X_max[i] with no threshold."""
    x, squeeze = _batched(x)
    if level is None:
        level = node_level(x)
    batch, num_nodes, window = x.shape
    weighted, target = _pairwise(weights, x, level)
    soft = ops.div(weighted, target, floor=0.0)
    shape = (num_nodes, num_nodes * window) if squeeze else (batch, num_nodes, num_nodes * window)
    return ops.reshape(soft, shape)


class GateProvider:
    """
    Supplies one layer's gate weight matrix and applies the gate.
    """
    kind = None
    hard = True

    def weights(self):
        raise NotImplementedError

    def parameters(self):
        return []

    def gate(self, x, level=None):
        apply = graph_gate if self.hard else attention_gate
        return apply(self.weights(), x, level)

    def __repr__(self):
        return f'{type(self).__name__}(kind={self.kind!r})'


class LearnableGate(GateProvider):
    def __init__(self, embeddings, epsilon, kind=GateVariant.LEARNABLE_PER_LAYER):
        self.embeddings = embeddings
        self.epsilon = float(epsilon)
        self.kind = str(kind)

    def weights(self):
        return edge_weights(self.embeddings, self.epsilon)

    def parameters(self):
        return [self.embeddings]


class FixedGate(GateProvider):
    def __init__(self, matrix, kind):
        self.matrix = Tensor(matrix)
        self.kind = str(kind)

    def weights(self):
        return self.matrix


class AttentionGate(GateProvider):
    kind = str(GateVariant.GRAPH_ATTENTION)
    hard = False

    def __init__(self, embeddings, epsilon):
        self.embeddings = embeddings
        self.epsilon = float(epsilon)

    def weights(self):
        return attention_weights(self.embeddings, self.epsilon)

    def parameters(self):
        return [self.embeddings]


def make_gate_variant(kind, layer_index, params, epsilon=10.0):
    """
    Gate provider for layer ``layer_index`` (0-based) of ``params`` under
    the ablation variant ``kind``.
    """
    if kind not in GateVariant.values:
        raise ConfigurationError(f'unknown gate variant {kind!r}', {'gate_variant': 'unknown'})
    num_layers = len(params.layers)
    if not 0 <= layer_index < num_layers:
        raise ConfigurationError(f'layer index {layer_index} outside [0, {num_layers})')
    embeddings = params.layers[layer_index].embeddings
    num_nodes = embeddings.shape[0]
    identity = FixedGate(np.eye(num_nodes), GateVariant.IDENTITY)
    ones = FixedGate(np.ones((num_nodes, num_nodes)), GateVariant.ONES)

    if kind == GateVariant.IDENTITY:
        return identity
    if kind == GateVariant.ONES:
        return ones
    if kind == GateVariant.GRAPH_ATTENTION:
        return AttentionGate(embeddings, epsilon)
    if kind == GateVariant.SHARED_LEARNABLE:
        return LearnableGate(params.layers[0].embeddings, epsilon, kind)
    if kind == GateVariant.LEARNABLE_FIRST_LAYER:
        return LearnableGate(embeddings, epsilon, kind) if layer_index == 0 else ones
    if kind == GateVariant.IDENTITY_LAST_LAYER and layer_index == num_layers - 1:
        return identity
    return LearnableGate(embeddings, epsilon, kind)
