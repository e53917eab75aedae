"""
Measured forward FLOPs per component against the analytic complexity terms.
"""
from dataclasses import dataclass, replace

import numpy as np

from ..engine import ops
from ..engine.flops import FlopCounter
from ..engine.tensor import Tensor, no_grad
from ..network.blocks import fc_ts_block_stack
from ..network.fcgaga import FCGAGAModel
from ..network.gates import node_level
from ..network.time_gate import time_gate


@dataclass
class ComplexityReport:
    num_nodes: int
    window: int
    hidden_dim: int
    graph_gate: int
    time_gate: int
    blocks: int
    total: int
    analytic_graph_gate: int
    analytic_time_gate: int
    analytic_blocks: int
    analytic_dominant: int

    @property
    def total_to_dominant(self):
        return self.total / self.analytic_dominant

    def as_dict(self):
        data = dict(self.__dict__)
        data['total_to_dominant'] = self.total_to_dominant
        return data


def analytic_terms(config):
    n, w, d, h = config.num_nodes, config.window, config.embedding_dim, config.hidden_dim
    return {
        'graph_gate': n * n * (w + d),
        'time_gate': n * (d + w) * h + n * config.horizon * h,
        'blocks': config.blocks * (2 * n * n * w * h + (config.fc_layers - 2) * n * h * h),
        'dominant': n * n * config.blocks * w * h,
    }


def complexity_report(config, seed=0):
    """
    Run one single-anchor forward pass and count FLOPs of the first layer's
    graph gate, time gate and residual blocks, plus the whole model.
    """
    rng = np.random.default_rng(seed)
    model = FCGAGAModel(config, seed=seed)
    x = rng.uniform(1.0, 70.0, size=(1, config.num_nodes, config.window))
    features = rng.uniform(0.0, 1.0, size=(1, config.time_dim))
    layer = model.params.layers[0]

    with no_grad():
        with FlopCounter() as total:
            model.forward(x, features)
        inputs = Tensor(x)
        with FlopCounter() as gate_counter:
            gated = model.gates[0].gate(inputs, node_level(inputs))
        time_flops = 0
        if layer.time_gate is not None:
            with FlopCounter() as time_counter:
                time_gate(layer.time_gate, layer.embeddings, features)
            time_flops = time_counter.total
        level = node_level(inputs)
        normalized = ops.div(inputs, ops.broadcast_to(level, inputs.shape), floor=0.0)
        embeddings = ops.reshape(layer.embeddings, (1,) + layer.embeddings.shape)
        z = ops.reshape(ops.concat([embeddings, normalized, gated], axis=-1), (config.num_nodes, -1))
        with FlopCounter() as block_counter:
            fc_ts_block_stack(z, layer.blocks)

    terms = analytic_terms(config)
    return ComplexityReport(
        num_nodes=config.num_nodes,
        window=config.window,
        hidden_dim=config.hidden_dim,
        graph_gate=gate_counter.total,
        time_gate=time_flops,
        blocks=block_counter.total,
        total=total.total,
        analytic_graph_gate=terms['graph_gate'],
        analytic_time_gate=terms['time_gate'],
        analytic_blocks=terms['blocks'],
        analytic_dominant=terms['dominant'],
    )


def scaling_table(config, settings, seed=0):
    """Reports for each (num_nodes, window, hidden_dim) override in ``settings``."""
    reports = []
    for num_nodes, window, hidden_dim in settings:
        reports.append(complexity_report(
            replace(config, num_nodes=num_nodes, window=window, horizon=window, hidden_dim=hidden_dim), seed=seed,
        ))
    return reports
