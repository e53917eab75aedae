from .blocks import fc_ts_block_stack
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import GateVariant, ModelConfig
from .fcgaga import FCGAGAModel, ForecastOutput, gate_statistics, layer_forward, model_forward
from .gates import (
    AttentionGate,
    FixedGate,
    GateProvider,
    LearnableGate,
    attention_gate,
    attention_weights,
    edge_weights,
    graph_gate,
    make_gate_variant,
    node_level,
)
from .params import BlockParams, Dense, LayerParams, ModelParams, TimeGateParams
from .time_gate import INPUT_EFFECT_FLOOR, time_gate

__all__ = [
    'GateVariant',
    'ModelConfig',
    'ModelParams',
    'LayerParams',
    'BlockParams',
    'TimeGateParams',
    'Dense',
    'edge_weights',
    'attention_weights',
    'node_level',
    'graph_gate',
    'attention_gate',
    'GateProvider',
    'LearnableGate',
    'FixedGate',
    'AttentionGate',
    'make_gate_variant',
    'time_gate',
    'INPUT_EFFECT_FLOOR',
    'fc_ts_block_stack',
    'layer_forward',
    'model_forward',
    'FCGAGAModel',
    'ForecastOutput',
    'gate_statistics',
    'Checkpoint',
    'save_checkpoint',
    'load_checkpoint',
]
