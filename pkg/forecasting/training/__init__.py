from .complexity import ComplexityReport, analytic_terms, complexity_report, scaling_table
from .losses import masked_mae_loss, target_mask, weight_decay_penalty
from .metrics import (
    DEFAULT_HORIZONS,
    HorizonMetrics,
    MetricsAccumulator,
    MetricsReport,
    evaluate,
    horizon_label,
    score,
)
from .optim import Adam, OptimizerState, adam_step, lr_schedule
from .trainer import TrainingConfig, TrainingResult, train

__all__ = [
    'masked_mae_loss',
    'target_mask',
    'weight_decay_penalty',
    'Adam',
    'OptimizerState',
    'adam_step',
    'lr_schedule',
    'DEFAULT_HORIZONS',
    'HorizonMetrics',
    'MetricsAccumulator',
    'MetricsReport',
    'evaluate',
    'horizon_label',
    'score',
    'TrainingConfig',
    'TrainingResult',
    'train',
    'ComplexityReport',
    'analytic_terms',
    'complexity_report',
    'scaling_table',
]
