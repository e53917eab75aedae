import logging

import numpy as np

from ..engine import ops
from ..engine.tensor import Tensor
from ..exceptions import ShapeError

logger = logging.getLogger(__name__)

MASK_THRESHOLD = 1e-6


def target_mask(targets):
    """True where a target is observed; zeros mark missing sensor data."""
    return np.abs(np.asarray(targets)) > MASK_THRESHOLD


def masked_mae_loss(prediction, targets):
    """
    Mean |Y - Y_hat| over observed targets of all nodes and horizon steps.
    A batch without observed targets yields 0 and a warning.
    """
    targets = targets.values if isinstance(targets, Tensor) else np.asarray(targets, dtype=np.float64)
    if prediction.shape != targets.shape:
        raise ShapeError('masked_mae_loss', prediction.shape, targets.shape)
    mask = target_mask(targets)
    count = int(mask.sum())
    if count == 0:
        logger.warning('masked_mae_loss: every target in the batch is masked, loss is 0')
    errors = ops.absolute(ops.sub(prediction, Tensor(targets)))
    total = ops.reduce_sum(ops.mul(errors, Tensor(mask.astype(np.float64))))
    return ops.scale(total, 1.0 / count if count else 0.0)


def weight_decay_penalty(weights, decay):
    """decay * sum of squared entries of the FC weight matrices."""
    if decay < 0:
        raise ValueError('weight decay must be non-negative')
    if hasattr(weights, 'decay_weights'):
        weights = weights.decay_weights()
    weights = list(weights)
    if not weights:
        return Tensor(0.0)
    total = ops.square_sum(weights[0])
    for weight in weights[1:]:
        total = ops.add(total, ops.square_sum(weight))
    return ops.scale(total, decay)
