"""
Adam with the reference framework defaults and the step-decay schedule.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import CheckpointMismatchError, NonFiniteError

logger = logging.getLogger(__name__)

BASE_LEARNING_RATE = 1e-3
ANNEAL_START_EPOCH = 43
ANNEAL_EVERY = 6


def lr_schedule(epoch, base=BASE_LEARNING_RATE, start=ANNEAL_START_EPOCH, every=ANNEAL_EVERY):
    """
    Learning rate for a 1-based ``epoch``: ``base`` until ``start``, then
    halved at ``start`` and every ``every`` epochs after it.
    """
    if epoch < 1:
        raise ValueError('epochs are counted from 1')
    if epoch < start:
        return base
    return base / 2 ** (1 + (epoch - start) // every)


@dataclass
class OptimizerState:
    """
    Adam moments per parameter name plus the scalar hyperparameters.
    """
    lr: float = BASE_LEARNING_RATE
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def scalars(self):
        return {'lr': self.lr, 'beta1': self.beta1, 'beta2': self.beta2, 'eps': self.eps, 'step': self.step}


def adam_step(state, params, grads):
    """
    Bias-corrected Adam update of ``params`` (name -> Tensor) in place.
    Parameters whose gradient is None are left untouched.
    """
    for name, grad in grads.items():
        if grad is not None and not np.all(np.isfinite(grad)):
            raise NonFiniteError('adam_step', detail=f'gradient of {name}')
    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for name, tensor in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        m = state.m.setdefault(name, np.zeros_like(tensor.values))
        v = state.v.setdefault(name, np.zeros_like(tensor.values))
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad * grad
        tensor.values -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return params


class Adam:
    """
    Owns the optimizer state for a fixed set of named parameters.
    """

    def __init__(self, named_parameters, lr=BASE_LEARNING_RATE, beta1=0.9, beta2=0.999, eps=1e-7):
        self.params = dict(named_parameters)
        if len({id(tensor) for tensor in self.params.values()}) != len(self.params):
            raise ValueError('a tensor is registered with the optimizer more than once')
        self.state = OptimizerState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        for name, tensor in self.params.items():
            self.state.m[name] = np.zeros_like(tensor.values)
            self.state.v[name] = np.zeros_like(tensor.values)

    @property
    def lr(self):
        return self.state.lr

    @lr.setter
    def lr(self, value):
        self.state.lr = float(value)

    @property
    def step_count(self):
        return self.state.step

    def step(self):
        grads = {name: tensor.grad for name, tensor in self.params.items()}
        adam_step(self.state, self.params, grads)

    def zero_grad(self):
        for tensor in self.params.values():
            tensor.grad = None

    def load_state(self, scalars, m, v):
        if set(m) != set(self.params) or set(v) != set(self.params):
            raise CheckpointMismatchError('optimizer state does not cover the model parameters')
        for name, tensor in self.params.items():
            if m[name].shape != tensor.shape or v[name].shape != tensor.shape:
                raise CheckpointMismatchError(f'optimizer moments for {name} have the wrong shape')
        self.state = OptimizerState(
            lr=float(scalars['lr']),
            beta1=float(scalars['beta1']),
            beta2=float(scalars['beta2']),
            eps=float(scalars['eps']),
            step=int(scalars['step']),
            m={name: np.array(m[name], dtype=np.float64) for name in self.params},
            v={name: np.array(v[name], dtype=np.float64) for name in self.params},
        )
