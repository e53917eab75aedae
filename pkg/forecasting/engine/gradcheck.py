"""
Central finite-difference oracle for analytic gradients.
"""
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import GradientCheckError
from .tensor import Tensor, backward, no_grad, zero_grad


def _evaluate(f, params):
    value = f(params)
    if isinstance(value, Tensor):
        value = value.item()
    return float(value)


def finite_difference_gradient(f, params, h=1e-6):
    """
    Estimate d f / d params coordinate by coordinate as
    (f(p + h e_i) - f(p - h e_i)) / (2h). ``params`` is perturbed in place
    and restored after each perturbation.
    """
    if h <= 0:
        raise ValueError('finite-difference step must be positive')
    flat = params.values.reshape(-1)
    estimate = np.zeros(flat.size)
    with no_grad():
        for index in range(flat.size):
            original = flat[index]
            try:
                flat[index] = original + h
                upper = _evaluate(f, params)
                flat[index] = original - h
                lower = _evaluate(f, params)
            finally:
                flat[index] = original
            coordinate = tuple(int(i) for i in np.unravel_index(index, params.shape))
            for value in (upper, lower):
                if not np.isfinite(value):
                    raise GradientCheckError(coordinate, value)
            estimate[index] = (upper - lower) / (2.0 * h)
    return Tensor(estimate.reshape(params.shape))


def relative_error(analytic, numeric, floor):
    """|a - n| / max(|a|, |n|, floor), elementwise."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


@dataclass
class GradientCheckReport:
    """
    Worst relative error per checked tensor.
    """
    errors: dict = field(default_factory=dict)
    worst_coordinates: dict = field(default_factory=dict)

    @property
    def max_error(self):
        return max(self.errors.values(), default=0.0)

    def failures(self, tolerance):
        return {name: error for name, error in self.errors.items() if error >= tolerance}


def check_gradients(loss_fn, named_tensors, h=1e-6, floor=1e-4):
    """
    Compare backward() against central differences for every coordinate of
    every tensor in ``named_tensors`` (name -> Tensor). ``loss_fn`` takes no
    arguments and rebuilds the graph on each call.
    """
    tensors = dict(named_tensors)
    zero_grad(tensors.values())
    backward(loss_fn())
    analytic = {
        name: (tensor.grad.copy() if tensor.grad is not None else np.zeros(tensor.shape))
        for name, tensor in tensors.items()
    }
    report = GradientCheckReport()
    for name, tensor in tensors.items():
        numeric = finite_difference_gradient(lambda _: loss_fn(), tensor, h=h).values
        error = relative_error(analytic[name], numeric, floor)
        worst = int(np.argmax(error))
        report.errors[name] = float(error.reshape(-1)[worst])
        report.worst_coordinates[name] = tuple(int(i) for i in np.unravel_index(worst, tensor.shape))
    zero_grad(tensors.values())
    return report
