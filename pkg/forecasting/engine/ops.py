"""
Forward primitives with their backward rules.

Shape algebra:
    matmul         (m, k) @ (k, n) -> (m, n)
    transpose      (..., m, n) -> (..., n, m)
    add/sub/mul    equal shapes -> same shape
    div            equal shapes -> same shape, divisor floored in magnitude
    relu/exp/abs/sqrt/scale
                   any shape -> same shape
    max_rows       (..., n) -> (..., 1)
    reduce_sum     any shape -> reduced along ``axis`` (all axes by default)
    concat         shapes equal except along ``axis``
    broadcast_to   numpy broadcasting to an explicit target shape
    reshape        any shape -> same element count
"""
import logging

import numpy as np

from ..exceptions import NonFiniteError, ShapeError
from .flops import ELEMENTWISE, MATMUL, REDUCTION, record_flops
from .tensor import Tensor, is_deterministic, record

logger = logging.getLogger(__name__)

MAX_FINITE = np.finfo(np.float64).max


def _check_finite(primitive, values):
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(primitive, detail=f'{int(np.sum(~np.isfinite(values)))} entries')


def _same_shape(primitive, a, b):
    if a.shape != b.shape:
        raise ShapeError(primitive, a.shape, b.shape)


def _unbroadcast(grad, shape):
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _matmul_values(a, b):
    if is_deterministic():
        return np.einsum('ik,kj->ij', a, b, optimize=False)
    return a @ b


def matmul(a, b):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError('matmul', a.shape, b.shape)
    m, k = a.shape
    n = b.shape[1]
    out = Tensor(_matmul_values(a.values, b.values))
    _check_finite('matmul', out.values)
    record_flops(MATMUL, m * n * k)

    def backward(grad):
        grad_a = _matmul_values(grad, b.values.T) if a.requires_grad else None
        grad_b = _matmul_values(a.values.T, grad) if b.requires_grad else None
        return grad_a, grad_b

    return record('matmul', (a, b), out, backward)


def transpose(x):
    if x.ndim < 2:
        raise ShapeError('transpose', x.shape, detail='needs at least two axes')
    out = Tensor(np.swapaxes(x.values, -1, -2))

    def backward(grad):
        return (np.swapaxes(grad, -1, -2),)

    return record('transpose', (x,), out, backward)


def add(a, b):
    _same_shape('add', a, b)
    out = Tensor(a.values + b.values)
    _check_finite('add', out.values)
    record_flops(ELEMENTWISE, out.size)
    return record('add', (a, b), out, lambda grad: (grad, grad))


def sub(a, b):
    _same_shape('sub', a, b)
    out = Tensor(a.values - b.values)
    _check_finite('sub', out.values)
    record_flops(ELEMENTWISE, out.size)
    return record('sub', (a, b), out, lambda grad: (grad, -grad))


def mul(a, b):
    _same_shape('mul', a, b)
    out = Tensor(a.values * b.values)
    _check_finite('mul', out.values)
    record_flops(ELEMENTWISE, out.size)

    def backward(grad):
        return grad * b.values, grad * a.values

    return record('mul', (a, b), out, backward)


def div(a, b, floor):
    """
    Elementwise a / b where divisor magnitudes below ``floor`` are raised to
    ``floor`` with their sign kept (zero counts as positive).
    """
    _same_shape('div', a, b)
    if floor < 0:
        raise ValueError('division floor must be non-negative')
    magnitude = np.abs(b.values)
    clamped = magnitude < floor
    sign = np.where(b.values < 0, -1.0, 1.0)
    divisor = np.where(clamped, sign * floor, b.values)
    with np.errstate(divide='ignore', invalid='ignore'):
        out = Tensor(a.values / divisor)
    _check_finite('div', out.values)
    record_flops(ELEMENTWISE, out.size)

    def backward(grad):
        grad_a = grad / divisor
        grad_b = np.where(clamped, 0.0, -grad * a.values / (divisor * divisor))
        return grad_a, grad_b

    out = record('div', (a, b), out, backward)
    out.clamped_count = int(clamped.sum())
    return out


def relu(x):
    mask = x.values > 0
    out = Tensor(np.where(mask, x.values, 0.0))
    record_flops(ELEMENTWISE, out.size)
    return record('relu', (x,), out, lambda grad: (grad * mask,))


def exp(x, saturate=False):
    """
    Elementwise exponential. Overflow raises unless ``saturate`` is set, in
    which case overflowing entries are pinned to the largest finite value.
    """
    with np.errstate(over='ignore'):
        values = np.exp(x.values)
    overflow = ~np.isfinite(values)
    if overflow.any():
        if not saturate or np.isnan(values).any():
            raise NonFiniteError('exp', detail=f'{int(overflow.sum())} entries overflowed')
        logger.warning('exp saturated %d of %d entries at the largest finite value', int(overflow.sum()), values.size)
        values = np.where(overflow, MAX_FINITE, values)
    out = Tensor(values)
    record_flops(ELEMENTWISE, out.size)

    def backward(grad):
        with np.errstate(over='ignore'):
            return (np.nan_to_num(grad * values, posinf=MAX_FINITE, neginf=-MAX_FINITE),)

    return record('exp', (x,), out, backward)


def scale(x, factor):
    factor = float(factor)
    out = Tensor(x.values * factor)
    _check_finite('scale', out.values)
    record_flops(ELEMENTWISE, out.size)
    return record('scale', (x,), out, lambda grad: (grad * factor,))


def absolute(x):
    out = Tensor(np.abs(x.values))
    record_flops(ELEMENTWISE, out.size)
    sign = np.sign(x.values)
    return record('abs', (x,), out, lambda grad: (grad * sign,))


def sqrt(x):
    if np.any(x.values < 0):
        raise NonFiniteError('sqrt', detail='negative operand')
    root = np.sqrt(x.values)
    out = Tensor(root)
    record_flops(ELEMENTWISE, out.size)

    def backward(grad):
        with np.errstate(divide='ignore'):
            return (np.where(root > 0, grad * 0.5 / np.where(root > 0, root, 1.0), 0.0),)

    return record('sqrt', (x,), out, backward)


def max_rows(x):
    """Maximum along the last axis, keeping it as an axis of extent 1."""
    index = np.argmax(x.values, axis=-1)[..., None]
    out = Tensor(np.take_along_axis(x.values, index, axis=-1))
    record_flops(REDUCTION, x.size)

    def backward(grad):
        # the first maximal entry receives the gradient
        routed = np.zeros_like(x.values)
        np.put_along_axis(routed, index, grad, axis=-1)
        return (routed,)

    return record('max_rows', (x,), out, backward)


def reduce_sum(x, axis=None, keepdims=False):
    out = Tensor(np.sum(x.values, axis=axis, keepdims=keepdims))
    _check_finite('reduce_sum', out.values)
    record_flops(REDUCTION, x.size)

    def backward(grad):
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, x.shape).copy(),)

    return record('reduce_sum', (x,), out, backward)


def concat(tensors, axis=-1):
    tensors = list(tensors)
    if not tensors:
        raise ShapeError('concat', detail='nothing to concatenate')
    reference = tensors[0]
    ax = axis % reference.ndim
    for tensor in tensors[1:]:
        if tensor.ndim != reference.ndim or any(
            tensor.shape[i] != reference.shape[i] for i in range(reference.ndim) if i != ax
        ):
            raise ShapeError('concat', reference.shape, tensor.shape, detail=f'axis {axis}')
    out = Tensor(np.concatenate([tensor.values for tensor in tensors], axis=ax))
    bounds = np.cumsum([tensor.shape[ax] for tensor in tensors])[:-1]

    def backward(grad):
        return tuple(np.split(grad, bounds, axis=ax))

    return record('concat', tuple(tensors), out, backward)


def broadcast_to(x, shape):
    shape = tuple(shape)
    try:
        values = np.broadcast_to(x.values, shape).copy()
    except ValueError:
        raise ShapeError('broadcast_to', x.shape, shape) from None
    out = Tensor(values)
    return record('broadcast_to', (x,), out, lambda grad: (_unbroadcast(grad, x.shape),))


def reshape(x, shape):
    shape = tuple(shape)
    try:
        values = x.values.reshape(shape)
    except ValueError:
        raise ShapeError('reshape', x.shape, shape) from None
    out = Tensor(values)
    return record('reshape', (x,), out, lambda grad: (grad.reshape(x.shape),))


def mean(x):
    return scale(reduce_sum(x), 1.0 / x.size)


def square_sum(x):
    return reduce_sum(mul(x, x))


def softmax_rows(x):
    """Row-wise softmax along the last axis, shifted by the (constant) row max."""
    shift = Tensor(np.max(x.values, axis=-1, keepdims=True))
    shifted = sub(x, broadcast_to(shift, x.shape))
    numerator = exp(shifted)
    denominator = broadcast_to(reduce_sum(numerator, axis=-1, keepdims=True), x.shape)
    return div(numerator, denominator, floor=0.0)


def add_bias(x, bias):
    """Add a length-n bias to every row of an (m, n) matrix."""
    if x.ndim != 2 or bias.ndim != 1 or x.shape[1] != bias.shape[0]:
        raise ShapeError('add_bias', x.shape, bias.shape)
    return add(x, broadcast_to(reshape(bias, (1, bias.shape[0])), x.shape))
