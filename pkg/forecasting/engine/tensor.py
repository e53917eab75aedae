"""
Dense tensors with define-by-run reverse-mode differentiation.

A primitive applied to operands that require gradients records a ``Node``
on its result. ``backward(loss)`` collects the nodes reachable from the
loss into a ``Graph`` in topological order, runs every backward rule once
and marks the nodes consumed, so a second call on the same graph fails.
"""
import contextlib
import contextvars

import numpy as np

from ..exceptions import GraphError, ShapeError

DTYPE = np.float64

_grad_enabled = contextvars.ContextVar('grad_enabled', default=True)
_deterministic = contextvars.ContextVar('deterministic', default=True)


def is_grad_enabled():
    return _grad_enabled.get()


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_deterministic():
    return _deterministic.get()


def set_deterministic(flag):
    """Switch deterministic (fixed summation order) mode for the current context."""
    _deterministic.set(bool(flag))


@contextlib.contextmanager
def deterministic(flag=True):
    token = _deterministic.set(bool(flag))
    try:
        yield
    finally:
        _deterministic.reset(token)


class Tensor:
    """
    Dense array of 64-bit reals with an optional gradient accumulator.
    """

    def __init__(self, values, requires_grad=False, name=None):
        array = np.array(values, dtype=DTYPE)
        if any(extent <= 0 for extent in array.shape):
            raise ShapeError('tensor', array.shape, detail='extents must be positive')
        self.values = array
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name
        self._node = None

    @property
    def shape(self):
        return self.values.shape

    @property
    def ndim(self):
        return self.values.ndim

    @property
    def size(self):
        return self.values.size

    def item(self):
        if self.values.size != 1:
            raise ShapeError('item', self.shape, detail='tensor is not a scalar')
        return float(self.values.reshape(-1)[0])

    def numpy(self):
        return self.values.copy()

    def detach(self):
        return Tensor(self.values, requires_grad=False, name=self.name)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        flags = ', requires_grad=True' if self.requires_grad else ''
        label = f', name={self.name!r}' if self.name else ''
        return f'Tensor(shape={self.shape}{flags}{label})'

    # Operator sugar over the primitives in ``ops``; operands must share a shape.
    def __add__(self, other):
        from . import ops
        return ops.add(self, _as_tensor(other, self.shape))

    def __radd__(self, other):
        return self.__add__(other)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, _as_tensor(other, self.shape))

    def __rsub__(self, other):
        from . import ops
        return ops.sub(_as_tensor(other, self.shape), self)

    def __mul__(self, other):
        from . import ops
        if np.isscalar(other):
            return ops.scale(self, float(other))
        return ops.mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    @property
    def T(self):
        from . import ops
        return ops.transpose(self)


def _as_tensor(value, shape):
    if isinstance(value, Tensor):
        return value
    if np.isscalar(value):
        return Tensor(np.full(shape, float(value)))
    return Tensor(value)


class Node:
    """
    One recorded primitive application.
    """
    __slots__ = ('primitive', 'inputs', 'output', 'backward_fn', 'consumed')

    def __init__(self, primitive, inputs, output, backward_fn):
        self.primitive = primitive
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn
        self.consumed = False


def record(primitive, inputs, output, backward_fn):
    """Attach a node to ``output`` when any operand takes part in differentiation."""
    if is_grad_enabled() and any(tensor.requires_grad for tensor in inputs):
        output.requires_grad = True
        output._node = Node(primitive, tuple(inputs), output, backward_fn)
    return output


class Graph:
    """
    Topologically ordered view of the nodes reachable from an output.
    """

    def __init__(self, nodes):
        self.nodes = nodes

    def __len__(self):
        return len(self.nodes)

    @classmethod
    def collect(cls, output):
        if output._node is None:
            raise GraphError('backward: the loss was not produced by recorded primitives')
        order = []
        visited = set()
        stack = [(output._node, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            if node.consumed:
                raise GraphError(
                    f'backward: graph already consumed at {node.primitive}; rebuild it by re-running the forward pass'
                )
            visited.add(id(node))
            stack.append((node, True))
            for operand in node.inputs:
                if operand._node is not None and id(operand._node) not in visited:
                    stack.append((operand._node, False))
        return cls(order)

    def run(self, seed):
        grads = {id(self.nodes[-1].output): seed}
        for node in reversed(self.nodes):
            upstream = grads.pop(id(node.output), None)
            node.consumed = True
            backward_fn, node.backward_fn = node.backward_fn, None
            if upstream is None:
                continue
            for operand, grad in zip(node.inputs, backward_fn(upstream)):
                if grad is None or not operand.requires_grad:
                    continue
                if operand._node is None:
                    operand.grad = grad.copy() if operand.grad is None else operand.grad + grad
                else:
                    key = id(operand)
                    grads[key] = grad if key not in grads else grads[key] + grad


def backward(loss):
    """Fill ``grad`` of every leaf that requires gradients with d(loss)/d(leaf)."""
    if loss.values.size != 1 or loss.ndim > 1:
        raise GraphError(f'backward: loss must be a scalar, got shape {loss.shape}')
    graph = Graph.collect(loss)
    if not len(graph):
        raise GraphError('backward: empty graph')
    graph.run(np.ones_like(loss.values))
    return graph


def zero_grad(tensors):
    for tensor in tensors:
        tensor.grad = None
