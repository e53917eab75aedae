from .flops import FlopCounter
from .gradcheck import check_gradients, finite_difference_gradient, relative_error
from .tensor import (
    Graph,
    Tensor,
    backward,
    deterministic,
    is_deterministic,
    no_grad,
    set_deterministic,
    zero_grad,
)

__all__ = [
    'FlopCounter',
    'Graph',
    'Tensor',
    'backward',
    'check_gradients',
    'deterministic',
    'finite_difference_gradient',
    'is_deterministic',
    'no_grad',
    'relative_error',
    'set_deterministic',
    'zero_grad',
]
