"""
FLOP accounting for tensor primitives.

Counters are activated with ``with FlopCounter() as counter:``; every
counter on the active stack receives the multiply-add count of each
forward primitive executed inside the block.
"""
import contextvars
from dataclasses import dataclass

MATMUL = 'matmul'
ELEMENTWISE = 'elementwise'
REDUCTION = 'reduction'
CATEGORIES = (MATMUL, ELEMENTWISE, REDUCTION)

_active_counters = contextvars.ContextVar('active_flop_counters', default=())


@dataclass
class FlopCounter:
    """
    Per-category tallies of forward multiply-adds.
    """
    matmul: int = 0
    elementwise: int = 0
    reduction: int = 0

    def add(self, category, count):
        if category not in CATEGORIES:
            raise ValueError(f'unknown FLOP category {category!r}')
        if count < 0:
            raise ValueError('FLOP counts are non-negative')
        setattr(self, category, getattr(self, category) + int(count))

    @property
    def total(self):
        return self.matmul + self.elementwise + self.reduction

    def as_dict(self):
        return {
            'matmul': self.matmul,
            'elementwise': self.elementwise,
            'reduction': self.reduction,
            'total': self.total,
        }

    def __enter__(self):
        self._token = _active_counters.set(_active_counters.get() + (self,))
        return self

    def __exit__(self, exc_type, exc, tb):
        _active_counters.reset(self._token)
        return False


def record_flops(category, count):
    """Credit ``count`` operations to every active counter."""
    for counter in _active_counters.get():
        counter.add(category, count)
