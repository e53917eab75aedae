"""
Chronological splits, time covariates and window batches.

For an anchor ``t`` the input window covers steps ``[t - w + 1, t]`` and the
targets cover ``[t + 1, t + H]``. Training anchors keep both windows inside
the split; evaluation anchors only require the targets to be inside the
split, so the first validation inputs may reach back into training data.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import pandas as pd

from ..exceptions import ConfigurationError

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400
DAYS_PER_WEEK = 7


@dataclass(frozen=True)
class TimeFeatureSpec:
    """
    Which time covariates feed the time gate.
    """
    time_of_day: bool = True
    day_of_week: bool = False

    @property
    def dim(self):
        return int(self.time_of_day) + DAYS_PER_WEEK * int(self.day_of_week)

    def as_dict(self):
        return {'time_of_day': self.time_of_day, 'day_of_week': self.day_of_week}


def time_features(timestamp, spec):
    """
    Covariate vector for one timestamp: time of day as a fraction of the day
    in [0, 1), then a Monday-first day-of-week one-hot when enabled.
    """
    return time_feature_matrix(pd.DatetimeIndex([pd.Timestamp(timestamp)]), spec)[0]


def time_feature_matrix(timestamps, spec):
    timestamps = pd.DatetimeIndex(timestamps)
    columns = []
    if spec.time_of_day:
        seconds = timestamps.hour * 3600 + timestamps.minute * 60 + timestamps.second
        columns.append(np.asarray(seconds, dtype=np.float64)[:, None] / SECONDS_PER_DAY)
    if spec.day_of_week:
        onehot = np.zeros((len(timestamps), DAYS_PER_WEEK))
        onehot[np.arange(len(timestamps)), np.asarray(timestamps.dayofweek)] = 1.0
        columns.append(onehot)
    if not columns:
        return np.zeros((len(timestamps), 0))
    return np.concatenate(columns, axis=1)


@dataclass(frozen=True)
class SplitSpec:
    """
    Chronological train / validation / test fractions.
    """
    train: float = 0.7
    val: float = 0.1
    test: float = 0.2

    def __post_init__(self):
        fractions = self.fractions()
        if any(value <= 0 for value in fractions):
            raise ConfigurationError('split fractions must be positive')
        if sum(fractions) != 1:
            raise ConfigurationError(f'split fractions must sum to 1, got {float(sum(fractions))}')

    def fractions(self):
        # Decimal text keeps 0.7 + 0.1 + 0.2 exact.
        return tuple(Fraction(str(value)) for value in (self.train, self.val, self.test))


@dataclass(frozen=True)
class SplitRanges:
    train: range
    val: range
    test: range

    def __iter__(self):
        return iter((self.train, self.val, self.test))

    def by_name(self, name):
        if name not in ('train', 'val', 'test'):
            raise ConfigurationError(f'unknown split {name!r}')
        return getattr(self, name)


def training_anchors(split_range, window, horizon):
    return range(split_range.start + window - 1, split_range.stop - horizon)


def evaluation_anchors(split_range, window, horizon):
    return range(max(split_range.start - 1, window - 1), split_range.stop - horizon)


def split(num_steps, spec, window=None, horizon=None):
    """
    Cut ``[0, num_steps)`` at floor(train * T) and floor((train + val) * T).

    When ``window`` and ``horizon`` are given, every split must admit at
    least one anchor (training rule for the first range, evaluation rule for
    the other two).
    """
    if hasattr(num_steps, 'num_steps'):
        num_steps = num_steps.num_steps
    train, val, _ = spec.fractions()
    first = int(train * num_steps)
    second = int((train + val) * num_steps)
    ranges = SplitRanges(range(0, first), range(first, second), range(second, num_steps))
    if window is not None and horizon is not None:
        checks = (
            ('train', training_anchors(ranges.train, window, horizon)),
            ('val', evaluation_anchors(ranges.val, window, horizon)),
            ('test', evaluation_anchors(ranges.test, window, horizon)),
        )
        for name, anchors in checks:
            if len(anchors) == 0:
                raise ConfigurationError(
                    f'{num_steps} steps are too few for one window (w={window}, H={horizon}) in the {name} split'
                )
    return ranges


@dataclass
class WindowBatch:
    """
    Histories, targets and time covariates for a set of anchors.

    inputs: (B, N, w), targets: (B, N, H), time_features: (B, time_dim),
    taken at each anchor step.
    """
    inputs: np.ndarray
    targets: np.ndarray
    time_features: np.ndarray
    anchors: np.ndarray

    @property
    def batch_size(self):
        return self.inputs.shape[0]

    @property
    def num_series(self):
        return self.inputs.shape[0] * self.inputs.shape[1]


def build_batch(panel, anchors, window, horizon, spec):
    anchors = np.asarray(anchors, dtype=np.int64)
    history = anchors[:, None] + np.arange(-window + 1, 1)
    future = anchors[:, None] + np.arange(1, horizon + 1)
    return WindowBatch(
        inputs=np.transpose(panel.values[history], (0, 2, 1)),
        targets=np.transpose(panel.values[future], (0, 2, 1)),
        time_features=time_feature_matrix(panel.timestamps[anchors], spec),
        anchors=anchors,
    )


def sample_epoch(panel, split_range, rng, batches_per_epoch, batch_size, window, horizon, spec):
    """
    Yield ``batches_per_epoch`` batches of ``batch_size`` anchors drawn
    uniformly with replacement from the training anchors of ``split_range``.
    """
    anchors = training_anchors(split_range, window, horizon)
    if len(anchors) == 0:
        raise ConfigurationError(f'no valid training anchor in steps [{split_range.start}, {split_range.stop})')
    for _ in range(batches_per_epoch):
        picks = rng.integers(0, len(anchors), size=batch_size)
        yield build_batch(panel, np.asarray(anchors)[picks], window, horizon, spec)


def iterate_windows(panel, split_range, window, horizon, batch_size, spec):
    """Every evaluation anchor of ``split_range`` exactly once, in order."""
    anchors = np.asarray(evaluation_anchors(split_range, window, horizon))
    if anchors.size == 0:
        raise ConfigurationError(f'no valid evaluation anchor in steps [{split_range.start}, {split_range.stop})')
    for offset in range(0, anchors.size, batch_size):
        yield build_batch(panel, anchors[offset:offset + batch_size], window, horizon, spec)
