"""
Masked MAE / MAPE / RMSE at individual forecast steps.

Each reported horizon h is scored only at forecast step h, over every
(anchor, node) pair whose target is observed (|Y| > 1e-6).
"""
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..data.windows import iterate_windows
from ..engine.tensor import no_grad
from ..exceptions import ConfigurationError
from .losses import target_mask

logger = logging.getLogger(__name__)

DEFAULT_HORIZONS = (3, 6, 12)
STEP_MINUTES = 5
UNDEFINED = 'undefined'


def horizon_label(step, step_minutes=STEP_MINUTES):
    return f'{step * step_minutes} min'


@dataclass
class HorizonMetrics:
    step: int
    label: str
    mae: float = None
    mape_pct: float = None
    rmse: float = None
    count: int = 0

    def as_row(self):
        def show(value):
            return UNDEFINED if value is None else value

        return {
            'horizon': self.step,
            'label': self.label,
            'mae': show(self.mae),
            'mape_pct': show(self.mape_pct),
            'rmse': show(self.rmse),
            'count': self.count,
        }


@dataclass
class MetricsReport:
    """
    Per-horizon metrics plus the mean masked MAE over all forecast steps.
    """
    horizons: list = field(default_factory=list)
    mean_mae: float = None
    total_samples: int = 0

    def by_step(self, step):
        for item in self.horizons:
            if item.step == step:
                return item
        raise KeyError(step)

    def rows(self):
        return [item.as_row() for item in self.horizons]

    def to_dict(self):
        return {
            'horizons': [asdict(item) for item in self.horizons],
            'mean_mae': self.mean_mae,
            'total_samples': self.total_samples,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            horizons=[HorizonMetrics(**item) for item in data['horizons']],
            mean_mae=data['mean_mae'],
            total_samples=data['total_samples'],
        )


class MetricsAccumulator:
    """
    Running per-step sums of masked errors over (B, N, H) batches.
    """

    def __init__(self, horizon):
        self.abs_error = np.zeros(horizon)
        self.pct_error = np.zeros(horizon)
        self.sq_error = np.zeros(horizon)
        self.count = np.zeros(horizon, dtype=np.int64)
        self.total_samples = 0

    def update(self, prediction, targets):
        prediction = np.asarray(prediction, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        mask = target_mask(targets)
        error = np.where(mask, prediction - targets, 0.0)
        safe = np.where(mask, targets, 1.0)
        axes = tuple(range(targets.ndim - 1))
        self.abs_error += np.abs(error).sum(axis=axes)
        self.pct_error += np.abs(error / safe).sum(axis=axes)
        self.sq_error += (error * error).sum(axis=axes)
        self.count += mask.sum(axis=axes)
        self.total_samples += int(np.prod(targets.shape[:-1]))

    def report(self, horizons, step_minutes=STEP_MINUTES):
        items = []
        for step in horizons:
            index = step - 1
            count = int(self.count[index])
            if count == 0:
                items.append(HorizonMetrics(step, horizon_label(step, step_minutes)))
                continue
            items.append(HorizonMetrics(
                step=step,
                label=horizon_label(step, step_minutes),
                mae=float(self.abs_error[index] / count),
                mape_pct=float(100.0 * self.pct_error[index] / count),
                rmse=float(np.sqrt(self.sq_error[index] / count)),
                count=count,
            ))
        total = int(self.count.sum())
        mean_mae = float(self.abs_error.sum() / total) if total else None
        return MetricsReport(horizons=items, mean_mae=mean_mae, total_samples=self.total_samples)


def score(prediction, targets, horizons=DEFAULT_HORIZONS, step_minutes=STEP_MINUTES):
    """Metrics of one set of (…, H) forecasts against targets."""
    accumulator = MetricsAccumulator(np.asarray(targets).shape[-1])
    accumulator.update(prediction, targets)
    return accumulator.report(horizons, step_minutes)


def evaluate(model, panel, split_range, horizons=DEFAULT_HORIZONS, batch_size=64):
    """
    Score ``model`` on every evaluation anchor of ``split_range``.
    """
    config = model.config
    bad = [step for step in horizons if not 1 <= step <= config.horizon]
    if bad:
        raise ConfigurationError(f'reported horizons {bad} fall outside 1..{config.horizon}')
    step_minutes = max(int(panel.step.total_seconds() // 60), 1)
    accumulator = MetricsAccumulator(config.horizon)
    with no_grad():
        for batch in iterate_windows(panel, split_range, config.window, config.horizon, batch_size, config.time_features):
            accumulator.update(model.predict(batch.inputs, batch.time_features), batch.targets)
    report = accumulator.report(horizons, step_minutes)
    logger.info(
        'Evaluated %d anchors on steps [%d, %d): mean MAE %s',
        report.total_samples // max(config.num_nodes, 1), split_range.start, split_range.stop, report.mean_mae,
    )
    return report
