from .run import ExperimentRun, RunMetric

__all__ = [
    'ExperimentRun',
    'RunMetric',
]
