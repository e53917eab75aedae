from .run_views import ExperimentRunViewSet

__all__ = [
    'ExperimentRunViewSet',
]
