from .config_serializers import (
    RunConfigSerializer,
    parse_variant_token,
)
from .run_serializers import (
    ExperimentRunSerializer,
    ExperimentRunListSerializer,
    RunMetricSerializer,
)

__all__ = [
    'RunConfigSerializer',
    'parse_variant_token',
    'ExperimentRunSerializer',
    'ExperimentRunListSerializer',
    'RunMetricSerializer',
]
