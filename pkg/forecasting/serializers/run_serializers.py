from rest_framework import serializers

from ..models import ExperimentRun, RunMetric


class RunMetricSerializer(serializers.ModelSerializer):
    """Metrics of one horizon step."""

    class Meta:
        model = RunMetric
        fields = [
            'id', 'run', 'split', 'variant', 'variant_seed', 'horizon',
            'label', 'mae', 'mape_pct', 'rmse', 'count'
        ]
        read_only_fields = fields


class ExperimentRunListSerializer(serializers.ModelSerializer):
    """Compact run listing."""

    kind_display = serializers.CharField(source='get_kind_display', read_only=True)
    status_display = serializers.CharField(source='get_status_display', read_only=True)

    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'kind', 'kind_display', 'status', 'status_display',
            'gate_variant', 'layers', 'seed', 'config_hash', 'created_at'
        ]
        read_only_fields = fields


class ExperimentRunSerializer(serializers.ModelSerializer):
    """Full run record including configuration, manifest and metrics."""

    kind_display = serializers.CharField(source='get_kind_display', read_only=True)
    status_display = serializers.CharField(source='get_status_display', read_only=True)
    duration = serializers.FloatField(read_only=True)
    metrics = RunMetricSerializer(many=True, read_only=True)

    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'kind', 'kind_display', 'status', 'status_display',
            'gate_variant', 'layers', 'seed', 'config_hash', 'config',
            'output_dir', 'manifest', 'total_flops', 'error', 'created_at',
            'finished_at', 'duration', 'metrics'
        ]
        read_only_fields = fields
