from django_filters.rest_framework import DjangoFilterBackend
from rest_framework import viewsets
from rest_framework.decorators import action
from rest_framework.filters import OrderingFilter
from rest_framework.permissions import IsAuthenticated
from rest_framework.response import Response

from ..models import ExperimentRun
from ..serializers import (
    ExperimentRunListSerializer,
    ExperimentRunSerializer,
    RunMetricSerializer,
)


class ExperimentRunViewSet(viewsets.ReadOnlyModelViewSet):
    """
    Read-only browsing of recorded runs.

    list: GET /api/runs/
    retrieve: GET /api/runs/{id}/
    metrics: GET /api/runs/{id}/metrics/
    """
    queryset = ExperimentRun.objects.prefetch_related('metrics')
    serializer_class = ExperimentRunSerializer
    permission_classes = [IsAuthenticated]
    filter_backends = [DjangoFilterBackend, OrderingFilter]
    filterset_fields = ['kind', 'status', 'gate_variant', 'seed', 'config_hash']
    ordering_fields = ['created_at', 'seed', 'total_flops']
    ordering = ['-created_at']

    def get_serializer_class(self):
        if self.action == 'list':
            return ExperimentRunListSerializer
        return ExperimentRunSerializer

    @action(detail=True, methods=['get'])
    def metrics(self, request, pk=None):
        """Metrics reported by the run, optionally filtered by split or variant."""
        queryset = self.get_object().metrics.all()
        split = request.query_params.get('split')
        if split:
            queryset = queryset.filter(split=split)
        variant = request.query_params.get('variant')
        if variant is not None:
            queryset = queryset.filter(variant=variant)
        serializer = RunMetricSerializer(queryset, many=True)
        return Response(serializer.data)
