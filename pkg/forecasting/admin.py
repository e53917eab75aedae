from django.contrib import admin

from .models import ExperimentRun, RunMetric


class RunMetricInline(admin.TabularInline):
    model = RunMetric
    extra = 0
    fields = ['split', 'variant', 'variant_seed', 'horizon', 'label', 'mae', 'mape_pct', 'rmse', 'count']
    readonly_fields = fields
    can_delete = False


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    """Admin for recorded runs."""
    list_display = [
        'id', 'kind', 'status', 'gate_variant', 'layers', 'seed',
        'total_flops', 'created_at', 'finished_at'
    ]
    list_filter = ['kind', 'status', 'gate_variant', 'created_at']
    search_fields = ['config_hash', 'output_dir', 'error']
    ordering = ['-created_at']
    readonly_fields = ['config_hash', 'config', 'manifest', 'total_flops', 'created_at', 'finished_at']
    inlines = [RunMetricInline]

    fieldsets = (
        (None, {'fields': ('kind', 'status', 'error')}),
        ('Model', {'fields': ('gate_variant', 'layers', 'seed')}),
        ('Artifacts', {
            'fields': ('output_dir', 'config_hash', 'config', 'manifest'),
            'classes': ('collapse',)
        }),
        ('Cost', {'fields': ('total_flops', 'created_at', 'finished_at')}),
    )


@admin.register(RunMetric)
class RunMetricAdmin(admin.ModelAdmin):
    """Admin for per-horizon run metrics."""
    list_display = ['run', 'split', 'variant', 'variant_seed', 'label', 'mae', 'mape_pct', 'rmse', 'count']
    list_filter = ['split', 'horizon']
    search_fields = ['variant']
    ordering = ['run', 'variant', 'horizon']
