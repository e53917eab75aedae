from django.db import models
from django.utils.translation import gettext_lazy as _

from ..network.config import GateVariant


class ExperimentRun(models.Model):
    """
    One invocation of a forecasting command and the artifacts it produced.
    """
    class RunKind(models.TextChoices):
        SYNTH = 'synth', _('Synthesize')
        TRAIN = 'train', _('Train')
        EVALUATE = 'evaluate', _('Evaluate')
        ABLATE = 'ablate', _('Ablate')
        EXPORT = 'export', _('Export')

    class RunStatus(models.TextChoices):
        RUNNING = 'running', _('Running')
        COMPLETED = 'completed', _('Completed')
        FAILED = 'failed', _('Failed')

    kind = models.CharField(
        max_length=20,
        choices=RunKind.choices,
        help_text=_('Command that produced the run')
    )

    status = models.CharField(
        max_length=20,
        choices=RunStatus.choices,
        default=RunStatus.RUNNING,
        help_text=_('Current run status')
    )

    gate_variant = models.CharField(
        max_length=32,
        choices=GateVariant.choices,
        default=GateVariant.LEARNABLE_PER_LAYER,
        help_text=_('Graph gate variant of the model')
    )

    layers = models.PositiveIntegerField(
        default=3,
        help_text=_('Number of stacked FC-GAGA layers')
    )

    seed = models.BigIntegerField(
        default=0,
        help_text=_('Random seed of the run')
    )

    config_hash = models.CharField(
        max_length=64,
        help_text=_('SHA-256 of the canonical run configuration')
    )

    config = models.JSONField(
        default=dict,
        help_text=_('Validated run configuration')
    )

    output_dir = models.CharField(
        max_length=500,
        help_text=_('Directory holding the run artifacts')
    )

    manifest = models.JSONField(
        default=dict,
        blank=True,
        help_text=_('Artifact manifest written by the run')
    )

    total_flops = models.BigIntegerField(
        default=0,
        help_text=_('Forward FLOPs counted during training')
    )

    error = models.TextField(
        blank=True,
        help_text=_('One-line diagnostic of a failed run')
    )

    created_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        verbose_name = _('Experiment Run')
        verbose_name_plural = _('Experiment Runs')
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['kind', 'status'], name='forecasting_kind_7c1f0e_idx'),
            models.Index(fields=['config_hash'], name='forecasting_config__4b8d2a_idx'),
        ]

    def __str__(self):
        return f'{self.kind} #{self.pk} ({self.status})'

    @property
    def duration(self):
        if self.finished_at is None:
            return None
        return (self.finished_at - self.created_at).total_seconds()


class RunMetric(models.Model):
    """
    Masked accuracy at one forecast step, as reported by a run.
    """
    run = models.ForeignKey(
        ExperimentRun,
        on_delete=models.CASCADE,
        related_name='metrics',
        help_text=_('Run that reported the metric')
    )

    split = models.CharField(
        max_length=10,
        default='test',
        help_text=_('Data split the metric was computed on')
    )

    variant = models.CharField(
        max_length=64,
        blank=True,
        help_text=_('Ablation variant token, empty for single-model runs')
    )

    variant_seed = models.BigIntegerField(
        null=True,
        blank=True,
        help_text=_('Seed of the ablation repeat')
    )

    horizon = models.PositiveIntegerField(
        help_text=_('Forecast step (1-based)')
    )

    label = models.CharField(
        max_length=20,
        help_text=_('Horizon label, e.g. 15 min')
    )

    mae = models.FloatField(null=True, blank=True, help_text=_('Masked mean absolute error'))
    mape_pct = models.FloatField(null=True, blank=True, help_text=_('Masked mean absolute percentage error'))
    rmse = models.FloatField(null=True, blank=True, help_text=_('Masked root mean squared error'))
    count = models.PositiveIntegerField(default=0, help_text=_('Number of evaluated targets'))

    class Meta:
        verbose_name = _('Run Metric')
        verbose_name_plural = _('Run Metrics')
        ordering = ['run', 'variant', 'variant_seed', 'horizon']
        indexes = [
            models.Index(fields=['run', 'horizon'], name='forecasting_run_id_5e9a31_idx'),
        ]

    def __str__(self):
        return f'{self.run_id} {self.variant or "model"} {self.label}: MAE {self.mae}'
