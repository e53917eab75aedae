# Generated by Django 4.2.7

from django.db import migrations, models
import django.db.models.deletion


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('kind', models.CharField(choices=[('synth', 'Synthesize'), ('train', 'Train'), ('evaluate', 'Evaluate'), ('ablate', 'Ablate'), ('export', 'Export')], help_text='Command that produced the run', max_length=20)),
                ('status', models.CharField(choices=[('running', 'Running'), ('completed', 'Completed'), ('failed', 'Failed')], default='running', help_text='Current run status', max_length=20)),
                ('gate_variant', models.CharField(choices=[('learnable_per_layer', 'Learnable per layer'), ('shared_learnable', 'Shared learnable'), ('learnable_first_layer', 'Learnable first layer'), ('ones', 'Ones'), ('identity', 'Identity'), ('graph_attention', 'Graph attention'), ('identity_last_layer', 'Identity last layer (4I)')], default='learnable_per_layer', help_text='Graph gate variant of the model', max_length=32)),
                ('layers', models.PositiveIntegerField(default=3, help_text='Number of stacked FC-GAGA layers')),
                ('seed', models.BigIntegerField(default=0, help_text='Random seed of the run')),
                ('config_hash', models.CharField(help_text='SHA-256 of the canonical run configuration', max_length=64)),
                ('config', models.JSONField(default=dict, help_text='Validated run configuration')),
                ('output_dir', models.CharField(help_text='Directory holding the run artifacts', max_length=500)),
                ('manifest', models.JSONField(blank=True, default=dict, help_text='Artifact manifest written by the run')),
                ('total_flops', models.BigIntegerField(default=0, help_text='Forward FLOPs counted during training')),
                ('error', models.TextField(blank=True, help_text='One-line diagnostic of a failed run')),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('finished_at', models.DateTimeField(blank=True, null=True)),
            ],
            options={
                'verbose_name': 'Experiment Run',
                'verbose_name_plural': 'Experiment Runs',
                'ordering': ['-created_at'],
                'indexes': [
                    models.Index(fields=['kind', 'status'], name='forecasting_kind_7c1f0e_idx'),
                    models.Index(fields=['config_hash'], name='forecasting_config__4b8d2a_idx'),
                ],
            },
        ),
        migrations.CreateModel(
            name='RunMetric',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('split', models.CharField(default='test', help_text='Data split the metric was computed on', max_length=10)),
                ('variant', models.CharField(blank=True, help_text='Ablation variant token, empty for single-model runs', max_length=64)),
                ('variant_seed', models.BigIntegerField(blank=True, help_text='Seed of the ablation repeat', null=True)),
                ('horizon', models.PositiveIntegerField(help_text='Forecast step (1-based)')),
                ('label', models.CharField(help_text='Horizon label, e.g. 15 min', max_length=20)),
                ('mae', models.FloatField(blank=True, help_text='Masked mean absolute error', null=True)),
                ('mape_pct', models.FloatField(blank=True, help_text='Masked mean absolute percentage error', null=True)),
                ('rmse', models.FloatField(blank=True, help_text='Masked root mean squared error', null=True)),
                ('count', models.PositiveIntegerField(default=0, help_text='Number of evaluated targets')),
                ('run', models.ForeignKey(help_text='Run that reported the metric', on_delete=django.db.models.deletion.CASCADE, related_name='metrics', to='forecasting.experimentrun')),
            ],
            options={
                'verbose_name': 'Run Metric',
                'verbose_name_plural': 'Run Metrics',
                'ordering': ['run', 'variant', 'variant_seed', 'horizon'],
                'indexes': [
                    models.Index(fields=['run', 'horizon'], name='forecasting_run_id_5e9a31_idx'),
                ],
            },
        ),
    ]
