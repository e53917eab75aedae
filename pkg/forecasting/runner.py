"""
Command implementations shared by the management commands: each one reads
a ``RunConfig``, writes its artifacts plus ``manifest.json`` under an output
directory and records itself in the run registry.
"""
import hashlib
import json
import logging
import platform
import re
from pathlib import Path

import django
import numpy as np
import pandas as pd
import rest_framework
from django.conf import settings
from django.db import DatabaseError
from django.utils import timezone

from .data.panel import load_coordinates, load_panel
from .data.windows import build_batch, evaluation_anchors, split
from .engine.tensor import deterministic, no_grad
from .exceptions import CheckpointMismatchError, ConfigurationError, MissingInputError
from .models import ExperimentRun, RunMetric
from .network.checkpoint import load_checkpoint
from .network.export import decomposition_frame, neighbor_ranking_frame, write_weight_csv
from .synthetic.analysis import neighbor_rank_score, permutation_test, rank_profile_frame
from .synthetic.generator import generate, read_adjacency, write_dataset
from .training.metrics import evaluate
from .training.trainer import train

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
CONFIG_NAME = 'config.json'
METRICS_NAME = 'metrics.csv'
METRICS_JSON_NAME = 'metrics.json'
ABLATION_NAME = 'ablation.csv'
ABLATION_RUNS_NAME = 'ablation_runs.csv'
METRIC_COLUMNS = ['horizon', 'label', 'mae', 'mape_pct', 'rmse', 'count']


def file_sha256(path):
    digest = hashlib.sha256()
    with Path(path).open('rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def library_versions():
    return {
        'python': platform.python_version(),
        'numpy': np.__version__,
        'pandas': pd.__version__,
        'django': django.get_version(),
        'djangorestframework': rest_framework.VERSION,
    }


def write_manifest(output_dir, kind, config, seed, artifacts):
    """
    List every artifact (path relative to ``output_dir`` and sha256) next to
    the config hash, seed and library versions.
    """
    output_dir = Path(output_dir)
    entries = {}
    for name, path in sorted(artifacts.items()):
        path = Path(path)
        entries[name] = {
            'path': path.relative_to(output_dir).as_posix() if path.is_relative_to(output_dir) else str(path),
            'sha256': file_sha256(path),
        }
    manifest = {
        'kind': kind,
        'config_hash': config.config_hash(),
        'seed': seed,
        'versions': library_versions(),
        'artifacts': entries,
    }
    (output_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + '\n')
    return manifest


def write_metrics(report, output_dir, prefix=''):
    output_dir = Path(output_dir)
    csv_path = output_dir / f'{prefix}{METRICS_NAME}'
    json_path = output_dir / f'{prefix}{METRICS_JSON_NAME}'
    pd.DataFrame(report.rows(), columns=METRIC_COLUMNS).to_csv(csv_path, index=False)
    json_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + '\n')
    return {csv_path.name: csv_path, json_path.name: json_path}


class RunRecorder:
    """
    Registry bookkeeping for one command: RUNNING on entry, COMPLETED or
    FAILED on exit. Database problems are logged and never fail the run.
    """

    def __init__(self, kind, config, output_dir, gate_variant=None, layers=None):
        self.kind = kind
        self.config = config
        self.output_dir = Path(output_dir)
        self.gate_variant = gate_variant or config.gate_variant
        self.layers = layers or config.layers
        self.enabled = settings.FCGAGA.get('RECORD_RUNS', True)
        self.run = None
        self.finished = False

    def _guard(self, action, *args, **kwargs):
        if not self.enabled:
            return None
        try:
            return action(*args, **kwargs)
        except DatabaseError as exc:
            logger.warning('Run registry unavailable, continuing without it: %s', exc)
            self.enabled = False
            return None

    def __enter__(self):
        self.run = self._guard(
            ExperimentRun.objects.create,
            kind=self.kind,
            gate_variant=self.gate_variant,
            layers=self.layers,
            seed=self.config.seed,
            config_hash=self.config.config_hash(),
            config=self.config.to_dict(),
            output_dir=str(self.output_dir),
        )
        return self

    def add_metrics(self, report, split_name='test', variant='', variant_seed=None):
        if self.run is None:
            return
        rows = [
            RunMetric(
                run=self.run,
                split=split_name,
                variant=variant,
                variant_seed=variant_seed,
                horizon=item.step,
                label=item.label,
                mae=item.mae,
                mape_pct=item.mape_pct,
                rmse=item.rmse,
                count=item.count,
            )
            for item in report.horizons
        ]
        self._guard(RunMetric.objects.bulk_create, rows)

    def complete(self, manifest, total_flops=0):
        self.finished = True
        if self.run is None:
            return
        self.run.status = ExperimentRun.RunStatus.COMPLETED
        self.run.manifest = manifest
        self.run.total_flops = int(total_flops)
        self.run.finished_at = timezone.now()
        self._guard(self.run.save)

    def __exit__(self, exc_type, exc, traceback):
        if self.run is None:
            return False
        if exc is not None:
            self.run.status = ExperimentRun.RunStatus.FAILED
            self.run.error = (str(exc).splitlines() or [exc_type.__name__])[0]
            self.run.finished_at = timezone.now()
            self._guard(self.run.save)
        elif not self.finished:
            self.complete({})
        return False


def _prepare_output(config, output_dir=None):
    output_dir = Path(output_dir or config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    config.dump(output_dir / CONFIG_NAME)
    return output_dir


def load_dataset(config):
    if not config.dataset_path:
        raise MissingInputError('dataset_path is not configured')
    panel = load_panel(config.dataset_path, config.dataset_format)
    if config.coordinates_path:
        panel = panel.with_coordinates(load_coordinates(config.coordinates_path, panel.node_ids))
    return panel


def _check_compatible(model_config, panel, config):
    """The checkpoint must read the data the way the run configuration does."""
    expected = {
        'num_nodes': panel.num_nodes,
        'window': config.window,
        'horizon': config.horizon,
        'time_features': config.time_features,
    }
    found = {
        'num_nodes': model_config.num_nodes,
        'window': model_config.window,
        'horizon': model_config.horizon,
        'time_features': model_config.time_features,
    }
    differing = [f'{key}: checkpoint {found[key]!r}, run {value!r}' for key, value in expected.items() if found[key] != value]
    if differing:
        raise CheckpointMismatchError('checkpoint does not fit this run: ' + '; '.join(differing))


def run_synth(config, output_dir=None):
    """Generate a planted-coupling dataset and write it in the panel CSV schema."""
    output_dir = _prepare_output(config, output_dir)
    with RunRecorder(ExperimentRun.RunKind.SYNTH, config, output_dir) as recorder:
        dataset = generate(config.synth_config())
        artifacts = write_dataset(dataset, output_dir)
        artifacts['config'] = output_dir / CONFIG_NAME
        manifest = write_manifest(output_dir, ExperimentRun.RunKind.SYNTH, config, config.seed, artifacts)
        recorder.complete(manifest)
    logger.info('Wrote synthetic dataset to %s', output_dir)
    return artifacts


def _train_and_test(config, panel, model_config, output_dir, seed):
    result = train(model_config, panel, config.training_config(), output_dir, seed=seed, split_spec=config.split_spec())
    checkpoint = load_checkpoint(result.best_checkpoint)
    ranges = split(panel, config.split_spec(), model_config.window, model_config.horizon)
    with deterministic(config.deterministic):
        report = evaluate(checkpoint.model, panel, ranges.test, config.horizons, config.eval_batch_size)
    return result, report


def run_train(config, output_dir=None):
    """
    Train one model, then score its best checkpoint on the test split.
    """
    output_dir = _prepare_output(config, output_dir)
    panel = load_dataset(config)
    model_config = config.model_config(panel.num_nodes)
    with RunRecorder(ExperimentRun.RunKind.TRAIN, config, output_dir) as recorder:
        result, report = _train_and_test(config, panel, model_config, output_dir, config.seed)
        artifacts = {
            'config': output_dir / CONFIG_NAME,
            'checkpoint': result.best_checkpoint,
            'training_log': result.log_path,
        }
        artifacts.update(write_metrics(report, output_dir))
        manifest = write_manifest(output_dir, ExperimentRun.RunKind.TRAIN, config, config.seed, artifacts)
        recorder.add_metrics(result.best_report, split_name='val')
        recorder.add_metrics(report, split_name='test')
        recorder.complete(manifest, result.total_flops)
    logger.info('Training finished after %d steps; test mean MAE %s', result.steps, report.mean_mae)
    return result, report


def run_evaluate(config, checkpoint_path, output_dir=None, split_name='test'):
    """Score a checkpoint on one split of the configured dataset."""
    output_dir = _prepare_output(config, output_dir)
    panel = load_dataset(config)
    checkpoint = load_checkpoint(checkpoint_path)
    model = checkpoint.model
    _check_compatible(model.config, panel, config)
    with RunRecorder(
        ExperimentRun.RunKind.EVALUATE, config, output_dir,
        gate_variant=model.config.gate_variant, layers=model.config.layers,
    ) as recorder:
        ranges = split(panel, config.split_spec(), model.config.window, model.config.horizon)
        with deterministic(config.deterministic):
            report = evaluate(model, panel, ranges.by_name(split_name), config.horizons, config.eval_batch_size)
        artifacts = {'config': output_dir / CONFIG_NAME}
        artifacts.update(write_metrics(report, output_dir))
        manifest = write_manifest(output_dir, ExperimentRun.RunKind.EVALUATE, config, config.seed, artifacts)
        recorder.add_metrics(report, split_name=split_name)
        recorder.complete(manifest)
    return report


def variant_directory(token):
    return re.sub(r'[^A-Za-z0-9_]+', '_', token).strip('_')


def _ablation_row(spec, model_config, seed, result, report):
    row = {
        'variant': spec.token,
        'gate_variant': model_config.gate_variant,
        'layers': model_config.layers,
        'time_gate': model_config.use_time_gate,
        'seed': seed,
        'mean_mae': report.mean_mae,
        'steps': result.steps,
        'total_flops': result.total_flops,
    }
    for item in report.horizons:
        row[f'mae_{item.step}'] = item.mae
        row[f'mape_pct_{item.step}'] = item.mape_pct
        row[f'rmse_{item.step}'] = item.rmse
    return row


def run_ablate(config, output_dir=None):
    """
    Train every variant for ``ablation_seeds`` seeds and consolidate the
    test metrics: one row per (variant, seed) in ablation_runs.csv and the
    seed means per variant in ablation.csv.
    """
    output_dir = _prepare_output(config, output_dir)
    panel = load_dataset(config)
    specs = config.variant_specs()
    seeds = [config.seed + offset for offset in range(config.ablation_seeds)]
    rows = []
    artifacts = {'config': output_dir / CONFIG_NAME}
    with RunRecorder(ExperimentRun.RunKind.ABLATE, config, output_dir) as recorder:
        total_flops = 0
        for spec in specs:
            model_config = config.model_config(panel.num_nodes, spec)
            for seed in seeds:
                run_dir = output_dir / variant_directory(spec.token) / f'seed_{seed}'
                logger.info('Ablation %s, seed %d -> %s', spec.token, seed, run_dir)
                result, report = _train_and_test(config, panel, model_config, run_dir, seed)
                outputs = {
                    result.best_checkpoint.name: result.best_checkpoint,
                    result.log_path.name: result.log_path,
                    **write_metrics(report, run_dir),
                }
                prefix = f'{variant_directory(spec.token)}/seed_{seed}'
                artifacts.update({f'{prefix}/{name}': path for name, path in outputs.items()})
                rows.append(_ablation_row(spec, model_config, seed, result, report))
                recorder.add_metrics(report, variant=spec.token, variant_seed=seed)
                total_flops += result.total_flops

        runs = pd.DataFrame(rows)
        runs.to_csv(output_dir / ABLATION_RUNS_NAME, index=False)
        metric_columns = [column for column in runs.columns if column.startswith(('mae_', 'mape_pct_', 'rmse_'))]
        summary = (
            runs.groupby(['variant', 'gate_variant', 'layers', 'time_gate'], sort=False)[['mean_mae', *metric_columns]]
            .mean()
            .reset_index()
        )
        summary.insert(4, 'seeds', len(seeds))
        summary.to_csv(output_dir / ABLATION_NAME, index=False)
        artifacts['ablation'] = output_dir / ABLATION_NAME
        artifacts['ablation_runs'] = output_dir / ABLATION_RUNS_NAME
        manifest = write_manifest(output_dir, ExperimentRun.RunKind.ABLATE, config, config.seed, artifacts)
        recorder.complete(manifest, total_flops)
    return summary


def _export_series(model, panel, config, output_dir):
    ranges = split(panel, config.split_spec(), model.config.window, model.config.horizon)
    anchors = np.asarray(evaluation_anchors(ranges.test, model.config.window, model.config.horizon))
    anchors = anchors[:config.decomposition_anchors]
    frames = []
    positive = np.zeros(model.config.layers)
    with no_grad(), deterministic(config.deterministic):
        for offset in range(0, anchors.size, config.eval_batch_size):
            batch = build_batch(
                panel, anchors[offset:offset + config.eval_batch_size],
                model.config.window, model.config.horizon, model.config.time_features,
            )
            output = model.forward(batch.inputs, batch.time_features)
            frames.append(decomposition_frame(output, batch.anchors, panel.node_ids))
            positive += [np.sum(gate.values > 0) for gate in output.gate_outputs]
    decomposition_path = output_dir / 'decomposition.csv'
    pd.concat(frames, ignore_index=True).to_csv(decomposition_path, index=False, float_format='%.17g')
    sparsity_path = output_dir / 'gate_sparsity.csv'
    entries = anchors.size * panel.num_nodes * panel.num_nodes * model.config.window
    pd.DataFrame({
        'layer': np.arange(1, model.config.layers + 1),
        'positive_fraction': positive / entries,
    }).to_csv(sparsity_path, index=False, float_format='%.17g')
    return {'decomposition': decomposition_path, 'gate_sparsity': sparsity_path}


def run_export(config, checkpoint_path, output_dir=None):
    """
    Per-layer gate weights, neighbor rankings and rank profile from a
    checkpoint; with a dataset, also the per-layer forecast decomposition
    and gate sparsity; with an adjacency, neighbor rank scores and their
    permutation test.
    """
    output_dir = _prepare_output(config, output_dir)
    checkpoint = load_checkpoint(checkpoint_path)
    model = checkpoint.model
    panel = load_dataset(config) if config.dataset_path else None
    if panel is not None:
        _check_compatible(model.config, panel, config)
        node_ids = panel.node_ids
    else:
        node_ids = tuple(str(index) for index in range(model.config.num_nodes))

    with RunRecorder(
        ExperimentRun.RunKind.EXPORT, config, output_dir,
        gate_variant=model.config.gate_variant, layers=model.config.layers,
    ) as recorder:
        artifacts = {'config': output_dir / CONFIG_NAME}
        weight_layers = model.edge_weight_matrices()
        for layer, weights in enumerate(weight_layers, start=1):
            artifacts[f'layer_{layer}_weights'] = write_weight_csv(
                output_dir / f'layer_{layer}_weights.csv', weights, node_ids,
            )
        rankings_path = output_dir / 'neighbor_rankings.csv'
        neighbor_ranking_frame(weight_layers, node_ids).to_csv(rankings_path, index=False, float_format='%.17g')
        artifacts['neighbor_rankings'] = rankings_path

        coordinates = panel.coordinates if panel is not None else None
        profile_path = output_dir / 'weight_rank_profile.csv'
        rank_profile_frame(weight_layers, coordinates).to_csv(profile_path, index=False, float_format='%.17g')
        artifacts['weight_rank_profile'] = profile_path

        if panel is not None:
            artifacts.update(_export_series(model, panel, config, output_dir))
        else:
            logger.warning('No dataset configured; skipping decomposition and gate sparsity export')

        if config.adjacency_path:
            if panel is None:
                raise ConfigurationError('adjacency_path needs dataset_path to align node ids')
            adjacency = read_adjacency(config.adjacency_path, node_ids)
            scores = neighbor_rank_score(weight_layers, adjacency, coordinates)
            tests = permutation_test(weight_layers, adjacency, config.n_permutations, rng=config.seed)
            scores_path = output_dir / 'neighbor_rank_scores.csv'
            pd.DataFrame([
                {
                    'layer': item.layer,
                    'score': item.score,
                    'null_95th_percentile': test.percentile_95,
                    'p_value': test.p_value,
                    'significant': test.significant,
                    'permutations': config.n_permutations,
                }
                for item, test in zip(scores, tests)
            ]).to_csv(scores_path, index=False, float_format='%.17g')
            artifacts['neighbor_rank_scores'] = scores_path

        manifest = write_manifest(output_dir, ExperimentRun.RunKind.EXPORT, config, config.seed, artifacts)
        recorder.complete(manifest)
    logger.info('Exported %d artifacts to %s', len(artifacts), output_dir)
    return artifacts
