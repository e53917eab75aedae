"""
Training loop: masked MAE plus weight decay through Adam, per-epoch
validation and best-checkpoint retention.
"""
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..data.windows import SplitSpec, sample_epoch, split
from ..engine.flops import FlopCounter
from ..engine.tensor import backward, deterministic
from ..exceptions import TensorError, TrainingDivergedError
from ..network.checkpoint import save_checkpoint
from ..network.fcgaga import FCGAGAModel
from .losses import masked_mae_loss, weight_decay_penalty
from .metrics import DEFAULT_HORIZONS, evaluate
from .optim import ANNEAL_EVERY, ANNEAL_START_EPOCH, BASE_LEARNING_RATE, Adam, lr_schedule

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = 'best_checkpoint.npz'
LOG_NAME = 'training_log.jsonl'


@dataclass(frozen=True)
class TrainingConfig:
    """
    Optimization settings; defaults reproduce 60 epochs of 800 batches of 4.
    """
    epochs: int = 60
    batches_per_epoch: int = 800
    batch_size: int = 4
    weight_decay: float = 1e-5
    learning_rate: float = BASE_LEARNING_RATE
    anneal_start: int = ANNEAL_START_EPOCH
    anneal_every: int = ANNEAL_EVERY
    eval_batch_size: int = 64
    horizons: tuple = DEFAULT_HORIZONS
    deterministic: bool = True
    max_steps: int = None

    @property
    def total_steps(self):
        planned = self.epochs * self.batches_per_epoch
        return planned if self.max_steps is None else min(planned, self.max_steps)


@dataclass
class TrainingResult:
    model: FCGAGAModel
    best_checkpoint: Path
    log_path: Path
    best_report: object
    best_epoch: int
    steps: int
    train_losses: list = field(default_factory=list)
    total_flops: int = 0


def _seeds(seed):
    init, sampler = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(init), np.random.default_rng(sampler)


def _better(candidate, incumbent):
    if candidate is None:
        return False
    return incumbent is None or candidate < incumbent


def train(model_config, panel, training_config, output_dir, seed=0, split_spec=None):
    """
    Train a fresh model on the training split of ``panel``.

    The initial parameters are validated and checkpointed first, so a
    checkpoint exists even if the first step diverges.
    """
    split_spec = split_spec or SplitSpec()
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_path = output_dir / CHECKPOINT_NAME
    log_path = output_dir / LOG_NAME

    ranges = split(panel, split_spec, model_config.window, model_config.horizon)
    init_rng, sampler_rng = _seeds(seed)
    model = FCGAGAModel(model_config, seed=init_rng)
    optimizer = Adam(model.named_parameters(), lr=training_config.learning_rate)

    def validate():
        return evaluate(model, panel, ranges.val, training_config.horizons, training_config.eval_batch_size)

    train_losses = []
    total_flops = 0
    steps = 0
    started = time.perf_counter()
    with deterministic(training_config.deterministic), log_path.open('w') as log:
        def write_record(epoch, lr, epoch_losses, report):
            record = {
                'epoch': epoch,
                'lr': lr,
                'steps': steps,
                'train_loss': float(np.mean(epoch_losses)) if epoch_losses else None,
                'val': report.to_dict()['horizons'],
                'val_mean_mae': report.mean_mae,
                'wall_time': round(time.perf_counter() - started, 3),
                'cumulative_flops': total_flops,
            }
            log.write(json.dumps(record) + '\n')
            log.flush()

        best_report = validate()
        best_epoch = 0
        save_checkpoint(checkpoint_path, model, optimizer, {'epoch': 0, 'seed': seed})
        write_record(0, training_config.learning_rate, [], best_report)

        for epoch in range(1, training_config.epochs + 1):
            if steps >= training_config.total_steps:
                break
            optimizer.lr = lr_schedule(
                epoch, training_config.learning_rate, training_config.anneal_start, training_config.anneal_every,
            )
            epoch_losses = []
            batches = sample_epoch(
                panel, ranges.train, sampler_rng, training_config.batches_per_epoch, training_config.batch_size,
                model_config.window, model_config.horizon, model_config.time_features,
            )
            for batch in batches:
                if steps >= training_config.total_steps:
                    break
                try:
                    with FlopCounter() as counter:
                        output = model.forward(batch.inputs, batch.time_features)
                        data_loss = masked_mae_loss(output.forecast, batch.targets)
                        loss = data_loss + weight_decay_penalty(model.params, training_config.weight_decay)
                    optimizer.zero_grad()
                    backward(loss)
                    optimizer.step()
                except TensorError as exc:
                    logger.error('Training diverged at step %d: %s', steps + 1, exc)
                    raise TrainingDivergedError(
                        f'non-finite values at step {steps + 1}: {exc}; last good checkpoint kept at {checkpoint_path}',
                        step=steps + 1,
                        checkpoint_path=checkpoint_path,
                    ) from exc
                steps += 1
                total_flops += counter.total
                epoch_losses.append(data_loss.item())
                train_losses.append(data_loss.item())

            report = validate()
            if _better(report.mean_mae, best_report.mean_mae):
                best_report, best_epoch = report, epoch
                save_checkpoint(checkpoint_path, model, optimizer, {'epoch': epoch, 'seed': seed})
            write_record(epoch, optimizer.lr, epoch_losses, report)
            logger.info(
                'epoch %d: lr %.6g, train loss %.4f, val mean MAE %s',
                epoch, optimizer.lr, np.mean(epoch_losses) if epoch_losses else float('nan'), report.mean_mae,
            )

    return TrainingResult(
        model=model,
        best_checkpoint=checkpoint_path,
        log_path=log_path,
        best_report=best_report,
        best_epoch=best_epoch,
        steps=steps,
        train_losses=train_losses,
        total_flops=total_flops,
    )
