"""
Checkpoint container: one ``.npz`` archive.

    meta              JSON text: format version, model config, optimizer
                      scalars, free-form extras
    param/<name>      every parameter tensor
    adam_m/<name>     Adam first moments (optional)
    adam_v/<name>     Adam second moments (optional)
"""
import json
import logging
from pathlib import Path

import numpy as np

from ..exceptions import CheckpointMismatchError, MissingInputError
from .config import ModelConfig
from .fcgaga import FCGAGAModel
from .params import ModelParams

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(path, model, optimizer=None, extra=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        'format_version': FORMAT_VERSION,
        'model_config': model.config.as_dict(),
        'optimizer': optimizer.state.scalars() if optimizer is not None else None,
        'extra': extra or {},
    }
    arrays = {'meta': np.array(json.dumps(meta, sort_keys=True))}
    for name, tensor in model.named_parameters():
        arrays[f'param/{name}'] = tensor.values
    if optimizer is not None:
        for name in optimizer.params:
            arrays[f'adam_m/{name}'] = optimizer.state.m[name]
            arrays[f'adam_v/{name}'] = optimizer.state.v[name]
    # np.savez appends .npz to bare names; write through a handle to keep the path.
    with path.open('wb') as handle:
        np.savez(handle, **arrays)
    logger.debug('Saved checkpoint %s (%d arrays)', path, len(arrays))
    return path


class Checkpoint:
    """
    A loaded checkpoint: its model, metadata and raw optimizer moments.
    """

    def __init__(self, model, meta, moments):
        self.model = model
        self.meta = meta
        self.moments = moments

    @property
    def config(self):
        return self.model.config

    @property
    def extra(self):
        return self.meta.get('extra', {})

    def restore_optimizer(self, optimizer):
        if self.meta.get('optimizer') is None:
            raise CheckpointMismatchError('checkpoint carries no optimizer state')
        optimizer.load_state(self.meta['optimizer'], self.moments['adam_m'], self.moments['adam_v'])
        return optimizer


def load_checkpoint(path, expected_config=None):
    """
    Rebuild the model stored at ``path``. When ``expected_config`` is given
    it must equal the stored configuration.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingInputError(f'checkpoint not found: {path}')
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointMismatchError(f'{path} is not a readable checkpoint: {exc}') from None
    with archive:
        if 'meta' not in archive.files:
            raise CheckpointMismatchError(f'{path} has no metadata record')
        meta = json.loads(str(archive['meta']))
        if meta.get('format_version') != FORMAT_VERSION:
            raise CheckpointMismatchError(f'unsupported checkpoint format {meta.get("format_version")!r}')
        config = ModelConfig.from_dict(meta['model_config'])
        if expected_config is not None and expected_config != config:
            raise CheckpointMismatchError(
                'checkpoint configuration does not match: '
                + ', '.join(
                    f'{key}={value!r} (checkpoint {config.as_dict()[key]!r})'
                    for key, value in expected_config.as_dict().items()
                    if config.as_dict()[key] != value
                )
            )
        stored = {name[len('param/'):]: archive[name] for name in archive.files if name.startswith('param/')}
        moments = {
            prefix: {name[len(prefix) + 1:]: archive[name] for name in archive.files if name.startswith(prefix + '/')}
            for prefix in ('adam_m', 'adam_v')
        }

    params = ModelParams.init(config, 0)
    expected = dict(params.named_parameters())
    if set(stored) != set(expected):
        missing = sorted(set(expected) - set(stored))
        unexpected = sorted(set(stored) - set(expected))
        raise CheckpointMismatchError(f'parameter names differ: missing {missing[:3]}, unexpected {unexpected[:3]}')
    for name, tensor in expected.items():
        if stored[name].shape != tensor.shape:
            raise CheckpointMismatchError(f'{name}: stored shape {stored[name].shape} != {tensor.shape}')
        tensor.values[...] = stored[name]
    return Checkpoint(FCGAGAModel(config, params), meta, moments)
