"""
Synthetic speed panels with a planted coupling graph.

Nodes are scattered in a small latitude/longitude box and every node is
coupled to its k nearest other nodes. Speed of node i at step t:

    baseline_i - seasonal_i(t mod period) - c_i(t)
        - coupling * sum_j adj[i, j] * c_j(t - lag) + noise * N(0, 1)

clipped at 0, where congestion decays as
c_i(t) = c_i(t - 1) * exp(-1 / decay) + depth * Bernoulli(event_rate).
"""
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ..data.panel import SpeedPanel, save_csv
from ..exceptions import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SynthConfig:
    """
    Generator settings. ``steps_per_day`` is also the seasonal period.
    """
    num_nodes: int = 8
    num_steps: int = 4032
    neighbors: int = 2
    baseline: float = 65.0
    seasonal_amplitude: float = 15.0
    steps_per_day: int = 288
    coupling: float = 0.8
    lag: int = 3
    noise: float = 1.0
    event_rate: float = 0.01
    event_depth: float = 25.0
    event_decay: float = 6.0
    start: str = '2012-03-05T00:00:00'
    step_minutes: int = 5
    seed: int = 0

    def __post_init__(self):
        errors = {}
        for name in ('num_nodes', 'num_steps', 'steps_per_day', 'step_minutes'):
            if getattr(self, name) < 1:
                errors[name] = 'must be positive'
        if not 1 <= self.neighbors < max(self.num_nodes, 2):
            errors['neighbors'] = 'need 1 <= neighbors < num_nodes'
        for name in ('baseline', 'seasonal_amplitude', 'coupling', 'noise', 'event_depth'):
            if getattr(self, name) < 0:
                errors[name] = 'must be non-negative'
        if self.lag < 0:
            errors['lag'] = 'must be non-negative'
        if not 0 <= self.event_rate <= 1:
            errors['event_rate'] = 'must lie in [0, 1]'
        if self.event_decay <= 0:
            errors['event_decay'] = 'must be positive'
        if errors:
            detail = '; '.join(f'{key}: {message}' for key, message in errors.items())
            raise ConfigurationError(f'invalid synthetic configuration: {detail}', errors)

    def as_dict(self):
        return asdict(self)


@dataclass
class SyntheticDataset:
    panel: SpeedPanel
    adjacency: np.ndarray
    congestion: np.ndarray
    config: SynthConfig


def planted_adjacency(coordinates, neighbors):
    """Row i marks the ``neighbors`` nearest other nodes (ties by index)."""
    num_nodes = coordinates.shape[0]
    deltas = coordinates[:, None, :] - coordinates[None, :, :]
    distance = np.sqrt((deltas ** 2).sum(axis=-1))
    np.fill_diagonal(distance, np.inf)
    adjacency = np.zeros((num_nodes, num_nodes))
    for i in range(num_nodes):
        order = np.lexsort((np.arange(num_nodes), distance[i]))
        adjacency[i, order[:neighbors]] = 1.0
    return adjacency


def generate(config):
    """Deterministic panel and ground-truth adjacency for ``config``."""
    rng = np.random.default_rng(config.seed)
    n, steps, period = config.num_nodes, config.num_steps, config.steps_per_day

    coordinates = np.column_stack([
        rng.uniform(34.0, 34.2, size=n),
        rng.uniform(-118.4, -118.2, size=n),
    ])
    adjacency = planted_adjacency(coordinates, config.neighbors)

    baseline = config.baseline * rng.uniform(0.9, 1.1, size=n)
    phase = rng.uniform(-0.05, 0.05, size=n) * 2 * np.pi
    # One period is tabulated and tiled so the seasonal component repeats exactly.
    angle = 2 * np.pi * np.arange(period) / period
    profile = 0.5 * (1 - np.cos(angle[:, None] + phase[None, :]))
    seasonal = config.seasonal_amplitude * profile[np.arange(steps) % period]

    retention = np.exp(-1.0 / config.event_decay)
    shocks = config.event_depth * (rng.random((steps, n)) < config.event_rate)
    congestion = np.zeros((steps, n))
    for t in range(steps):
        previous = congestion[t - 1] if t else 0.0
        congestion[t] = previous * retention + shocks[t]

    lagged = np.zeros_like(congestion)
    if config.lag == 0:
        lagged[:] = congestion
    else:
        lagged[config.lag:] = congestion[:-config.lag]
    spillover = config.coupling * lagged @ adjacency.T

    noise = config.noise * rng.standard_normal((steps, n))
    speeds = np.clip(baseline[None, :] - seasonal - congestion - spillover + noise, 0.0, None)

    timestamps = pd.date_range(config.start, periods=steps, freq=f'{config.step_minutes}min')
    node_ids = tuple(f'n{index:03d}' for index in range(n))
    panel = SpeedPanel(node_ids, timestamps, speeds, coordinates)
    logger.info('Generated synthetic panel %s with %d planted edges', panel, int(adjacency.sum()))
    return SyntheticDataset(panel=panel, adjacency=adjacency, congestion=congestion, config=config)


def write_adjacency(path, adjacency, node_ids):
    frame = pd.DataFrame(adjacency, index=list(node_ids), columns=list(node_ids))
    frame.index.name = 'node_id'
    frame.to_csv(path, float_format='%.17g')
    return Path(path)


def read_adjacency(path, node_ids=None):
    frame = pd.read_csv(path, index_col=0, dtype={'node_id': str})
    frame.index = frame.index.astype(str)
    if node_ids is not None:
        node_ids = [str(node) for node in node_ids]
        missing = [node for node in node_ids if node not in frame.index or node not in frame.columns]
        if missing:
            raise ConfigurationError(f'adjacency file lacks nodes {missing[:5]}')
        frame = frame.loc[node_ids, node_ids]
    return frame.to_numpy(dtype=np.float64)


def write_coordinates(path, coordinates, node_ids):
    frame = pd.DataFrame({
        'node_id': list(node_ids),
        'latitude': coordinates[:, 0],
        'longitude': coordinates[:, 1],
    })
    frame.to_csv(path, index=False, float_format='%.17g')
    return Path(path)


def write_dataset(dataset, output_dir):
    """panel.csv, adjacency.csv and coordinates.csv under ``output_dir``."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    panel = dataset.panel
    return {
        'panel': save_csv(panel, output_dir / 'panel.csv'),
        'adjacency': write_adjacency(output_dir / 'adjacency.csv', dataset.adjacency, panel.node_ids),
        'coordinates': write_coordinates(output_dir / 'coordinates.csv', panel.coordinates, panel.node_ids),
    }
