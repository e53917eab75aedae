"""
Oracles scoring learned gate weights against a planted adjacency.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..exceptions import ShapeError
from ..network.export import normalized_weights, rank_neighbors

logger = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0


def haversine_km(a, b):
    lat1, lon1 = np.radians(a[..., 0]), np.radians(a[..., 1])
    lat2, lon2 = np.radians(b[..., 0]), np.radians(b[..., 1])
    h = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(h))


@dataclass
class NeighborRankScore:
    """
    Ranking quality of one layer's weights.

    ``score`` is the mean over nodes of the mean filtered reciprocal rank of
    their true neighbors: a neighbor ranked below m non-neighbors counts
    1 / (1 + m), so a perfect ranking scores 1.0. A neighbor tied with t
    non-neighbors gets the mean of its t + 1 possible reciprocal ranks, which
    is the score a uniformly random order of the tie would have in
    expectation; all-equal weights therefore score the random baseline
    H(N - k) / (N - k) for a node with k true neighbors.
    ``weight_profile[r]`` is the mean of W[i, j] / W[i, i] over the node
    ranked r + 1 for every i; ``distance_profile`` is the same for distances
    when coordinates exist.
    """
    layer: int
    score: float
    weight_profile: np.ndarray
    distance_profile: np.ndarray = None


def _comparison_counts(ratios):
    """For every (i, j): how many l != i rank strictly above j in row i, and how many other l tie with j."""
    num_nodes = ratios.shape[0]
    others = ~np.eye(num_nodes, dtype=bool)[:, None, :]
    greater = ((ratios[:, None, :] > ratios[:, :, None]) & others).sum(axis=-1)
    equal = ((ratios[:, None, :] == ratios[:, :, None]) & others).sum(axis=-1) - 1
    return greater, equal


def _ranking_score(ratios, adjacency, counts=None):
    num_nodes = ratios.shape[0]
    greater, equal = counts if counts is not None else _comparison_counts(ratios)
    harmonic = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, num_nodes + 1))])
    per_node = []
    for i in range(num_nodes):
        neighbors = np.flatnonzero(adjacency[i] > 0)
        neighbors = neighbors[neighbors != i]
        if neighbors.size == 0:
            continue
        values = ratios[i, neighbors]
        # non-neighbors only: drop the true neighbors from both counts
        above = greater[i, neighbors] - (values[None, :] > values[:, None]).sum(axis=1)
        tied = equal[i, neighbors] - ((values[None, :] == values[:, None]).sum(axis=1) - 1)
        per_node.append(np.mean((harmonic[above + tied + 1] - harmonic[above]) / (tied + 1)))
    return float(np.mean(per_node)) if per_node else float('nan')


def neighbor_rank_score(weight_layers, adjacency, coordinates=None):
    """Score every layer's weight matrix against ``adjacency``."""
    adjacency = np.asarray(adjacency, dtype=np.float64)
    results = []
    for layer, weights in enumerate(weight_layers, start=1):
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != adjacency.shape or weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise ShapeError('neighbor_rank_score', weights.shape, adjacency.shape)
        order = rank_neighbors(weights)
        ratios = normalized_weights(weights)
        rows = np.arange(weights.shape[0])[:, None]
        distance_profile = None
        if coordinates is not None:
            coordinates = np.asarray(coordinates, dtype=np.float64)
            distances = haversine_km(coordinates[:, None, :], coordinates[None, :, :])
            distance_profile = distances[rows, order].mean(axis=0)
        results.append(NeighborRankScore(
            layer=layer,
            score=_ranking_score(ratios, adjacency),
            weight_profile=ratios[rows, order].mean(axis=0),
            distance_profile=distance_profile,
        ))
    return results


@dataclass
class PermutationResult:
    layer: int
    observed: float
    null_scores: np.ndarray = field(repr=False)
    percentile_95: float = None
    p_value: float = None

    @property
    def significant(self):
        return self.observed > self.percentile_95


def permute_adjacency(adjacency, permutation):
    """Relabel nodes: entry (i, j) moves to (p^-1(i), p^-1(j))."""
    return adjacency[permutation][:, permutation]


def permutation_test(weight_layers, adjacency, n_permutations=1000, rng=None):
    """
    Compare each layer's score with scores against randomly relabelled
    copies of ``adjacency``.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    adjacency = np.asarray(adjacency, dtype=np.float64)
    permutations = [rng.permutation(adjacency.shape[0]) for _ in range(n_permutations)]
    results = []
    for layer, weights in enumerate(weight_layers, start=1):
        ratios = normalized_weights(weights)
        counts = _comparison_counts(ratios)
        observed = _ranking_score(ratios, adjacency, counts)
        null = np.array([_ranking_score(ratios, permute_adjacency(adjacency, p), counts) for p in permutations])
        results.append(PermutationResult(
            layer=layer,
            observed=observed,
            null_scores=null,
            percentile_95=float(np.percentile(null, 95)),
            p_value=float((1 + np.sum(null >= observed)) / (1 + n_permutations)),
        ))
        logger.info('layer %d: neighbor rank score %.4f, null 95th percentile %.4f', layer, observed, results[-1].percentile_95)
    return results


def lagged_cross_correlation(panel, i, j, lag):
    """Pearson correlation of node i at t with node j at t - lag."""
    values = panel.values if hasattr(panel, 'values') else np.asarray(panel)
    if lag >= values.shape[0] - 1:
        raise ValueError('lag leaves fewer than two overlapping steps')
    target = values[lag:, i]
    source = values[:values.shape[0] - lag, j]
    target = target - target.mean()
    source = source - source.mean()
    denominator = np.sqrt((target ** 2).sum() * (source ** 2).sum())
    return float((target * source).sum() / denominator) if denominator > 0 else 0.0


def rank_profile_frame(weight_layers, coordinates=None):
    """
    Mean normalized weight (and mean distance when coordinates exist) of the
    node at each neighbor rank, for every layer. Needs no ground truth.
    """
    rows = []
    distances = None
    if coordinates is not None:
        coordinates = np.asarray(coordinates, dtype=np.float64)
        distances = haversine_km(coordinates[:, None, :], coordinates[None, :, :])
    for layer, weights in enumerate(weight_layers, start=1):
        weights = np.asarray(weights, dtype=np.float64)
        order = rank_neighbors(weights)
        row_index = np.arange(weights.shape[0])[:, None]
        weight_profile = normalized_weights(weights)[row_index, order].mean(axis=0)
        distance_profile = distances[row_index, order].mean(axis=0) if distances is not None else None
        for rank, value in enumerate(weight_profile, start=1):
            rows.append({
                'layer': layer,
                'rank': rank,
                'mean_normalized_weight': float(value),
                'mean_distance_km': float(distance_profile[rank - 1]) if distance_profile is not None else None,
            })
    return pd.DataFrame(rows, columns=['layer', 'rank', 'mean_normalized_weight', 'mean_distance_km'])
