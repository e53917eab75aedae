"""
Machine-readable exports of learned gate weights and layer decompositions.
"""
from pathlib import Path

import numpy as np
import pandas as pd


def normalized_weights(weights):
    """W[i, j] / W[i, i]: every node's weights relative to its self-weight."""
    weights = np.asarray(weights, dtype=np.float64)
    return weights / np.diag(weights)[:, None]


def rank_neighbors(weights):
    """
    For every node i, the other nodes ordered by W[i, j] / W[i, i]
    descending, ties broken by ascending index. Shape (N, N - 1).
    """
    ratios = normalized_weights(weights)
    num_nodes = ratios.shape[0]
    order = np.empty((num_nodes, num_nodes - 1), dtype=np.int64)
    indices = np.arange(num_nodes)
    for i in range(num_nodes):
        others = indices[indices != i]
        # lexsort sorts by the last key first
        order[i] = others[np.lexsort((others, -ratios[i, others]))]
    return order


def write_weight_csv(path, weights, node_ids):
    frame = pd.DataFrame(np.asarray(weights), index=list(node_ids), columns=list(node_ids))
    frame.index.name = 'node_id'
    frame.to_csv(path, float_format='%.17g')
    return Path(path)


def neighbor_ranking_frame(weight_layers, node_ids):
    rows = []
    for layer, weights in enumerate(weight_layers, start=1):
        ratios = normalized_weights(weights)
        for i, ranked in enumerate(rank_neighbors(weights)):
            for rank, j in enumerate(ranked, start=1):
                rows.append({
                    'layer': layer,
                    'node_id': node_ids[i],
                    'rank': rank,
                    'neighbor_id': node_ids[j],
                    'weight': float(weights[i, j]),
                    'normalized_weight': float(ratios[i, j]),
                })
    return pd.DataFrame(rows, columns=['layer', 'node_id', 'rank', 'neighbor_id', 'weight', 'normalized_weight'])


def decomposition_frame(output, anchors, node_ids):
    """
    One row per (anchor, node, step): each layer's share of the forecast
    (already scaled by 1/M) and the forecast itself.
    """
    contributions = output.contributions()
    forecast = output.forecast.values
    if forecast.ndim == 2:
        forecast = forecast[None]
        contributions = [item[None] for item in contributions]
    batch, num_nodes, horizon = forecast.shape
    grid = np.stack(np.meshgrid(np.arange(batch), np.arange(num_nodes), np.arange(horizon), indexing='ij'), -1)
    grid = grid.reshape(-1, 3)
    frame = pd.DataFrame({
        'anchor': np.asarray(anchors)[grid[:, 0]],
        'node_id': np.asarray(node_ids, dtype=object)[grid[:, 1]],
        'step': grid[:, 2] + 1,
    })
    for layer, values in enumerate(contributions, start=1):
        frame[f'layer_{layer}'] = values.reshape(-1)
    frame['forecast'] = forecast.reshape(-1)
    return frame
