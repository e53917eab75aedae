from ..engine import ops
from ..exceptions import ShapeError


def fc_ts_block_stack(z, blocks):
    """
    Fully connected residual time-series model over per-node rows of ``z``.

    Block r runs its FC+ReLU layers on the residual Z^r, emits a partial
    forecast H F^r and a backcast H B^r; the next residual is
    relu(Z^r - backcast). The first residual is relu(Z). Returns the sum of
    the partial forecasts, one row per input row.
    """
    residual = ops.relu(z)
    forecast = None
    for r, block in enumerate(blocks):
        hidden = residual
        for index, layer in enumerate(block.layers):
            if hidden.shape[-1] != layer.weight.shape[0]:
                raise ShapeError(f'block {r} layer {index}', hidden.shape, layer.weight.shape)
            hidden = ops.relu(layer(hidden))
        if block.backcast.shape[1] != residual.shape[-1]:
            raise ShapeError(f'block {r} backcast', block.backcast.shape, residual.shape)
        partial = ops.matmul(hidden, block.forecast)
        forecast = partial if forecast is None else ops.add(forecast, partial)
        residual = ops.relu(ops.sub(residual, ops.matmul(hidden, block.backcast)))
    return forecast
