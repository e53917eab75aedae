from .panel import SpeedPanel, load_coordinates, load_panel, save_cache, save_csv
from .windows import (
    SplitRanges,
    SplitSpec,
    TimeFeatureSpec,
    WindowBatch,
    build_batch,
    evaluation_anchors,
    iterate_windows,
    sample_epoch,
    split,
    time_feature_matrix,
    time_features,
    training_anchors,
)

__all__ = [
    'SpeedPanel',
    'load_panel',
    'load_coordinates',
    'save_cache',
    'save_csv',
    'SplitSpec',
    'SplitRanges',
    'TimeFeatureSpec',
    'WindowBatch',
    'split',
    'time_features',
    'time_feature_matrix',
    'training_anchors',
    'evaluation_anchors',
    'build_batch',
    'sample_epoch',
    'iterate_windows',
]
