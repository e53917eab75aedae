from .analysis import (
    NeighborRankScore,
    PermutationResult,
    lagged_cross_correlation,
    neighbor_rank_score,
    permutation_test,
    permute_adjacency,
    rank_profile_frame,
)
from .generator import (
    SynthConfig,
    SyntheticDataset,
    generate,
    planted_adjacency,
    read_adjacency,
    write_adjacency,
    write_dataset,
)

__all__ = [
    'SynthConfig',
    'SyntheticDataset',
    'generate',
    'planted_adjacency',
    'read_adjacency',
    'write_adjacency',
    'write_dataset',
    'NeighborRankScore',
    'PermutationResult',
    'neighbor_rank_score',
    'permutation_test',
    'permute_adjacency',
    'rank_profile_frame',
    'lagged_cross_correlation',
]
