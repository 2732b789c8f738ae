"""DOVER-Lap: overlap-aware combination of diarization hypotheses."""

from diartool.doverlap.combine import CombineOptions, CombineResult, combine
from diartool.doverlap.graph import (
    Partition,
    SpeakerGraph,
    build_graph,
    check_partition,
    partition_weight,
)
from diartool.doverlap.hungarian import hungarian_matching
from diartool.doverlap.local_search import local_search_polish, map_labels_rls
from diartool.doverlap.mapping import map_labels_exponential, map_labels_hungarian
from diartool.doverlap.voting import RankWeights, rank_weights, vote

__all__ = [
    "CombineOptions",
    "CombineResult",
    "Partition",
    "RankWeights",
    "SpeakerGraph",
    "build_graph",
    "check_partition",
    "combine",
    "hungarian_matching",
    "local_search_polish",
    "map_labels_exponential",
    "map_labels_hungarian",
    "map_labels_rls",
    "partition_weight",
    "rank_weights",
    "vote",
]
