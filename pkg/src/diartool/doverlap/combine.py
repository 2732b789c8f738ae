"""End-to-end DOVER-Lap combination."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

from diartool.core import Timeline
from diartool.doverlap.graph import Partition, SpeakerGraph, build_graph, check_partition
from diartool.doverlap.local_search import (
    DEFAULT_EPOCHS,
    local_search_polish,
    map_labels_rls,
)
from diartool.doverlap.mapping import (
    DEFAULT_BUDGET,
    map_labels_exponential,
    map_labels_hungarian,
    tensor_size,
)
from diartool.doverlap.voting import RankWeights, rank_weights, vote
from diartool.errors import InputError

Method = Literal["exponential", "hungarian", "rls", "auto"]
METHODS = ("exponential", "hungarian", "rls", "auto")


@dataclass
class CombineOptions:
    method: Method = "auto"
    budget: int = DEFAULT_BUDGET
    epochs: int = DEFAULT_EPOCHS
    iterations: int | None = None
    seed: int = 0
    rank_order: Literal["descending", "ascending"] = "descending"
    max_speakers_per_region: int | None = 2
    jobs: int = 1


@dataclass
class CombineResult:
    timeline: Timeline
    partition: Partition
    graph: SpeakerGraph
    weights: RankWeights
    method: str
    mapping: dict[str, str] = field(default_factory=dict)


def select_partition(
    g: SpeakerGraph, weights: RankWeights, options: CombineOptions
) -> tuple[Partition, str]:
    method = options.method
    if method == "auto":
        method = "exponential" if tensor_size(g) <= options.budget else "hungarian"
    if method == "exponential":
        p = map_labels_exponential(g, budget=options.budget)
    elif method == "hungarian":
        p = map_labels_hungarian(g, order=weights.order)
    elif method == "rls":
        p = map_labels_rls(
            g,
            epochs=options.epochs,
            iterations=options.iterations,
            seed=options.seed,
            jobs=options.jobs,
        )
        p = local_search_polish(g, p)
    else:
        raise ValueError(f"unknown mapping method {options.method!r}")
    check_partition(g, p)
    return p, method


def global_labels(g: SpeakerGraph, p: Partition, weights: RankWeights) -> dict[tuple[int, int], str]:
    """Name each clique after its member from the best-ranked hypothesis.

    Naming after an input label keeps the output readable and makes
    combining identical hypotheses return them unchanged. A name already
    taken by an earlier clique gets a numeric suffix.
    """
    names: list[str | None] = [None] * g.C
    for c, clique in enumerate(p.real_cliques(g)):
        by_hyp = {k: i for k, i in clique}
        for k in weights.order:
            if k in by_hyp:
                names[c] = g.hypotheses[k][by_hyp[k]]
                break
    taken: set[str] = set()
    final: list[str] = []
    for c, name in enumerate(names):
        base = name if name is not None else f"spk{c}"
        cand, n = base, 1
        while cand in taken:
            cand = f"{base}_{n}"
            n += 1
        taken.add(cand)
        final.append(cand)
    return {
        (k, i): final[p.assign[k][i]]
        for k in range(g.K)
        for i in range(g.sizes[k])
    }


def combine(hyps: Sequence[Timeline], options: CombineOptions | None = None) -> CombineResult:
    """Map all hypotheses to a common label space and vote."""
    options = options or CombineOptions()
    if len(hyps) < 2:
        raise InputError("combination needs at least two hypotheses")
    g = build_graph(hyps)
    weights = rank_weights(g, order=options.rank_order)
    partition, method = select_partition(g, weights, options)
    labels = global_labels(g, partition, weights)
    mapped = [
        h.relabel({spk: labels[(k, i)] for i, spk in enumerate(g.hypotheses[k])})
        for k, h in enumerate(hyps)
    ]
    combined = vote(mapped, weights, options.max_speakers_per_region)
    mapping = {
        f"{k}:{spk}": labels[(k, i)]
        for k in range(g.K)
        for i, spk in enumerate(g.hypotheses[k])
    }
    return CombineResult(combined, partition, g, weights, method, mapping)
