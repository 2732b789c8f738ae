"""Rank weighting of hypotheses and overlap-aware label voting."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

from diartool.core import Timeline, build_regions, timeline_from_regions
from diartool.doverlap.graph import SpeakerGraph, build_graph
from diartool.errors import InputError

log = logging.getLogger(__name__)

RANK_DECAY = 0.1


@dataclass(frozen=True)
class RankWeights:
    """``weights[k]`` belongs to input hypothesis ``k``; ``order`` lists inputs best-first."""

    weights: tuple[float, ...]
    order: tuple[int, ...]


def rank_weights(
    hyps: Sequence[Timeline] | SpeakerGraph,
    order: Literal["descending", "ascending"] = "descending",
) -> RankWeights:
    """Weights ``1 / rank**0.1`` normalised to sum to one.

    Hypotheses are ranked by their summed edge weight to all other
    hypotheses, highest first unless ``order="ascending"``; ties keep input
    order.
    """
    g = hyps if isinstance(hyps, SpeakerGraph) else build_graph(hyps)
    if g.K < 2:
        raise InputError("rank weighting needs at least two hypotheses")
    if order not in ("descending", "ascending"):
        raise ValueError(f"unknown rank order {order!r}")
    agreement = [g.hypothesis_weight(k) for k in range(g.K)]
    sign = -1.0 if order == "descending" else 1.0
    ranked = sorted(range(g.K), key=lambda k: (sign * agreement[k], k))
    raw = [0.0] * g.K
    for rank, k in enumerate(ranked, start=1):
        raw[k] = rank ** -RANK_DECAY
    total = math.fsum(raw)
    return RankWeights(tuple(r / total for r in raw), tuple(ranked))


def _round_half_up(x: float) -> int:
    # guard against sums like 1.4999999999999998 for exact halves
    return int(math.floor(x + 0.5 + 1e-9))


def vote(
    mapped: Sequence[Timeline],
    weights: RankWeights,
    max_speakers_per_region: int | None = 2,
) -> Timeline:
    """Weighted overlap-aware voting over regions of the mapped hypotheses.

    In each region the speaker count is the weighted mean of the hypotheses'
    counts, rounded half-up and capped at ``max_speakers_per_region``; that
    many labels with the highest summed weight are kept, plus any label tied
    with the last one kept, but never more than the cap (ties beyond it are
    broken by label name). Labels with zero support are never emitted.
    """
    if len(mapped) != len(weights.weights):
        raise InputError(
            f"{len(mapped)} hypotheses but {len(weights.weights)} weights"
        )
    if not mapped:
        raise InputError("nothing to vote on")
    session = mapped[0].session
    out = []
    for region in build_regions(mapped):
        counts = [len(s) for s in region.per_hypothesis_speakers]
        n_hat = _round_half_up(math.fsum(w * n for w, n in zip(weights.weights, counts)))
        if max_speakers_per_region is not None:
            n_hat = min(n_hat, max_speakers_per_region)
        if n_hat <= 0:
            if any(counts):
                log.debug("region [%d, %d) voted silent", region.start, region.end)
            continue
        support: dict[str, float] = {}
        for w, speakers in zip(weights.weights, region.per_hypothesis_speakers):
            for spk in speakers:
                support[spk] = support.get(spk, 0.0) + w
        ranked = sorted(support.items(), key=lambda kv: (-kv[1], kv[0]))
        if len(ranked) > n_hat:
            cut = ranked[n_hat - 1][1]
            chosen = [spk for spk, s in ranked if s >= cut - 1e-12]
        else:
            chosen = [spk for spk, _ in ranked]
        if max_speakers_per_region is not None:
            chosen = chosen[:max_speakers_per_region]
        out.append((region.start, region.end, chosen))
    return timeline_from_regions(session, out)
