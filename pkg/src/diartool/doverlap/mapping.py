"""Label mapping: clique-enumeration and pairwise Hungarian algorithms."""

from __future__ import annotations

import logging
from itertools import combinations
from typing import Sequence

import numpy as np

from diartool.doverlap.graph import (
    Partition,
    SpeakerGraph,
    make_partition,
    partition_from_cliques,
)
from diartool.doverlap.hungarian import hungarian_matching
from diartool.errors import BudgetExceededError

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10**7
DEFAULT_MAX_NODES = 2_000_000
# cap on work done by the exact search, as a multiple of the budget; each
# expanded node is charged its tensor reads plus a fixed interpreter overhead
WORK_PER_BUDGET = 20
NODE_COST = 10_000


def tensor_shape(g: SpeakerGraph) -> tuple[int, ...]:
    """Per-hypothesis axis length: real speakers, plus one shared dummy slot if padded."""
    return tuple(n + (1 if n < g.C else 0) for n in g.sizes)


def tensor_size(g: SpeakerGraph) -> int:
    return int(np.prod(tensor_shape(g), dtype=object))


def cost_tensor(g: SpeakerGraph) -> np.ndarray:
    """Weight of every maximal clique, indexed by one vertex per hypothesis.

    Each of the K-choose-2 pairwise weight faces is broadcast into the
    K-dimensional tensor and summed. The last index on a padded axis stands
    for "a dummy vertex", whose edges all weigh zero.
    """
    shape = tensor_shape(g)
    t = np.zeros(shape)
    for k, l in combinations(range(g.K), 2):
        face = g.block(k, l)[: shape[k], : shape[l]]
        view = [1] * g.K
        view[k], view[l] = shape[k], shape[l]
        t = t + face.reshape(view)
    return t


def _check_budget(g: SpeakerGraph, budget: int) -> None:
    size = tensor_size(g)
    if size > budget:
        raise BudgetExceededError(
            f"exponential mapping needs a cost tensor of {size} entries "
            f"({g.K} hypotheses, up to {g.C} speakers), above the budget of {budget}; "
            "use the hungarian or rls method, or raise the budget"
        )


class _CliqueState:
    """Which real vertices and how many dummies remain per hypothesis."""

    def __init__(self, sizes: Sequence[int], C: int):
        self.sizes = tuple(sizes)
        self.free = [np.ones(n + (1 if n < C else 0), dtype=bool) for n in self.sizes]
        self.dummies = [C - n for n in self.sizes]

    def usable(self) -> tuple[np.ndarray, ...]:
        return tuple(np.flatnonzero(f) for f in self.free)

    def take(self, idx: Sequence[int]) -> None:
        for k, i in enumerate(idx):
            if i >= self.sizes[k]:
                self.dummies[k] -= 1
                if self.dummies[k] == 0:
                    self.free[k][i] = False
            else:
                self.free[k][i] = False

    def give(self, idx: Sequence[int]) -> None:
        for k, i in enumerate(idx):
            if i >= self.sizes[k]:
                self.dummies[k] += 1
            self.free[k][i] = True


def _materialize(g: SpeakerGraph, cliques: list[tuple[int, ...]]) -> Partition:
    """Replace the shared dummy slot with distinct dummy vertex indices."""
    next_dummy = list(g.sizes)
    out = []
    for idx in cliques:
        members = []
        for k, i in enumerate(idx):
            if i >= g.sizes[k]:
                i = next_dummy[k]
                next_dummy[k] += 1
            members.append(i)
        out.append(members)
    return partition_from_cliques(g, out)


def _greedy_cliques(g: SpeakerGraph, tensor: np.ndarray) -> list[tuple[int, ...]]:
    state = _CliqueState(g.sizes, g.C)
    cliques = []
    for _ in range(g.C):
        usable = state.usable()
        sub = tensor[np.ix_(*usable)]
        # C-order argmax returns the lexicographically smallest tuple among ties
        pos = np.unravel_index(int(np.argmax(sub)), sub.shape)
        idx = tuple(int(usable[k][p]) for k, p in enumerate(pos))
        cliques.append(idx)
        state.take(idx)
    return cliques


def _clique_weight(tensor: np.ndarray, cliques: list[tuple[int, ...]]) -> float:
    return float(sum(tensor[idx] for idx in cliques))


def map_labels_exponential(
    g: SpeakerGraph,
    budget: int = DEFAULT_BUDGET,
    exact: bool = True,
    max_nodes: int = DEFAULT_MAX_NODES,
    max_work: int | None = None,
) -> Partition:
    """Label mapping by enumerating maximal cliques through the cost tensor.

    The greedy pass repeatedly takes the heaviest remaining maximal clique
    (lexicographically smallest vertex tuple on ties) and removes its
    vertices. Greedy extraction is not optimal in general, so with
    ``exact=True`` its result seeds a branch-and-bound search over the same
    tensor that returns a maximum-weight partition. Every clique of a padded
    partition contains exactly one vertex of the pivot hypothesis (one with C
    real speakers), so the search branches on the clique of the pivot's
    first free vertex and bounds the remainder by the sum, over the pivot's
    free vertices, of the heaviest free clique through each. If more than
    ``max_nodes`` branches are expanded, or the search work (tensor cells read
    plus ``NODE_COST`` per node) exceeds ``max_work`` (default
    ``WORK_PER_BUDGET * budget``), the best
    partition found so far is returned and a warning is logged.
    """
    _check_budget(g, budget)
    tensor = cost_tensor(g)
    greedy = _greedy_cliques(g, tensor)
    if not exact or g.C == 1:
        return _materialize(g, greedy)

    pivot = g.sizes.index(g.C)
    order = [pivot] + [k for k in range(g.K) if k != pivot]
    t = np.transpose(tensor, order)
    state = _CliqueState([g.sizes[k] for k in order], g.C)

    best = {"w": _clique_weight(tensor, greedy), "cliques": greedy}
    nodes = work = 0
    max_work = WORK_PER_BUDGET * budget if max_work is None else max_work
    eps = 1e-12 * max(1.0, g.total_weight)
    chosen: list[tuple[int, ...]] = []

    def search(acc: float) -> None:
        nonlocal nodes, work
        usable = state.usable()
        if usable[0].size == 0:
            if acc > best["w"] + eps:
                inv = np.argsort(order)
                best["w"] = acc
                best["cliques"] = [tuple(c[j] for j in inv) for c in chosen]
            return
        sub = t[np.ix_(*usable)]
        work += sub.size + NODE_COST
        per_pivot = sub.reshape(sub.shape[0], -1)
        bound = acc + float(per_pivot.max(axis=1).sum())
        if bound <= best["w"] + eps:
            return
        row = per_pivot[0]
        rest = float(per_pivot[1:].max(axis=1).sum())
        # heaviest first, ties in lexicographic order
        for flat in np.argsort(-row, kind="stable"):
            if acc + row[flat] + rest <= best["w"] + eps:
                break
            nodes += 1
            if nodes > max_nodes or work > max_work:
                return
            pos = np.unravel_index(int(flat), sub.shape[1:])
            idx = (int(usable[0][0]),) + tuple(
                int(usable[k + 1][p]) for k, p in enumerate(pos)
            )
            state.take(idx)
            chosen.append(idx)
            search(acc + float(row[flat]))
            chosen.pop()
            state.give(idx)
            if nodes > max_nodes or work > max_work:
                return

    search(0.0)
    if nodes > max_nodes or work > max_work:
        log.warning(
            "exponential mapping stopped after %d branches (work %d, limit %d); "
            "result may be suboptimal",
            nodes,
            work,
            max_work,
        )
    return _materialize(g, best["cliques"])


def map_labels_hungarian(g: SpeakerGraph, order: Sequence[int] | None = None) -> Partition:
    """Incremental pairwise mapping with the Hungarian method.

    Hypotheses are visited in ``order`` (default: input order). The first one
    seeds C groups; each next hypothesis is matched against the groups, where
    the weight between a group and a vertex is the summed weight of the
    vertex to every member, and then merged into them.
    """
    order = list(range(g.K)) if order is None else list(order)
    if sorted(order) != list(range(g.K)):
        raise ValueError(f"order must be a permutation of range({g.K}), got {order}")
    C = g.C
    assign = [[0] * C for _ in range(g.K)]
    first = order[0]
    assign[first] = list(range(C))
    merged = [first]
    for k in order[1:]:
        # group c vs vertex j of hypothesis k
        w = np.zeros((C, C))
        for m in merged:
            block = g.block(m, k)
            for i in range(C):
                w[assign[m][i]] += block[i]
        match = hungarian_matching(w)
        for c, j in enumerate(match):
            assign[k][j] = c
        merged.append(k)
    return make_partition(g, assign)
