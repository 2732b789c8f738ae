"""Speaker graph over the hypotheses and clique partitions of it."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations, product
from typing import Iterator, Sequence

import numpy as np

from diartool.core import Timeline, intersection_length, speaker_activities
from diartool.errors import InputError, InvariantError

Vertex = tuple[int, int]  # (hypothesis index, speaker index within hypothesis)


@dataclass(frozen=True)
class SpeakerGraph:
    """Complete K-partite graph, padded so that every part has C vertices.

    Vertex ``(k, i)`` is speaker ``hypotheses[k][i]`` for ``i < sizes[k]``;
    higher indices are zero-weight dummy vertices. ``blocks[(k, l)]`` (k < l)
    is the C x C weight matrix between parts k and l.
    """

    hypotheses: tuple[tuple[str, ...], ...]
    blocks: dict[tuple[int, int], np.ndarray]

    @property
    def K(self) -> int:
        return len(self.hypotheses)

    @property
    def C(self) -> int:
        return max(len(h) for h in self.hypotheses)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(h) for h in self.hypotheses)

    def is_dummy(self, v: Vertex) -> bool:
        return v[1] >= len(self.hypotheses[v[0]])

    def block(self, k: int, l: int) -> np.ndarray:
        return self.blocks[(k, l)] if k < l else self.blocks[(l, k)].T

    def weight(self, u: Vertex, v: Vertex) -> float:
        if u[0] == v[0]:
            return 0.0
        return float(self.block(u[0], v[0])[u[1], v[1]])

    def edge_weights(self) -> dict[tuple[Vertex, Vertex], float]:
        return {
            ((k, i), (l, j)): float(w[i, j])
            for (k, l), w in self.blocks.items()
            for i in range(self.C)
            for j in range(self.C)
        }

    @property
    def total_weight(self) -> float:
        return float(sum(w.sum() for w in self.blocks.values()))

    def hypothesis_weight(self, k: int) -> float:
        """Sum of weights of all edges incident to part ``k``."""
        return float(sum(w.sum() for (a, b), w in self.blocks.items() if k in (a, b)))

    @classmethod
    def from_blocks(
        cls, sizes: Sequence[int], blocks: dict[tuple[int, int], np.ndarray]
    ) -> "SpeakerGraph":
        """Build a graph directly from weights, naming speakers ``"0", "1", ...``.

        ``blocks[(k, l)]`` may be ``sizes[k] x sizes[l]``; it is zero-padded.
        """
        hyps = tuple(tuple(str(i) for i in range(n)) for n in sizes)
        C = max(sizes)
        padded = {}
        for k, l in combinations(range(len(sizes)), 2):
            m = np.zeros((C, C))
            w = np.asarray(blocks[(k, l)], dtype=float)
            m[: w.shape[0], : w.shape[1]] = w
            padded[(k, l)] = m
        return cls(hyps, padded)


def build_graph(hyps: Sequence[Timeline]) -> SpeakerGraph:
    """Edge weight = |intersection| / |union| of the two speakers' activity."""
    if len(hyps) < 2:
        raise InputError("combination needs at least two hypotheses")
    if len({h.session for h in hyps}) > 1:
        raise InputError(f"mixed sessions: {sorted({h.session for h in hyps})}")
    acts = [speaker_activities(h) for h in hyps]
    for k, a in enumerate(acts):
        if not a:
            raise InputError(f"hypothesis {k} of session {hyps[k].session!r} has no speakers")
    C = max(len(a) for a in acts)
    blocks = {}
    for k, l in combinations(range(len(acts)), 2):
        m = np.zeros((C, C))
        for i, u in enumerate(acts[k]):
            for j, v in enumerate(acts[l]):
                inter = intersection_length(u.intervals, v.intervals)
                if inter:
                    m[i, j] = inter / (u.duration + v.duration - inter)
        blocks[(k, l)] = m
    return SpeakerGraph(tuple(tuple(x.speaker for x in a) for a in acts), blocks)


@dataclass(frozen=True)
class Partition:
    """Orthogonal clique partition of a padded speaker graph.

    ``assign[k][i]`` is the clique of vertex ``(k, i)``; each row is a
    permutation of ``range(C)``, which makes every clique hold exactly one
    (possibly dummy) vertex per hypothesis.
    """

    assign: tuple[tuple[int, ...], ...]
    weight: float

    @property
    def cliques(self) -> list[list[Vertex]]:
        C = len(self.assign[0])
        out: list[list[Vertex]] = [[] for _ in range(C)]
        for k, row in enumerate(self.assign):
            for i, c in enumerate(row):
                out[c].append((k, i))
        return out

    def real_cliques(self, g: SpeakerGraph) -> list[list[Vertex]]:
        return [[v for v in clique if not g.is_dummy(v)] for clique in self.cliques]

    def label_of(self, k: int, i: int) -> int:
        return self.assign[k][i]


def partition_weight(g: SpeakerGraph, assign: Sequence[Sequence[int]]) -> float:
    total = 0.0
    for (k, l), w in g.blocks.items():
        a, b = np.asarray(assign[k]), np.asarray(assign[l])
        total += float(w[a[:, None] == b[None, :]].sum())
    return total


def make_partition(g: SpeakerGraph, assign: Sequence[Sequence[int]]) -> Partition:
    rows = tuple(tuple(int(c) for c in row) for row in assign)
    return Partition(rows, partition_weight(g, rows))


def partition_from_cliques(g: SpeakerGraph, cliques: Sequence[Sequence[int]]) -> Partition:
    """``cliques[c][k]`` is the vertex index of hypothesis ``k`` in clique ``c``."""
    assign = [[0] * g.C for _ in range(g.K)]
    for c, members in enumerate(cliques):
        for k, i in enumerate(members):
            assign[k][i] = c
    return make_partition(g, assign)


def check_partition(g: SpeakerGraph, p: Partition, tol: float = 1e-9) -> None:
    """Raise ``InvariantError`` unless ``p`` is a valid partition of ``g``."""
    if len(p.assign) != g.K:
        raise InvariantError(f"partition has {len(p.assign)} rows for {g.K} hypotheses")
    for k, row in enumerate(p.assign):
        if sorted(row) != list(range(g.C)):
            raise InvariantError(f"hypothesis {k} is not a permutation of cliques: {row}")
    recomputed = sum(
        g.weight(u, v) for clique in p.cliques for u, v in combinations(clique, 2)
    )
    if abs(recomputed - p.weight) > tol * max(1.0, abs(recomputed)):
        raise InvariantError(f"stored weight {p.weight} != recomputed {recomputed}")


def iter_all_partitions(g: SpeakerGraph) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Every orthogonal partition, with hypothesis 0 fixed to the identity."""
    ident = tuple(range(g.C))
    for rest in product(permutations(range(g.C)), repeat=g.K - 1):
        yield (ident, *rest)
