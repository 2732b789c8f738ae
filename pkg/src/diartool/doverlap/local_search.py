"""Local search over exchangeable-pair swaps: deterministic polish and RLS."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from itertools import combinations
from typing import Iterator

import numpy as np

from diartool.doverlap.graph import Partition, SpeakerGraph, make_partition

DEFAULT_EPOCHS = 1000


def default_iterations(K: int) -> int:
    return 2 * K + 1


class _Swapper:
    """Weight changes of exchangeable-pair swaps on a mutable assignment."""

    def __init__(self, g: SpeakerGraph, assign: np.ndarray):
        self.g = g
        self.assign = np.array(assign, dtype=int)
        self.blocks = {(k, l): g.block(k, l) for k in range(g.K) for l in range(g.K) if k != l}
        self.members = np.argsort(self.assign, axis=1)  # members[l, c] = vertex of l in clique c

    def delta(self, k: int, i: int, j: int) -> float:
        a, b = self.assign[k, i], self.assign[k, j]
        d = 0.0
        for l in range(self.g.K):
            if l == k:
                continue
            w = self.blocks[(k, l)]
            ma, mb = self.members[l, a], self.members[l, b]
            d += w[i, mb] + w[j, ma] - w[i, ma] - w[j, mb]
        return float(d)

    def swap(self, k: int, i: int, j: int) -> None:
        a, b = self.assign[k, i], self.assign[k, j]
        self.assign[k, i], self.assign[k, j] = b, a
        self.members[k, a], self.members[k, b] = j, i


def neighbor_moves(g: SpeakerGraph) -> list[tuple[int, int, int]]:
    """All exchangeable pairs ``(k, i, j)``, i < j, in a fixed order."""
    return [(k, i, j) for k in range(g.K) for i, j in combinations(range(g.C), 2)]


def iter_neighbors(g: SpeakerGraph, p: Partition) -> Iterator[Partition]:
    for k, i, j in neighbor_moves(g):
        rows = [list(r) for r in p.assign]
        rows[k][i], rows[k][j] = rows[k][j], rows[k][i]
        yield make_partition(g, rows)


def local_search_polish(g: SpeakerGraph, start: Partition) -> Partition:
    """Improve ``start`` by exchangeable-pair swaps.

    While the weight is below total/C, the first neighbour whose excess over
    total/C is at least ``(1 - 2C/|N|)`` times the current excess is taken,
    followed, if still below, by the first strictly heavier neighbour; both
    exist by the neighbour-average identity. Then best-improvement swaps run
    until no neighbour is heavier, so the result is a local optimum with
    weight at least total/C.
    """
    moves = neighbor_moves(g)
    if not moves:
        return start
    target = g.total_weight / g.C
    factor = 1.0 - 2.0 * g.C / len(moves)
    tol = 1e-12 * max(1.0, g.total_weight)
    s = _Swapper(g, np.array(start.assign))
    weight = start.weight
    changed = False

    while weight < target - tol:
        excess = weight - target
        for k, i, j in moves:
            d = s.delta(k, i, j)
            if excess + d >= factor * excess - tol and d > tol:
                s.swap(k, i, j)
                weight += d
                changed = True
                break
        else:
            break
        if weight < target - tol:
            for k, i, j in moves:
                d = s.delta(k, i, j)
                if d > tol:
                    s.swap(k, i, j)
                    weight += d
                    break

    while True:
        best_d, best_move = tol, None
        for move in moves:
            d = s.delta(*move)
            if d > best_d:
                best_d, best_move = d, move
        if best_move is None:
            break
        s.swap(*best_move)
        weight += best_d
        changed = True

    return make_partition(g, s.assign) if changed else start


def _pair_arrays(g: SpeakerGraph) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    pairs = sorted(g.blocks)
    ks = np.array([k for k, _ in pairs], dtype=int)
    ls = np.array([l for _, l in pairs], dtype=int)
    stacked = np.stack([g.blocks[p] for p in pairs]) if pairs else np.zeros((0, g.C, g.C))
    return ks, ls, stacked


def _epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, epoch]))


def _weight(assign: np.ndarray, ks, ls, stacked) -> float:
    same = assign[ks][:, :, None] == assign[ls][:, None, :]
    return float(stacked[same].sum())


def _run_epoch(g: SpeakerGraph, iterations: int, seed: int, epoch: int) -> tuple[float, np.ndarray]:
    rng = _epoch_rng(seed, epoch)
    C = g.C
    assign = np.stack([rng.permutation(C) for _ in range(g.K)])
    ks, ls, stacked = _pair_arrays(g)
    if C > 1:
        for _ in range(iterations):
            outside = assign[ks][:, :, None] != assign[ls][:, None, :]
            w = np.where(outside, stacked, 0.0).ravel()
            cum = np.cumsum(w)
            if cum.size == 0 or cum[-1] <= 0:
                break
            flat = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
            flat = min(flat, cum.size - 1)
            p, rem = divmod(flat, C * C)
            i, j = divmod(rem, C)
            for k, v in ((ks[p], i), (ls[p], j)):
                if rng.random() < 0.5:
                    other = int(rng.integers(C - 1))
                    other += other >= v
                    assign[k, v], assign[k, other] = assign[k, other], assign[k, v]
    return _weight(assign, ks, ls, stacked), assign


def _run_epochs(args: tuple[SpeakerGraph, int, int, int, int]) -> tuple[float, int, np.ndarray]:
    g, iterations, seed, lo, hi = args
    best = (-1.0, -1, None)
    for e in range(lo, hi):
        w, a = _run_epoch(g, iterations, seed, e)
        if w > best[0]:
            best = (w, e, a)
    return best


def map_labels_rls(
    g: SpeakerGraph,
    epochs: int = DEFAULT_EPOCHS,
    iterations: int | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> Partition:
    """Randomized local search.

    Each epoch starts from a uniformly random partition and runs
    ``iterations`` moves (default 2K+1). A move samples an edge that crosses
    two cliques with probability proportional to its weight, then swaps each
    of its endpoints, independently with probability 1/2, with a uniformly
    chosen other vertex of the same hypothesis. The heaviest final partition
    over all epochs is returned, the earliest epoch winning ties. Epoch ``e``
    draws from a generator seeded by ``(seed, e)``, so the result does not
    depend on ``jobs``.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    iterations = default_iterations(g.K) if iterations is None else iterations
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if jobs > 1 and epochs > 1:
        bounds = np.linspace(0, epochs, min(jobs, epochs) + 1).astype(int)
        chunks = [(g, iterations, seed, lo, hi) for lo, hi in zip(bounds, bounds[1:])]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_epochs, chunks))
    else:
        results = [_run_epochs((g, iterations, seed, 0, epochs))]
    # strict improvement keeps the earliest epoch on ties
    best = results[0]
    for r in results[1:]:
        if r[0] > best[0]:
            best = r
    return make_partition(g, best[2])
