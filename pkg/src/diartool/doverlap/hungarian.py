"""Kuhn-Munkres maximum-weight perfect matching."""

from __future__ import annotations

import numpy as np


def hungarian_matching(weights: np.ndarray) -> list[int]:
    """Maximum-weight perfect matching on a square weight matrix.

    Returns ``match`` with row ``i`` paired to column ``match[i]``.

    Runs the primal-dual method in O(n^3): vertex labels stay feasible
    (``l(row) + l(col) >= w``), matched edges stay tight, and each phase grows
    an alternating tree from one free row, lowering the labels of the tree's
    rows and raising those of its columns by the smallest slack until an
    augmenting path of tight edges reaches a free column.
    """
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    if w.shape != (n, n):
        raise ValueError(f"weight matrix must be square, got {w.shape}")
    if n == 0:
        return []
    # work with costs; labels below are the dual of the min-cost problem
    cost = w.max() - w
    INF = float("inf")
    u = np.zeros(n + 1)  # row labels, 1-based
    v = np.zeros(n + 1)  # column labels, 1-based
    owner = np.zeros(n + 1, dtype=int)  # owner[col] = matched row, 0 = free
    way = np.zeros(n + 1, dtype=int)

    for row in range(1, n + 1):
        owner[0] = row
        col0 = 0
        slack = np.full(n + 1, INF)
        in_tree = np.zeros(n + 1, dtype=bool)
        while True:
            in_tree[col0] = True
            r = owner[col0]
            # reduced costs from the newest tree row to every column outside the tree
            cand = cost[r - 1] - u[r] - v[1:]
            outside = ~in_tree[1:]
            better = outside & (cand < slack[1:])
            slack[1:][better] = cand[better]
            way[1:][better] = col0
            masked = np.where(outside, slack[1:], INF)
            col1 = int(np.argmin(masked)) + 1
            delta = masked[col1 - 1]
            # relabel: tree rows and columns absorb delta, others' slack shrinks
            tree_cols = np.flatnonzero(in_tree)
            u[owner[tree_cols]] += delta
            v[tree_cols] -= delta
            slack[1:][outside] -= delta
            col0 = col1
            if owner[col0] == 0:
                break
        # flip the augmenting path
        while col0:
            prev = way[col0]
            owner[col0] = owner[prev]
            col0 = prev

    match = [0] * n
    for col in range(1, n + 1):
        match[owner[col] - 1] = col - 1
    return match


def matching_weight(weights: np.ndarray, match: list[int]) -> float:
    w = np.asarray(weights, dtype=float)
    return float(sum(w[i, j] for i, j in enumerate(match)))
