from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment


def _optimal_cost(cost: np.ndarray) -> float:
    if cost.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def min_cost_assignment(cost: np.ndarray) -> list[int]:
    """Minimum-cost perfect assignment of a square matrix.

    Returns ``perm`` with row ``i`` assigned to column ``perm[i]``. Among all
    optimal assignments the lexicographically smallest ``perm`` is returned,
    which keeps reported mappings stable across runs and platforms. Costs are
    expected to be integral (tick counts, edit counts), so optimality is
    checked exactly.
    """
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    if cost.shape != (n, n):
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    target = _optimal_cost(cost)
    perm: list[int] = []
    used: set[int] = set()
    fixed = 0.0
    for i in range(n):
        rest_rows = list(range(i + 1, n))
        for j in range(n):
            if j in used:
                continue
            rest_cols = [c for c in range(n) if c not in used and c != j]
            sub = cost[np.ix_(rest_rows, rest_cols)]
            if fixed + cost[i, j] + _optimal_cost(sub) <= target + 1e-9:
                perm.append(j)
                used.add(j)
                fixed += cost[i, j]
                break
    return perm
