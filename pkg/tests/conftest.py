from __future__ import annotations

import random

import numpy as np
import pytest

from diartool.core import Timeline

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_timeline(
    rng: random.Random,
    session: str = "s",
    n_speakers: int = 3,
    n_turns: int = 6,
    horizon: int = 60,
    prefix: str = "S",
) -> Timeline:
    items = []
    for _ in range(n_turns):
        s = rng.randrange(0, horizon - 1)
        e = rng.randrange(s + 1, min(horizon, s + horizon // 3) + 1)
        items.append((f"{prefix}{rng.randrange(n_speakers)}", s, e))
    return Timeline.from_tuples(session, items)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(1234)


@pytest.fixture
def nprng() -> np.random.Generator:
    return np.random.default_rng(1234)


def random_graph(nprng: np.random.Generator, K: int, C: int, sparsity: float = 0.3):
    """Random padded speaker graph with Jaccard-like weights in [0, 1)."""
    from diartool.doverlap.graph import SpeakerGraph

    sizes = [int(nprng.integers(1, C + 1)) for _ in range(K)]
    sizes[int(nprng.integers(K))] = C
    blocks = {}
    for k in range(K):
        for l in range(k + 1, K):
            w = nprng.random((sizes[k], sizes[l]))
            w[nprng.random(w.shape) < sparsity] = 0.0
            blocks[(k, l)] = w
    return SpeakerGraph.from_blocks(sizes, blocks)
