"""Time-interval data model shared by every other module.

All times are integer ticks of 0.1 ms so that boundary pooling and duration
sums are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from typing import Iterable, Sequence

from diartool.errors import FormatError, InputError

TICKS_PER_SECOND = 10_000

Interval = tuple[int, int]


def quantize_time(seconds: float | str | Decimal) -> int:
    """Convert seconds to ticks, rounding half-up.

    Strings and ``Decimal`` are converted without going through binary
    floating point, so ``"0.00005"`` rounds up to one tick.
    """
    try:
        if isinstance(seconds, float):
            if not math.isfinite(seconds):
                raise FormatError(f"time must be finite, got {seconds!r}")
            value = Decimal(repr(seconds))
        else:
            value = Decimal(seconds)
    except (InvalidOperation, ValueError, TypeError) as exc:
        raise FormatError(f"not a time value: {seconds!r}") from exc
    if not value.is_finite():
        raise FormatError(f"time must be finite, got {seconds!r}")
    if value < 0:
        raise FormatError(f"time must be non-negative, got {seconds!r}")
    return int((value * TICKS_PER_SECOND).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def to_seconds(ticks: int) -> Decimal:
    return Decimal(ticks) / TICKS_PER_SECOND


@dataclass(frozen=True, order=True)
class Turn:
    """One labeled speech interval. Ordering is the canonical (start, end, speaker)."""

    start: int
    end: int
    speaker: str
    session: str = field(compare=False)

    def __post_init__(self) -> None:
        if self.start < 0:
            raise InputError(f"turn start must be non-negative: {self}")
        if self.end <= self.start:
            raise InputError(f"turn end must exceed start: {self}")

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class Timeline:
    """All turns of one session, held in canonical order. Overlaps are allowed."""

    session: str
    turns: tuple[Turn, ...] = ()

    def __post_init__(self) -> None:
        turns = tuple(sorted(self.turns))
        for t in turns:
            if t.session != self.session:
                raise InputError(
                    f"turn from session {t.session!r} in timeline {self.session!r}"
                )
        object.__setattr__(self, "turns", turns)

    @classmethod
    def from_tuples(
        cls, session: str, items: Iterable[tuple[str, int, int]]
    ) -> "Timeline":
        """Build from ``(speaker, start, end)`` triples."""
        return cls(session, tuple(Turn(s, e, spk, session) for spk, s, e in items))

    @property
    def speakers(self) -> list[str]:
        return sorted({t.speaker for t in self.turns})

    def relabel(self, mapping: dict[str, str]) -> "Timeline":
        return Timeline(
            self.session,
            tuple(Turn(t.start, t.end, mapping[t.speaker], t.session) for t in self.turns),
        )

    def __len__(self) -> int:
        return len(self.turns)


@dataclass(frozen=True)
class SpeakerActivity:
    speaker: str
    intervals: tuple[Interval, ...]

    @property
    def duration(self) -> int:
        return sum(e - s for s, e in self.intervals)


@dataclass(frozen=True)
class Region:
    start: int
    end: int
    per_hypothesis_speakers: tuple[frozenset[str], ...]

    @property
    def duration(self) -> int:
        return self.end - self.start


def merge_intervals(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    """Union of half-open intervals; touching intervals are joined."""
    out: list[list[int]] = []
    for s, e in sorted(intervals):
        if out and s <= out[-1][1]:
            if e > out[-1][1]:
                out[-1][1] = e
        else:
            out.append([s, e])
    return tuple((s, e) for s, e in out)


def intersection_length(a: Sequence[Interval], b: Sequence[Interval]) -> int:
    """Total overlap between two sorted, disjoint interval lists."""
    i = j = total = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if hi > lo:
            total += hi - lo
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return total


def subtract_intervals(
    a: Sequence[Interval], b: Sequence[Interval]
) -> tuple[Interval, ...]:
    """``a`` minus ``b``; both sorted and disjoint."""
    out: list[Interval] = []
    j = 0
    for s, e in a:
        cur = s
        while j < len(b) and b[j][1] <= cur:
            j += 1
        k = j
        while k < len(b) and b[k][0] < e:
            if b[k][0] > cur:
                out.append((cur, b[k][0]))
            cur = max(cur, b[k][1])
            k += 1
        if cur < e:
            out.append((cur, e))
    return tuple(out)


def speaker_activities(tl: Timeline) -> list[SpeakerActivity]:
    by_speaker: dict[str, list[Interval]] = {}
    for t in tl.turns:
        by_speaker.setdefault(t.speaker, []).append((t.start, t.end))
    return [
        SpeakerActivity(spk, merge_intervals(iv)) for spk, iv in sorted(by_speaker.items())
    ]


def build_regions(hyps: Sequence[Timeline]) -> list[Region]:
    """Split the covered span at every pooled turn boundary.

    Stretches where no hypothesis has speech are skipped, so the regions tile
    the union of all turn spans.
    """
    if not hyps:
        raise InputError("build_regions needs at least one timeline")
    sessions = {h.session for h in hyps}
    if len(sessions) > 1:
        raise InputError(f"mixed sessions: {sorted(sessions)}")

    # per hypothesis: boundary -> (speakers starting, speakers ending)
    events: dict[int, list[tuple[int, int, str]]] = {}
    for k, hyp in enumerate(hyps):
        for act in speaker_activities(hyp):
            for s, e in act.intervals:
                events.setdefault(s, []).append((k, +1, act.speaker))
                events.setdefault(e, []).append((k, -1, act.speaker))

    active: list[dict[str, int]] = [{} for _ in hyps]
    regions: list[Region] = []
    times = sorted(events)
    for t0, t1 in zip(times, times[1:] + [None]):
        for k, delta, spk in events[t0]:
            n = active[k].get(spk, 0) + delta
            if n:
                active[k][spk] = n
            else:
                active[k].pop(spk, None)
        if t1 is None:
            break
        if any(active):
            regions.append(Region(t0, t1, tuple(frozenset(a) for a in active)))
    return regions


def timeline_from_regions(
    session: str, labeled: Iterable[tuple[int, int, Iterable[str]]]
) -> Timeline:
    """Turn per-region label sets into turns, joining adjacent equal labels."""
    per_speaker: dict[str, list[Interval]] = {}
    for start, end, labels in labeled:
        for spk in labels:
            per_speaker.setdefault(spk, []).append((start, end))
    turns = [
        Turn(s, e, spk, session)
        for spk, iv in per_speaker.items()
        for s, e in merge_intervals(iv)
    ]
    return Timeline(session, tuple(turns))
