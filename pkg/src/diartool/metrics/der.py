"""Overlap-aware diarization error rate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from diartool.core import (
    Interval,
    Timeline,
    merge_intervals,
    quantize_time,
    speaker_activities,
)
from diartool.errors import InputError
from diartool.metrics.assignment import min_cost_assignment


@dataclass(frozen=True)
class DerReport:
    """DER components in ticks of speaker time.

    ``total_ref_speech`` counts overlapped reference speech once per active
    speaker. ``mapping`` maps each mapped hypothesis speaker to its reference
    speaker.
    """

    missed: int
    false_alarm: int
    confusion: int
    total_ref_speech: int
    mapping: dict[str, str] = field(default_factory=dict)

    @property
    def total_error(self) -> int:
        return self.missed + self.false_alarm + self.confusion

    def _rate(self, x: int) -> float:
        if self.total_ref_speech == 0:
            return 0.0 if x == 0 else float("inf")
        return x / self.total_ref_speech

    @property
    def der(self) -> float:
        return self._rate(self.total_error)

    @property
    def rates(self) -> dict[str, float]:
        return {
            "missed": self._rate(self.missed),
            "false_alarm": self._rate(self.false_alarm),
            "confusion": self._rate(self.confusion),
            "der": self.der,
        }

    def to_dict(self) -> dict:
        return {
            "missed": self.missed,
            "false_alarm": self.false_alarm,
            "confusion": self.confusion,
            "total_ref_speech": self.total_ref_speech,
            "rates": {k: (None if v == float("inf") else v) for k, v in self.rates.items()},
            "mapping": self.mapping,
        }


def _excluded_spans(ref: Timeline, collar: int, ignore_overlap: bool) -> tuple[Interval, ...]:
    spans: list[Interval] = []
    if collar > 0:
        for t in ref.turns:
            for b in (t.start, t.end):
                spans.append((max(0, b - collar), b + collar))
    if ignore_overlap:
        spans.extend(
            (s, e) for s, e, speakers in _elementary(ref, None, ()) if len(speakers[0]) > 1
        )
    return merge_intervals(spans)


def _elementary(
    ref: Timeline, hyp: Timeline | None, excluded: tuple[Interval, ...]
) -> Iterator[tuple[int, int, tuple[frozenset[str], frozenset[str]]]]:
    """Yield scored ``(start, end, (ref_speakers, hyp_speakers))`` pieces."""
    events: dict[int, list[tuple[int, int, str]]] = {}
    sides = [ref] if hyp is None else [ref, hyp]
    for side, tl in enumerate(sides):
        for act in speaker_activities(tl):
            for s, e in act.intervals:
                events.setdefault(s, []).append((side, +1, act.speaker))
                events.setdefault(e, []).append((side, -1, act.speaker))
    for s, e in excluded:
        events.setdefault(s, []).append((-1, +1, ""))
        events.setdefault(e, []).append((-1, -1, ""))

    active: list[set[str]] = [set(), set()]
    blocked = 0
    times = sorted(events)
    for t0, t1 in zip(times, times[1:]):
        for side, delta, spk in events[t0]:
            if side < 0:
                blocked += delta
            elif delta > 0:
                active[side].add(spk)
            else:
                active[side].discard(spk)
        if blocked == 0 and (active[0] or active[1]):
            yield t0, t1, (frozenset(active[0]), frozenset(active[1]))


def compute_der(
    ref: Timeline,
    hyp: Timeline,
    collar_seconds: float = 0.0,
    ignore_overlap: bool = False,
) -> DerReport:
    """Score ``hyp`` against ``ref``.

    Speakers are mapped one-to-one so that total overlapped speaker time
    inside the scored area is maximal; this is the mapping that minimises
    confusion, since miss and false alarm do not depend on it. Ticks within
    ``collar_seconds`` of a reference turn boundary are not scored, and with
    ``ignore_overlap`` neither are ticks with more than one reference speaker.
    """
    if ref.session != hyp.session:
        raise InputError(f"session mismatch: {ref.session!r} vs {hyp.session!r}")
    excluded = _excluded_spans(ref, quantize_time(collar_seconds), ignore_overlap)
    pieces = list(_elementary(ref, hyp, excluded))

    ref_spk = ref.speakers
    hyp_spk = hyp.speakers
    n = max(len(ref_spk), len(hyp_spk))
    overlap = np.zeros((n, n), dtype=np.int64)
    r_index = {s: i for i, s in enumerate(ref_spk)}
    h_index = {s: i for i, s in enumerate(hyp_spk)}
    missed = false_alarm = total = 0
    for s, e, (rs, hs) in pieces:
        d = e - s
        total += d * len(rs)
        missed += d * max(0, len(rs) - len(hs))
        false_alarm += d * max(0, len(hs) - len(rs))
        for r in rs:
            for h in hs:
                overlap[r_index[r], h_index[h]] += d

    perm = min_cost_assignment(-overlap.T)
    mapping = {
        hyp_spk[h]: ref_spk[r]
        for h, r in enumerate(perm)
        if h < len(hyp_spk) and r < len(ref_spk)
    }

    confusion = 0
    for s, e, (rs, hs) in pieces:
        matched = sum(1 for h in hs if mapping.get(h) in rs)
        confusion += (e - s) * (min(len(rs), len(hs)) - matched)
    return DerReport(missed, false_alarm, confusion, total, mapping)
