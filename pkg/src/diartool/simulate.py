"""Fit pause and overlap statistics from sessions and generate synthetic sessions.

Generated sessions are metadata only: a list of utterance placements on a
timeline. They serve as deterministic fixtures for scoring and combination.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from diartool.core import TICKS_PER_SECOND, Timeline, Turn, quantize_time
from diartool.errors import FormatError, InputError

BIN_WIDTH = 0.1


@dataclass(frozen=True)
class Histogram:
    """Empirical distribution of non-negative durations in seconds.

    Sampling picks a bin in proportion to its count and then a uniform point
    inside it. A histogram built with :meth:`constant` always returns its
    value; an empty one returns 0.
    """

    bins: tuple[int, ...] = ()
    counts: tuple[int, ...] = ()
    bin_width: float = BIN_WIDTH
    point: float | None = None

    @classmethod
    def from_samples(cls, samples: Iterable[float], bin_width: float = BIN_WIDTH) -> "Histogram":
        tally: dict[int, int] = {}
        for x in samples:
            if x < 0:
                raise InputError(f"histogram samples must be non-negative, got {x}")
            # the small guard keeps exact multiples such as 0.3 in their own bin
            b = int(math.floor(x / bin_width + 1e-9))
            tally[b] = tally.get(b, 0) + 1
        keys = tuple(sorted(tally))
        return cls(keys, tuple(tally[b] for b in keys), bin_width)

    @classmethod
    def constant(cls, value: float) -> "Histogram":
        if value < 0:
            raise InputError(f"constant duration must be non-negative, got {value}")
        return cls(point=float(value))

    @property
    def n(self) -> int:
        return sum(self.counts)

    @property
    def empty(self) -> bool:
        return self.point is None and not self.counts

    def sample(self, rng: np.random.Generator) -> float:
        if self.point is not None:
            return self.point
        if not self.counts:
            return 0.0
        p = np.asarray(self.counts, dtype=float)
        b = self.bins[int(rng.choice(len(p), p=p / p.sum()))]
        return (b + float(rng.random())) * self.bin_width

    def to_dict(self) -> dict:
        if self.point is not None:
            return {"constant": self.point}
        return {
            "bin_width": self.bin_width,
            "bins": list(self.bins),
            "counts": list(self.counts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Histogram":
        if "constant" in d:
            return cls.constant(float(d["constant"]))
        bins, counts = d.get("bins", []), d.get("counts", [])
        if len(bins) != len(counts) or any(c < 0 for c in counts):
            raise FormatError("histogram needs matching bins and non-negative counts")
        return cls(tuple(int(b) for b in bins), tuple(int(c) for c in counts),
                   float(d.get("bin_width", BIN_WIDTH)))


@dataclass(frozen=True)
class ConversationStats:
    same_speaker_pause: Histogram
    diff_speaker_pause: Histogram
    overlap_duration: Histogram
    p_overlap: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_overlap <= 1.0:
            raise InputError(f"p_overlap must lie in [0, 1], got {self.p_overlap}")

    @classmethod
    def fixed(cls, same: float, diff: float, overlap: float, p_overlap: float) -> "ConversationStats":
        return cls(
            Histogram.constant(same),
            Histogram.constant(diff),
            Histogram.constant(overlap),
            p_overlap,
        )

    def to_dict(self) -> dict:
        return {
            "same_speaker_pause": self.same_speaker_pause.to_dict(),
            "diff_speaker_pause": self.diff_speaker_pause.to_dict(),
            "overlap_duration": self.overlap_duration.to_dict(),
            "p_overlap": self.p_overlap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConversationStats":
        try:
            return cls(
                Histogram.from_dict(d["same_speaker_pause"]),
                Histogram.from_dict(d["diff_speaker_pause"]),
                Histogram.from_dict(d["overlap_duration"]),
                float(d["p_overlap"]),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad stats document: {exc}") from exc


# Constant-parameter setting for simple two-party mixtures
AIMIX_STATS = ConversationStats.fixed(same=0.5, diff=0.5, overlap=1.0, p_overlap=0.8)


@dataclass(frozen=True)
class TransitionSamples:
    same: tuple[float, ...]
    diff: tuple[float, ...]
    overlap: tuple[float, ...]


def transition_samples(sessions: Sequence[Timeline]) -> TransitionSamples:
    """Classify the gap between every pair of consecutive turns, in seconds."""
    same: list[float] = []
    diff: list[float] = []
    ovl: list[float] = []
    for tl in sessions:
        turns = tl.turns
        for prev, cur in zip(turns, turns[1:]):
            t = (cur.start - prev.end) / TICKS_PER_SECOND
            if cur.speaker == prev.speaker:
                same.append(max(t, 0.0))
            elif t > 0:
                diff.append(t)
            else:
                ovl.append(-t)
    return TransitionSamples(tuple(same), tuple(diff), tuple(ovl))


def fit_stats(sessions: Sequence[Timeline], bin_width: float = BIN_WIDTH) -> ConversationStats:
    """Fit pause and overlap histograms from consecutive turns.

    Same-speaker gaps are recorded as pauses (negative gaps clipped to 0).
    Between different speakers a positive gap is a pause and anything else an
    overlap of length ``-gap``. ``p_overlap`` is the share of overlaps among
    speaker changes, 0 when there are none.
    """
    s = transition_samples(sessions)
    changes = len(s.diff) + len(s.overlap)
    return ConversationStats(
        Histogram.from_samples(s.same, bin_width),
        Histogram.from_samples(s.diff, bin_width),
        Histogram.from_samples(s.overlap, bin_width),
        len(s.overlap) / changes if changes else 0.0,
    )


# ------------------------------------------------------------- generation


@dataclass(frozen=True)
class Utterance:
    id: str
    speaker: str
    duration: int  # ticks

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise InputError(f"utterance {self.id!r} must have positive duration")


@dataclass(frozen=True)
class Placement:
    utterance: str
    speaker: str
    offset: int
    duration: int

    @property
    def end(self) -> int:
        return self.offset + self.duration


@dataclass(frozen=True)
class SimSession:
    session: str
    placements: tuple[Placement, ...]

    @property
    def timeline(self) -> Timeline:
        return Timeline(
            self.session,
            tuple(Turn(p.offset, p.end, p.speaker, self.session) for p in self.placements),
        )


def _place(
    chosen: Sequence[Utterance], stats: ConversationStats, rng: np.random.Generator
) -> list[Placement]:
    out: list[Placement] = []
    for u in chosen:
        if not out:
            offset = 0
        else:
            prev = out[-1]
            if u.speaker == prev.speaker:
                gap = quantize_time(stats.same_speaker_pause.sample(rng))
            elif rng.random() < stats.p_overlap:
                gap = -quantize_time(stats.overlap_duration.sample(rng))
            else:
                gap = max(quantize_time(stats.diff_speaker_pause.sample(rng)), 1)
            offset = max(prev.end + gap, prev.offset, 0)
        out.append(Placement(u.id, u.speaker, offset, u.duration))
    return out


def simulate(
    utterances: Sequence[Utterance],
    stats: ConversationStats,
    max_speakers: int,
    max_dur_per_speaker: float,
    seed: int = 0,
    num_speakers: Callable[[np.random.Generator, int], int] | None = None,
    prefix: str = "sim",
) -> list[SimSession]:
    """Group utterances into sessions and lay them out on a timeline.

    Utterances are bucketed by speaker. Each session draws a speaker count
    (uniform over 1..max_speakers unless ``num_speakers`` is given, and never
    more than the speakers left), then pulls random utterances of each chosen
    speaker while that speaker's total stays below ``max_dur_per_speaker``
    seconds, always at least one. The pooled utterances are shuffled and
    placed one after another, the gap to the previous one drawn from the
    same-speaker pause distribution or, for a speaker change, an overlap with
    probability ``p_overlap`` and a pause otherwise. This repeats until every
    utterance is used once.
    """
    if not utterances:
        raise InputError("no utterances to simulate from")
    if max_speakers < 1:
        raise InputError("max_speakers must be >= 1")
    if max_dur_per_speaker <= 0:
        raise InputError("max_dur_per_speaker must be positive")
    cap = quantize_time(max_dur_per_speaker)
    rng = np.random.default_rng(seed)

    buckets: dict[str, list[Utterance]] = {}
    for u in utterances:
        buckets.setdefault(u.speaker, []).append(u)

    sessions: list[SimSession] = []
    while True:
        live = sorted(s for s, b in buckets.items() if b)
        if not live:
            break
        k = num_speakers(rng, max_speakers) if num_speakers else int(rng.integers(1, max_speakers + 1))
        k = max(1, min(k, len(live)))
        speakers = [live[i] for i in sorted(rng.choice(len(live), size=k, replace=False))]
        chosen: list[Utterance] = []
        for spk in speakers:
            bucket = buckets[spk]
            total = 0
            while bucket and (total == 0 or total < cap):
                u = bucket.pop(int(rng.integers(len(bucket))))
                chosen.append(u)
                total += u.duration
        order = rng.permutation(len(chosen))
        placements = _place([chosen[i] for i in order], stats, rng)
        sessions.append(SimSession(f"{prefix}_{len(sessions):05d}", tuple(placements)))
    return sessions


def empirical_overlap(sessions: Sequence[SimSession]) -> tuple[int, int]:
    """Count ``(overlaps, speaker changes)`` between consecutive placements."""
    overlaps = changes = 0
    for s in sessions:
        for prev, cur in zip(s.placements, s.placements[1:]):
            if cur.speaker != prev.speaker:
                changes += 1
                overlaps += cur.offset <= prev.end
    return overlaps, changes


# --------------------------------------------------------------------- files


def _seconds(ticks: int) -> float:
    return ticks / TICKS_PER_SECOND


def _lines(data: bytes | str) -> Iterable[tuple[int, dict]]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise FormatError(f"line {lineno}: expected a JSON object")
        yield lineno, obj


def parse_inventory(data: bytes | str) -> list[Utterance]:
    """Read utterances from JSONL with keys ``id``, ``speaker`` and ``duration`` (seconds)."""
    out = []
    for lineno, obj in _lines(data):
        missing = [k for k in ("id", "speaker", "duration") if k not in obj]
        if missing:
            raise FormatError(f"line {lineno}: missing keys {missing}")
        try:
            dur = quantize_time(obj["duration"])
            out.append(Utterance(str(obj["id"]), str(obj["speaker"]), dur))
        except (FormatError, InputError) as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
    return out


def write_inventory(utterances: Iterable[Utterance]) -> bytes:
    return "".join(
        json.dumps({"id": u.id, "speaker": u.speaker, "duration": _seconds(u.duration)}) + "\n"
        for u in utterances
    ).encode("utf-8")


def write_manifest(sessions: Iterable[SimSession]) -> bytes:
    lines = []
    for s in sessions:
        for p in s.placements:
            lines.append(json.dumps({
                "session": s.session,
                "utterance": p.utterance,
                "speaker": p.speaker,
                "offset": _seconds(p.offset),
                "duration": _seconds(p.duration),
            }) + "\n")
    return "".join(lines).encode("utf-8")


def parse_manifest(data: bytes | str) -> list[SimSession]:
    """Read placements back; sessions keep their order of first appearance."""
    grouped: dict[str, list[Placement]] = {}
    for lineno, obj in _lines(data):
        missing = [k for k in ("session", "utterance", "speaker", "offset", "duration") if k not in obj]
        if missing:
            raise FormatError(f"line {lineno}: missing keys {missing}")
        try:
            p = Placement(
                str(obj["utterance"]),
                str(obj["speaker"]),
                quantize_time(obj["offset"]),
                quantize_time(obj["duration"]),
            )
        except FormatError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        if p.duration <= 0:
            raise FormatError(f"line {lineno}: duration must be positive")
        grouped.setdefault(str(obj["session"]), []).append(p)
    return [SimSession(sid, tuple(ps)) for sid, ps in grouped.items()]
