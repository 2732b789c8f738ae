"""Readers and writers for RTTM, transcript JSONL, affinity CSV and label JSON."""

from __future__ import annotations

import csv
import io as _io
import json
import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

import numpy as np

from diartool.core import Timeline, Turn, quantize_time
from diartool.errors import FormatError, InputError


def _text(data: bytes | str) -> str:
    return data.decode("utf-8") if isinstance(data, bytes) else data


# --------------------------------------------------------------------- RTTM


def parse_rttm(data: bytes | str) -> list[Timeline]:
    """Parse RTTM ``SPEAKER`` lines into one timeline per file id.

    Lines that do not start with ``SPEAKER`` are skipped. Timelines come back
    in order of first appearance of their file id.
    """
    turns: dict[str, list[Turn]] = {}
    for lineno, line in enumerate(_text(data).splitlines(), start=1):
        fields = line.split()
        if not fields or fields[0] != "SPEAKER":
            continue
        if len(fields) < 10:
            raise FormatError(
                f"line {lineno}: expected 10 fields, got {len(fields)}: {line!r}"
            )
        session, tbeg, tdur, speaker = fields[1], fields[3], fields[4], fields[7]
        try:
            start = quantize_time(tbeg)
            dur = Decimal(tdur)
        except (FormatError, ArithmeticError) as exc:
            raise FormatError(f"line {lineno}: bad time field: {exc}") from exc
        if not dur.is_finite() or dur <= 0:
            raise FormatError(f"line {lineno}: duration must be positive, got {tdur}")
        end = start + quantize_time(dur)
        if end <= start:
            raise FormatError(f"line {lineno}: duration {tdur} rounds to zero ticks")
        turns.setdefault(session, []).append(Turn(start, end, speaker, session))
    return [Timeline(sid, tuple(ts)) for sid, ts in turns.items()]


def _ms(ticks: int) -> int:
    return int((Decimal(ticks) / 10).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def _fmt_ms(ms: int) -> str:
    return f"{ms // 1000}.{ms % 1000:03d}"


def write_rttm(timelines: Iterable[Timeline]) -> bytes:
    lines = []
    for tl in timelines:
        for t in tl.turns:
            start = _ms(t.start)
            # sub-millisecond turns would otherwise be written with zero duration
            dur = max(_ms(t.end) - start, 1)
            lines.append(
                f"SPEAKER {tl.session} 1 {_fmt_ms(start)} {_fmt_ms(dur)} "
                f"<NA> <NA> {t.speaker} <NA> <NA>\n"
            )
    return "".join(lines).encode("utf-8")


# --------------------------------------------------------------- transcripts


@dataclass(frozen=True)
class TranscriptSegment:
    session: str
    speaker: str
    start: int
    end: int
    text: str
    channel: str | None = None

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise InputError(f"segment end must exceed start: {self}")

    @property
    def words(self) -> list[str]:
        return self.text.split()


_SEGMENT_KEYS = ("session", "speaker", "start", "end", "text")


def parse_transcripts(data: bytes | str) -> list[TranscriptSegment]:
    """Parse JSONL with keys session, speaker, start, end (seconds) and text.

    An optional ``channel`` key names the output stream of a multi-channel
    hypothesis.
    """
    out = []
    for lineno, line in enumerate(_text(data).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {lineno}: invalid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise FormatError(f"line {lineno}: expected a JSON object")
        missing = [k for k in _SEGMENT_KEYS if k not in obj]
        if missing:
            raise FormatError(f"line {lineno}: missing keys {missing}")
        try:
            start, end = quantize_time(str(obj["start"])), quantize_time(str(obj["end"]))
        except FormatError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        if end <= start:
            raise FormatError(f"line {lineno}: start must be before end")
        channel = obj.get("channel")
        out.append(
            TranscriptSegment(
                session=str(obj["session"]),
                speaker=str(obj["speaker"]),
                start=start,
                end=end,
                text=str(obj["text"]),
                channel=None if channel is None else str(channel),
            )
        )
    return out


def write_transcripts(segments: Iterable[TranscriptSegment]) -> bytes:
    lines = []
    for seg in segments:
        obj = {
            "session": seg.session,
            "speaker": seg.speaker,
            "start": float(Decimal(seg.start) / 10_000),
            "end": float(Decimal(seg.end) / 10_000),
            "text": seg.text,
        }
        if seg.channel is not None:
            obj["channel"] = seg.channel
        lines.append(json.dumps(obj) + "\n")
    return "".join(lines).encode("utf-8")


# ------------------------------------------------------------------ affinity


@dataclass(frozen=True)
class AffinityInput:
    matrix: np.ndarray
    overlap_flags: np.ndarray | None = None

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise FormatError(f"affinity matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise FormatError("affinity matrix contains non-finite values")
        object.__setattr__(self, "matrix", m)
        if self.overlap_flags is not None:
            f = np.asarray(self.overlap_flags)
            if f.shape != (m.shape[0],):
                raise FormatError(
                    f"overlap flags length {f.size} does not match N={m.shape[0]}"
                )
            if not np.isin(f, (0, 1)).all():
                raise FormatError("overlap flags must be 0 or 1")
            object.__setattr__(self, "overlap_flags", f.astype(int))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def parse_affinity(csv_data: bytes | str, flags_data: bytes | str | None = None) -> AffinityInput:
    rows = []
    for lineno, row in enumerate(csv.reader(_io.StringIO(_text(csv_data))), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            values = [float(c) for c in row]
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in values):
            raise FormatError(f"line {lineno}: non-finite value")
        rows.append(values)
    widths = {len(r) for r in rows}
    if len(widths) > 1:
        raise FormatError(f"ragged affinity CSV: row widths {sorted(widths)}")
    if rows and len(rows) != len(rows[0]):
        raise FormatError(f"affinity CSV is {len(rows)}x{len(rows[0])}, expected square")
    matrix = np.array(rows, dtype=float).reshape(len(rows), len(rows))

    flags = None
    if flags_data is not None:
        try:
            flags = json.loads(_text(flags_data))
        except json.JSONDecodeError as exc:
            raise FormatError(f"overlap flags: invalid JSON: {exc.msg}") from exc
        if not isinstance(flags, list) or any(
            isinstance(f, bool) or f not in (0, 1) for f in flags
        ):
            raise FormatError("overlap flags must be a JSON array of 0/1")
        flags = np.array(flags, dtype=int)
    return AffinityInput(matrix, flags)


def write_affinity(matrix: np.ndarray) -> bytes:
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in np.asarray(matrix):
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue().encode("utf-8")


# -------------------------------------------------------------------- labels


def write_labels(labels: Sequence[Sequence[int]]) -> bytes:
    return (json.dumps({"labels": [sorted(int(x) for x in ls) for ls in labels]}) + "\n").encode()


def parse_labels(data: bytes | str) -> list[list[int]]:
    try:
        obj = json.loads(_text(data))
    except json.JSONDecodeError as exc:
        raise FormatError(f"labels: invalid JSON: {exc.msg}") from exc
    labels = obj.get("labels") if isinstance(obj, dict) else None
    if not isinstance(labels, list) or not all(
        isinstance(ls, list) and 1 <= len(ls) <= 2 for ls in labels
    ):
        raise FormatError('labels JSON must look like {"labels": [[int, ...], ...]}')
    return [[int(x) for x in ls] for ls in labels]
