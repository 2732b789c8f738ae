"""Word-level scoring: Levenshtein, cpWER, ORC-WER and WDER."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np

from diartool.errors import BudgetExceededError, InputError, InvariantError
from diartool.io import TranscriptSegment
from diartool.metrics.assignment import min_cost_assignment

MAX_ORC_CHANNELS = 4
# float cells held by the ORC-WER backward tables
ORC_TABLE_BUDGET = 50_000_000


class EditCounts(NamedTuple):
    distance: int
    insertions: int
    deletions: int
    substitutions: int


@dataclass(frozen=True)
class WerReport:
    insertions: int
    deletions: int
    substitutions: int
    ref_words: int
    assignment: Any = None

    @property
    def errors(self) -> int:
        return self.insertions + self.deletions + self.substitutions

    @property
    def rate(self) -> float:
        if self.ref_words == 0:
            return 0.0 if self.errors == 0 else float("inf")
        return self.errors / self.ref_words

    def to_dict(self) -> dict:
        return {
            "insertions": self.insertions,
            "deletions": self.deletions,
            "substitutions": self.substitutions,
            "errors": self.errors,
            "ref_words": self.ref_words,
            "rate": _json_rate(self.rate),
            "assignment": self.assignment,
        }


@dataclass(frozen=True)
class WderReport:
    correct_words: int
    speaker_errors: int
    details: dict = field(default_factory=dict, compare=False)

    @property
    def rate(self) -> float:
        return self.speaker_errors / self.correct_words if self.correct_words else 0.0

    def to_dict(self) -> dict:
        return {
            "correct_words": self.correct_words,
            "speaker_errors": self.speaker_errors,
            "rate": self.rate,
            **self.details,
        }


def _json_rate(x: float) -> float | None:
    return None if x == float("inf") else x


# --------------------------------------------------------------- Levenshtein


def _encode(*seqs: Sequence[str]) -> list[np.ndarray]:
    vocab: dict[str, int] = {}
    return [
        np.array([vocab.setdefault(w, len(vocab)) for w in s], dtype=np.int64)
        for s in seqs
    ]


def _prefix_min_closure(row: np.ndarray) -> np.ndarray:
    """Apply ``d[j] = min(d[j], d[j-1] + 1)`` along the last axis."""
    ramp = np.arange(row.shape[-1], dtype=row.dtype)
    return np.minimum.accumulate(row - ramp, axis=-1) + ramp


def _edit_table(ref: np.ndarray, hyp: np.ndarray) -> np.ndarray:
    n, m = len(ref), len(hyp)
    table = np.empty((n + 1, m + 1), dtype=np.int64)
    table[0] = np.arange(m + 1)
    for i in range(1, n + 1):
        row = table[i - 1] + 1
        row[1:] = np.minimum(row[1:], table[i - 1, :-1] + (hyp != ref[i - 1]))
        table[i] = _prefix_min_closure(row)
    return table


def align(ref: Sequence[str], hyp: Sequence[str]) -> list[tuple[str, int | None, int | None]]:
    """Minimum-edit alignment as a list of ``(op, ref_index, hyp_index)``.

    ``op`` is one of ``"C"`` (correct), ``"S"``, ``"I"``, ``"D"``. When several
    scripts have the same cost the traceback prefers the diagonal move, then
    insertion, then deletion, so the I/D/S split is deterministic.
    """
    r, h = _encode(ref, hyp)
    table = _edit_table(r, h)
    i, j = len(r), len(h)
    ops: list[tuple[str, int | None, int | None]] = []
    while i > 0 or j > 0:
        here = table[i, j]
        if i > 0 and j > 0:
            same = r[i - 1] == h[j - 1]
            if table[i - 1, j - 1] + (0 if same else 1) == here:
                ops.append(("C" if same else "S", i - 1, j - 1))
                i, j = i - 1, j - 1
                continue
        if j > 0 and table[i, j - 1] + 1 == here:
            ops.append(("I", None, j - 1))
            j -= 1
        else:
            ops.append(("D", i - 1, None))
            i -= 1
    ops.reverse()
    return ops


def levenshtein(ref: Sequence[str], hyp: Sequence[str]) -> EditCounts:
    ops = align(ref, hyp)
    ins = sum(op == "I" for op, _, _ in ops)
    dels = sum(op == "D" for op, _, _ in ops)
    subs = sum(op == "S" for op, _, _ in ops)
    return EditCounts(ins + dels + subs, ins, dels, subs)


def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> int:
    if not ref or not hyp:
        return len(ref) + len(hyp)
    r, h = _encode(ref, hyp)
    return int(_edit_table(r, h)[-1, -1])


# ----------------------------------------------------------------------- cpWER


def _speaker_streams(segments: Sequence[TranscriptSegment]) -> dict[str, list[str]]:
    streams: dict[str, list[str]] = {}
    for seg in sorted(segments, key=lambda s: (s.start, s.end)):
        streams.setdefault(seg.speaker, []).extend(seg.words)
    return dict(sorted(streams.items()))


def compute_cpwer(
    ref_segments: Sequence[TranscriptSegment], hyp_segments: Sequence[TranscriptSegment]
) -> WerReport:
    """Concatenated minimum-permutation WER.

    The two speaker lists are padded with empty transcripts to equal length,
    so an unmatched reference speaker costs all of its words as deletions and
    an unmatched hypothesis speaker all of its words as insertions.
    ``assignment`` lists ``[ref_speaker, hyp_speaker]`` pairs, with ``None``
    standing for a padding speaker.
    """
    ref = _speaker_streams(ref_segments)
    hyp = _speaker_streams(hyp_segments)
    ref_spk: list[str | None] = list(ref)
    hyp_spk: list[str | None] = list(hyp)
    n = max(len(ref_spk), len(hyp_spk))
    ref_spk += [None] * (n - len(ref_spk))
    hyp_spk += [None] * (n - len(hyp_spk))

    def words(side: dict[str, list[str]], spk: str | None) -> list[str]:
        return [] if spk is None else side[spk]

    cost = np.array(
        [[edit_distance(words(ref, r), words(hyp, h)) for h in hyp_spk] for r in ref_spk],
        dtype=float,
    ).reshape(n, n)
    perm = min_cost_assignment(cost)

    ins = dels = subs = 0
    pairs = []
    for i, j in enumerate(perm):
        r, h = ref_spk[i], hyp_spk[j]
        if r is None and h is None:
            continue
        e = levenshtein(words(ref, r), words(hyp, h))
        ins, dels, subs = ins + e.insertions, dels + e.deletions, subs + e.substitutions
        pairs.append([r, h])
    ref_words = sum(len(w) for w in ref.values())
    return WerReport(ins, dels, subs, ref_words, assignment=pairs)


# ---------------------------------------------------------------------- ORC-WER


def _segment_pass(
    init: np.ndarray, seg: np.ndarray, hyp: np.ndarray, axis: int
) -> np.ndarray:
    """Min-plus transfer of a cost grid through one reference segment.

    ``init`` holds the cost of reaching each grid point (hypothesis position
    per channel) before the segment; the result holds the cost of reaching
    each grid point after aligning the whole segment against channel
    ``axis``. Other channels' positions are untouched.
    """
    d = np.moveaxis(init, axis, -1)
    d = _prefix_min_closure(d)
    for tok in seg:
        new = d + 1.0
        new[..., 1:] = np.minimum(new[..., 1:], d[..., :-1] + (hyp != tok))
        d = _prefix_min_closure(new)
    return np.moveaxis(d, -1, axis)


def _tail_insertions(lengths: Sequence[int]) -> np.ndarray:
    grid = np.zeros([n + 1 for n in lengths])
    for c, n in enumerate(lengths):
        shape = [1] * len(lengths)
        shape[c] = n + 1
        grid = grid + (n - np.arange(n + 1)).reshape(shape)
    return grid


def _flip_all(a: np.ndarray) -> np.ndarray:
    return a[tuple(slice(None, None, -1) for _ in range(a.ndim))]


def _orc_search(
    segments: Sequence[Sequence[str]], channels: Sequence[Sequence[str]]
) -> tuple[int, list[int]]:
    encoded = _encode(*segments, *channels)
    segs, hyps = encoded[: len(segments)], encoded[len(segments):]
    lengths = [len(h) for h in hyps]
    grid_size = int(np.prod([n + 1 for n in lengths]))
    if grid_size * (len(segs) + 1) > ORC_TABLE_BUDGET:
        raise BudgetExceededError(
            f"ORC-WER table of {grid_size} x {len(segs) + 1} cells exceeds the budget; "
            "split the session into utterance groups"
        )

    # cost-to-go tables, computed on the reversed problem
    rev_hyps = [h[::-1] for h in hyps]
    tail = _tail_insertions(lengths)
    to_go = [tail]
    g = tail
    for seg in reversed(segs):
        flipped = _flip_all(g)
        g = _flip_all(
            np.minimum.reduce(
                [_segment_pass(flipped, seg[::-1], rev_hyps[c], c) for c in range(len(hyps))]
            )
        )
        to_go.append(g)
    to_go.reverse()
    best = to_go[0].flat[0]

    # forward pass fixing the lexicographically smallest optimal channel
    so_far = np.full(to_go[0].shape, np.inf)
    so_far.flat[0] = 0.0
    assignment = []
    for n, seg in enumerate(segs):
        for c in range(len(hyps)):
            reach = _segment_pass(so_far, seg, hyps[c], c)
            on_path = reach + to_go[n + 1] == best
            if on_path.any():
                assignment.append(c)
                so_far = np.where(on_path, reach, np.inf)
                break
        else:
            raise InvariantError("ORC-WER traceback lost the optimal path")
    return int(best), assignment


def _check_sorted(ref_segments: Sequence[TranscriptSegment]) -> None:
    for a, b in zip(ref_segments, ref_segments[1:]):
        if b.start < a.start:
            raise InputError(
                f"reference segments must be sorted by start time ({a.start} > {b.start})"
            )


def compute_orcwer(
    ref_segments: Sequence[TranscriptSegment], hyp_channels: Sequence[Sequence[str]]
) -> WerReport:
    """Optimal reference combination WER.

    Each reference segment is assigned to one hypothesis channel; the score is
    the minimum over assignments of the summed per-channel edit distance
    between the channel output and the concatenation of its segments. The
    minimum is found with a multi-dimensional Levenshtein recursion over
    (segment, per-channel position) rather than by enumerating assignments.
    ``assignment`` gives the channel index for every segment; among optimal
    assignments the lexicographically smallest is reported.
    """
    if not hyp_channels:
        raise InputError("ORC-WER needs at least one hypothesis channel")
    if len(hyp_channels) > MAX_ORC_CHANNELS:
        raise InputError(
            f"ORC-WER supports at most {MAX_ORC_CHANNELS} channels, got {len(hyp_channels)}"
        )
    _check_sorted(ref_segments)
    segments = [seg.words for seg in ref_segments]
    distance, assignment = _orc_search(segments, hyp_channels)

    ins = dels = subs = 0
    for c, hyp in enumerate(hyp_channels):
        ref_words = [w for seg, a in zip(segments, assignment) if a == c for w in seg]
        e = levenshtein(ref_words, list(hyp))
        ins, dels, subs = ins + e.insertions, dels + e.deletions, subs + e.substitutions
    if ins + dels + subs != distance:
        raise InvariantError(
            f"ORC-WER traceback gives {ins + dels + subs} edits, search gave {distance}"
        )
    return WerReport(ins, dels, subs, sum(len(s) for s in segments), assignment=assignment)


# ------------------------------------------------------------------------- WDER


def hypothesis_channels(
    hyp_segments: Sequence[TranscriptSegment],
) -> tuple[list[str], list[list[tuple[str, str]]]]:
    """Group hypothesis words into channels, each word tagged with its speaker.

    The channel of a segment is its ``channel`` field, falling back to the
    speaker label. Channels are returned in sorted name order.
    """
    chans: dict[str, list[tuple[str, str]]] = {}
    for seg in sorted(hyp_segments, key=lambda s: (s.start, s.end)):
        key = seg.channel if seg.channel is not None else seg.speaker
        chans.setdefault(key, []).extend((w, seg.speaker) for w in seg.words)
    names = sorted(chans)
    return names, [chans[n] for n in names]


def compute_wder(
    ref_segments: Sequence[TranscriptSegment],
    hyp_segments: Sequence[TranscriptSegment],
) -> WderReport:
    """Fraction of correctly recognised words that carry the wrong speaker.

    Correct words come from the alignment under the ORC-WER segment-to-channel
    assignment; a correct word counts as a speaker error when its hypothesis
    speaker does not map onto its reference speaker under the cpWER speaker
    assignment.
    """
    ordered = sorted(ref_segments, key=lambda s: (s.start, s.end))
    names, channels = hypothesis_channels(hyp_segments)
    if not channels:
        return WderReport(0, 0, {"channels": []})
    orc = compute_orcwer(ordered, [[w for w, _ in ch] for ch in channels])
    cp = compute_cpwer(ordered, hyp_segments)
    hyp_to_ref = {h: r for r, h in cp.assignment if h is not None}

    correct = errors = 0
    for c, chan in enumerate(channels):
        ref_words = [
            (w, seg.speaker)
            for seg, a in zip(ordered, orc.assignment)
            if a == c
            for w in seg.words
        ]
        for op, i, j in align([w for w, _ in ref_words], [w for w, _ in chan]):
            if op == "C":
                correct += 1
                if hyp_to_ref.get(chan[j][1]) != ref_words[i][1]:
                    errors += 1
    return WderReport(
        correct,
        errors,
        {"channels": names, "orc_assignment": orc.assignment, "speaker_mapping": cp.assignment},
    )
