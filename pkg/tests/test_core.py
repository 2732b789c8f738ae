from __future__ import annotations

from decimal import Decimal

import pytest

from diartool.core import (
    Timeline,
    Turn,
    build_regions,
    intersection_length,
    merge_intervals,
    quantize_time,
    speaker_activities,
    subtract_intervals,
    timeline_from_regions,
    to_seconds,
)
from diartool.errors import FormatError, InputError


@pytest.mark.parametrize(
    "value,ticks",
    [
        ("0", 0),
        ("1.5", 15000),
        ("0.00005", 1),  # exact half rounds up
        ("0.00004999", 0),
        (0.1, 1000),
        (Decimal("2.34565"), 23457),
        (3, 30000),
    ],
)
def test_quantize(value, ticks):
    assert quantize_time(value) == ticks


@pytest.mark.parametrize("bad", ["-1", "nan", "inf", "abc", float("nan"), -0.5])
def test_quantize_rejects(bad):
    with pytest.raises(FormatError):
        quantize_time(bad)


def test_to_seconds_inverse():
    for t in (0, 1, 9999, 123456):
        assert quantize_time(to_seconds(t)) == t


def test_turn_validation():
    with pytest.raises(InputError):
        Turn(5, 5, "A", "s")
    with pytest.raises(InputError):
        Turn(-1, 5, "A", "s")


def test_timeline_canonical_order_and_session_check():
    tl = Timeline.from_tuples("s", [("B", 5, 9), ("A", 5, 9), ("A", 0, 3)])
    assert [(t.start, t.speaker) for t in tl.turns] == [(0, "A"), (5, "A"), (5, "B")]
    assert tl.speakers == ["A", "B"]
    with pytest.raises(InputError):
        Timeline("s", (Turn(0, 1, "A", "other"),))


def test_merge_and_intersection():
    assert merge_intervals([(5, 7), (0, 2), (2, 3), (6, 9)]) == ((0, 3), (5, 9))
    assert intersection_length([(0, 10)], [(2, 4), (8, 12)]) == 4
    assert subtract_intervals([(0, 10)], [(2, 4), (8, 12)]) == ((0, 2), (4, 8))


def test_speaker_activities_merge_same_speaker():
    tl = Timeline.from_tuples("s", [("A", 0, 5), ("A", 3, 8), ("B", 1, 2)])
    acts = speaker_activities(tl)
    assert [(a.speaker, a.intervals) for a in acts] == [("A", ((0, 8),)), ("B", ((1, 2),))]
    assert acts[0].duration == 8


def test_build_regions_tiles_union_and_skips_silence():
    h1 = Timeline.from_tuples("s", [("A", 0, 10), ("B", 5, 15)])
    h2 = Timeline.from_tuples("s", [("x", 20, 30)])
    regions = build_regions([h1, h2])
    assert [(r.start, r.end) for r in regions] == [(0, 5), (5, 10), (10, 15), (20, 30)]
    assert regions[1].per_hypothesis_speakers == (frozenset({"A", "B"}), frozenset())
    with pytest.raises(InputError):
        build_regions([h1, Timeline.from_tuples("t", [("A", 0, 1)])])


def test_timeline_from_regions_joins_adjacent():
    tl = timeline_from_regions("s", [(0, 5, ["A"]), (5, 9, ["A", "B"]), (12, 13, ["A"])])
    assert [(t.speaker, t.start, t.end) for t in tl.turns] == [
        ("A", 0, 9), ("B", 5, 9), ("A", 12, 13)
    ]
