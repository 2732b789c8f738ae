from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diartool.core import Timeline, Turn
from diartool.errors import FormatError
from diartool.io import (
    AffinityInput,
    TranscriptSegment,
    parse_affinity,
    parse_labels,
    parse_rttm,
    parse_transcripts,
    write_affinity,
    write_labels,
    write_rttm,
    write_transcripts,
)

RTTM = """\
SPEAKER rec1 1 0.000 1.500 <NA> <NA> alice <NA> <NA>
SPEAKER rec1 1 1.000 2.000 <NA> <NA> bob <NA> <NA>
; a comment line
SPKR-INFO rec1 1 <NA> <NA> <NA> unknown alice <NA> <NA>
SPEAKER rec2 1 3.25 0.5 <NA> <NA> carol <NA> <NA>
"""


def test_parse_rttm_groups_sessions():
    tls = parse_rttm(RTTM)
    assert [t.session for t in tls] == ["rec1", "rec2"]
    assert [(t.speaker, t.start, t.end) for t in tls[0].turns] == [
        ("alice", 0, 15000), ("bob", 10000, 30000)
    ]
    assert tls[1].turns[0].end == 37500


@pytest.mark.parametrize(
    "line,msg",
    [
        ("SPEAKER rec 1 0.0 1.0 <NA> <NA> a <NA>", "expected 10 fields"),
        ("SPEAKER rec 1 x 1.0 <NA> <NA> a <NA> <NA>", "bad time"),
        ("SPEAKER rec 1 0.0 0 <NA> <NA> a <NA> <NA>", "positive"),
        ("SPEAKER rec 1 0.0 0.00001 <NA> <NA> a <NA> <NA>", "zero ticks"),
    ],
)
def test_parse_rttm_errors_carry_line_numbers(line, msg):
    with pytest.raises(FormatError, match=msg) as info:
        parse_rttm("\n" + line)
    assert "line 2" in str(info.value)


def test_write_rttm_millisecond_format():
    tl = Timeline.from_tuples("s", [("A", 12345, 23456)])
    assert write_rttm([tl]) == b"SPEAKER s 1 1.235 1.111 <NA> <NA> A <NA> <NA>\n"
    tiny = Timeline.from_tuples("s", [("A", 10, 12)])
    assert b" 0.001 0.001 " in write_rttm([tiny])


ms_turns = st.lists(
    st.tuples(st.sampled_from("ABCD"), st.integers(0, 5000), st.integers(1, 3000)),
    min_size=1,
    max_size=12,
)


@settings(max_examples=150, deadline=None)
@given(ms_turns)
def test_rttm_roundtrip_identity_on_ms_grid(items):
    tl = Timeline.from_tuples("s", [(spk, 10 * s, 10 * (s + d)) for spk, s, d in items])
    assert parse_rttm(write_rttm([tl])) == [tl]


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("AB"), st.integers(0, 50000), st.integers(1, 30000)),
                min_size=1, max_size=8))
def test_rttm_write_is_idempotent_off_grid(items):
    tl = Timeline.from_tuples("s", [(spk, s, s + d) for spk, s, d in items])
    once = write_rttm(parse_rttm(write_rttm([tl])))
    assert once == write_rttm(parse_rttm(once))


def test_transcripts_roundtrip_and_errors():
    segs = [
        TranscriptSegment("s", "A", 0, 15000, "hello there"),
        TranscriptSegment("s", "B", 5000, 9000, "hi", channel="0"),
    ]
    assert parse_transcripts(write_transcripts(segs)) == segs
    assert segs[0].words == ["hello", "there"]
    with pytest.raises(FormatError, match="line 1: missing keys"):
        parse_transcripts(json.dumps({"session": "s"}))
    with pytest.raises(FormatError, match="line 2: invalid JSON"):
        parse_transcripts(write_transcripts(segs[:1]).decode() + "{oops\n")
    with pytest.raises(FormatError, match="start must be before end"):
        parse_transcripts(json.dumps(
            {"session": "s", "speaker": "A", "start": 2, "end": 1, "text": "x"}))


def test_affinity_roundtrip_and_validation(nprng):
    m = nprng.random((5, 5))
    data = parse_affinity(write_affinity(m), "[0,1,0,0,1]")
    np.testing.assert_array_equal(data.matrix, m)
    assert data.overlap_flags.tolist() == [0, 1, 0, 0, 1]
    with pytest.raises(FormatError, match="square"):
        parse_affinity("1,2\n3,4\n5,6\n")
    with pytest.raises(FormatError, match="ragged"):
        parse_affinity("1,2\n3\n")
    with pytest.raises(FormatError, match="0/1"):
        parse_affinity("1,0\n0,1\n", "[0, 2]")
    with pytest.raises(FormatError, match="length"):
        AffinityInput(np.eye(2), np.array([0, 1, 1]))
    with pytest.raises(FormatError, match="non-finite"):
        parse_affinity("1,nan\n0,1\n")


def test_labels_roundtrip():
    labels = [[0], [2, 1], [1]]
    assert parse_labels(write_labels(labels)) == [[0], [1, 2], [1]]
    with pytest.raises(FormatError):
        parse_labels('{"labels": [[0, 1, 2]]}')
