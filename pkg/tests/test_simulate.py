from __future__ import annotations

import random

import numpy as np
import pytest

from diartool.core import Timeline
from diartool.errors import FormatError, InputError
from diartool.simulate import (
    AIMIX_STATS,
    ConversationStats,
    Histogram,
    Utterance,
    empirical_overlap,
    fit_stats,
    parse_inventory,
    parse_manifest,
    simulate,
    transition_samples,
    write_inventory,
    write_manifest,
)

S = 10_000  # ticks per second


def tl(*items):
    return Timeline.from_tuples("s", [(spk, int(a * S), int(b * S)) for spk, a, b in items])


def test_fit_same_speaker_pause():
    st = fit_stats([tl(("A", 0, 5), ("A", 6, 10))])
    assert transition_samples([tl(("A", 0, 5), ("A", 6, 10))]).same == (1.0,)
    assert st.diff_speaker_pause.empty and st.overlap_duration.empty
    assert st.p_overlap == 0.0


def test_fit_overlap_only():
    s = transition_samples([tl(("A", 0, 5), ("B", 4, 8))])
    assert s.overlap == (1.0,) and not s.same and not s.diff
    assert fit_stats([tl(("A", 0, 5), ("B", 4, 8))]).p_overlap == 1.0


def test_fit_three_turn_trace():
    # A:[0,5] -> B:[6,8] is a 1 s pause; B:[6,8] -> A:[7,9] overlaps by 1 s
    s = transition_samples([tl(("A", 0, 5), ("B", 6, 8), ("A", 7, 9))])
    assert (s.same, s.diff, s.overlap) == ((), (1.0,), (1.0,))
    st = fit_stats([tl(("A", 0, 5), ("B", 6, 8), ("A", 7, 9))])
    assert st.p_overlap == 0.5
    assert st.diff_speaker_pause.bins == (10,) and st.overlap_duration.counts == (1,)


def test_fit_ignores_single_turn_sessions():
    st = fit_stats([tl(("A", 0, 1)), Timeline("e")])
    assert st.same_speaker_pause.empty and st.p_overlap == 0.0


def test_histogram_sampling_stays_in_bins(nprng):
    h = Histogram.from_samples([0.05, 0.31, 0.33, 2.0])
    assert h.bins == (0, 3, 20) and h.counts == (1, 2, 1)
    for _ in range(200):
        x = h.sample(nprng)
        assert any(b * 0.1 <= x < (b + 1) * 0.1 for b in h.bins)
    assert Histogram.constant(0.5).sample(nprng) == 0.5
    assert Histogram().sample(nprng) == 0.0
    with pytest.raises(InputError):
        Histogram.from_samples([-1.0])


def test_stats_dict_roundtrip():
    st = fit_stats([tl(("A", 0, 5), ("B", 6, 8), ("A", 7, 9), ("A", 9.5, 12))])
    assert ConversationStats.from_dict(st.to_dict()) == st
    assert ConversationStats.from_dict(AIMIX_STATS.to_dict()) == AIMIX_STATS
    with pytest.raises(FormatError):
        ConversationStats.from_dict({"p_overlap": 0.2})
    with pytest.raises(InputError):
        ConversationStats.fixed(0.1, 0.1, 0.1, 1.5)


def inventory(n=200, speakers=12, seed=0):
    rng = random.Random(seed)
    return [Utterance(f"u{i:04d}", f"spk{i % speakers}", rng.randint(5_000, 60_000)) for i in range(n)]


def test_single_utterance():
    out = simulate([Utterance("u", "A", 100)], AIMIX_STATS, 3, 10.0)
    assert len(out) == 1 and out[0].placements[0].offset == 0


def test_every_utterance_used_once_and_caps_hold():
    utts = inventory()
    T = 20.0
    out = simulate(utts, AIMIX_STATS, max_speakers=3, max_dur_per_speaker=T, seed=4)
    used = [p.utterance for s in out for p in s.placements]
    assert sorted(used) == sorted(u.id for u in utts)
    longest = max(u.duration for u in utts)
    for s in out:
        assert len({p.speaker for p in s.placements}) <= 3
        offsets = [p.offset for p in s.placements]
        assert offsets == sorted(offsets) and offsets[0] == 0
        per_spk = {}
        for p in s.placements:
            per_spk[p.speaker] = per_spk.get(p.speaker, 0) + p.duration
        assert all(v <= T * S + longest for v in per_spk.values())


def test_zero_overlap_probability_gives_no_overlap():
    st = ConversationStats(Histogram.from_samples([0.0, 0.2]), Histogram.from_samples([0.0, 0.4]),
                           Histogram.from_samples([1.0]), 0.0)
    for s in simulate(inventory(), st, 4, 30.0, seed=2):
        turns = s.timeline.turns
        assert all(b.start >= a.end for a, b in zip(turns, turns[1:]))


def test_fixed_speaker_count_override():
    out = simulate(inventory(speakers=6), AIMIX_STATS, 4, 15.0, seed=1,
                   num_speakers=lambda rng, K: 2)
    assert all(len({p.speaker for p in s.placements}) <= 2 for s in out)


def test_determinism_and_seed_sensitivity():
    a = write_manifest(simulate(inventory(), AIMIX_STATS, 3, 20.0, seed=9))
    b = write_manifest(simulate(inventory(), AIMIX_STATS, 3, 20.0, seed=9))
    c = write_manifest(simulate(inventory(), AIMIX_STATS, 3, 20.0, seed=10))
    assert a == b and a != c


def test_aimix_overlap_rate():
    out = simulate(inventory(3000, 20), AIMIX_STATS, 4, 30.0, seed=0)
    o, c = empirical_overlap(out)
    assert c > 1000 and abs(o / c - 0.8) < 0.04


def test_preconditions():
    with pytest.raises(InputError):
        simulate([], AIMIX_STATS, 2, 10.0)
    with pytest.raises(InputError):
        simulate(inventory(5), AIMIX_STATS, 0, 10.0)
    with pytest.raises(InputError):
        simulate(inventory(5), AIMIX_STATS, 2, 0)
    with pytest.raises(InputError):
        Utterance("u", "A", 0)


def test_inventory_and_manifest_roundtrip():
    utts = inventory(50)
    assert parse_inventory(write_inventory(utts)) == utts
    sessions = simulate(utts, AIMIX_STATS, 3, 20.0, seed=3)
    assert parse_manifest(write_manifest(sessions)) == sessions
    with pytest.raises(FormatError, match="line 1: missing keys"):
        parse_inventory('{"id": "x"}\n')
    with pytest.raises(FormatError, match="line 2"):
        parse_manifest(write_manifest(sessions[:1]).decode().splitlines()[0] + "\nnope\n")
