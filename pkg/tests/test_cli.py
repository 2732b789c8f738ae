from __future__ import annotations

import json

import numpy as np
import pytest

from diartool.cli import main
from diartool.core import Timeline
from diartool.io import parse_labels, parse_rttm, write_affinity, write_rttm
from diartool.simulate import AIMIX_STATS, Histogram, ConversationStats, Utterance, write_inventory


def rttm(path, *timelines):
    path.write_bytes(write_rttm(timelines))
    return str(path)


def report(path):
    return json.loads(path.read_text())


REF = Timeline.from_tuples("s1", [("A", 0, 20_000), ("B", 15_000, 40_000), ("A", 45_000, 60_000)])


def test_combine_identical_inputs(tmp_path):
    hyp = Timeline.from_tuples("s1", [("x", 0, 20_000), ("y", 15_000, 40_000), ("x", 45_000, 60_000)])
    files = [rttm(tmp_path / f"h{i}.rttm", hyp) for i in range(3)]
    out, dump = tmp_path / "out.rttm", tmp_path / "map.json"
    assert main(["combine", *files, "-o", str(out), "--dump-mapping", str(dump)]) == 0
    (combined,) = parse_rttm(out.read_bytes())
    ref = rttm(tmp_path / "ref.rttm", REF)
    rep = tmp_path / "der.json"
    assert main(["der", "--ref", ref, "--hyp", str(out), "-o", str(rep)]) == 0
    assert report(rep)["aggregate"]["rates"]["der"] == 0.0
    assert report(dump)["sessions"]["s1"]["method"] == "exponential"
    assert len(combined.speakers) == 2


def test_combine_passthrough_and_methods(tmp_path, rng):
    from conftest import random_timeline

    a = [random_timeline(rng, "s1", prefix="a", horizon=600), random_timeline(rng, "s2", prefix="a")]
    b = [random_timeline(rng, "s1", prefix="b", horizon=600)]
    fa, fb = rttm(tmp_path / "a.rttm", *a), rttm(tmp_path / "b.rttm", *b)
    for method in ("hungarian", "rls", "auto"):
        out = tmp_path / f"{method}.rttm"
        assert main(["combine", fa, fb, "--method", method, "-o", str(out)]) == 0
        got = {tl.session: tl for tl in parse_rttm(out.read_bytes())}
        assert got["s2"] == {tl.session: tl for tl in parse_rttm(open(fa, "rb").read())}["s2"]


def test_combine_budget_refusal(tmp_path, capsys):
    files = []
    for i in range(8):
        tl = Timeline.from_tuples("s", [(f"h{i}s{j}", j * 10_000, j * 10_000 + 9_000) for j in range(8)])
        files.append(rttm(tmp_path / f"h{i}.rttm", tl))
    assert main(["combine", *files, "--method", "exponential", "-o", str(tmp_path / "o")]) == 3
    assert "budget" in capsys.readouterr().err
    assert main(["combine", *files, "-o", str(tmp_path / "o")]) == 0


def test_parse_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.rttm"
    bad.write_text("SPEAKER s 1 0.0 oops <NA> <NA> A <NA> <NA>\n")
    assert main(["der", "--ref", str(bad), "--hyp", str(bad)]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["der", "--ref", str(tmp_path / "nope"), "--hyp", str(bad)]) == 2


def test_der_missing_session_and_strict(tmp_path):
    other = Timeline.from_tuples("s2", [("A", 0, 10_000)])
    ref = rttm(tmp_path / "ref.rttm", REF, other)
    hyp = rttm(tmp_path / "hyp.rttm", REF)
    out = tmp_path / "r.json"
    assert main(["der", "--ref", ref, "--hyp", hyp, "-o", str(out)]) == 0
    doc = report(out)
    assert doc["schema"] == 1 and len(doc["warnings"]) == 1
    assert doc["sessions"]["s2"]["missed"] == 10_000
    assert main(["der", "--ref", ref, "--hyp", hyp, "--strict"]) == 2


def test_der_aggregate_is_speaker_time_weighted(tmp_path, rng):
    from conftest import random_timeline

    refs = [random_timeline(rng, f"s{i}", horizon=5000, prefix="r") for i in range(4)]
    hyps = [random_timeline(rng, f"s{i}", horizon=5000, prefix="h") for i in range(4)]
    out = tmp_path / "r.json"
    args = ["der", "--ref", rttm(tmp_path / "r.rttm", *refs), "--hyp", rttm(tmp_path / "h.rttm", *hyps)]
    assert main([*args, "--collar", "0.01", "-o", str(out)]) == 0
    doc = report(out)
    err = sum(s["missed"] + s["false_alarm"] + s["confusion"] for s in doc["sessions"].values())
    tot = sum(s["total_ref_speech"] for s in doc["sessions"].values())
    assert doc["aggregate"]["rates"]["der"] == pytest.approx(err / tot)
    out2 = tmp_path / "r2.json"
    assert main([*args, "--jobs", "2", "--collar", "0.01", "-o", str(out2)]) == 0
    assert report(out2) == doc


def segs(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return str(path)


def test_word_metrics(tmp_path):
    ref = segs(tmp_path / "ref.jsonl", [
        {"session": "s", "speaker": "A", "start": 0, "end": 1, "text": "a b"},
        {"session": "s", "speaker": "B", "start": 1, "end": 2, "text": "c d"},
    ])
    hyp = segs(tmp_path / "hyp.jsonl", [
        {"session": "s", "speaker": "X", "start": 0, "end": 2, "text": "a b c d"},
    ])
    out = tmp_path / "o.json"
    assert main(["cpwer", "--ref", ref, "--hyp", hyp, "-o", str(out)]) == 0
    agg = report(out)["aggregate"]
    assert agg["insertions"] + agg["deletions"] + agg["substitutions"] == 4
    assert main(["orcwer", "--ref", ref, "--hyp", hyp, "-o", str(out)]) == 0
    doc = report(out)
    assert doc["aggregate"]["rate"] == 0.0
    assert doc["sessions"]["s"]["assignment"] == ["X", "X"]
    assert main(["orcwer", "--ref", ref, "--hyp", ref, "--channels", "1"]) == 2
    assert main(["wder", "--ref", ref, "--hyp", hyp, "-o", str(out)]) == 0
    doc = report(out)["aggregate"]
    assert doc["correct_words"] == 4 and doc["speaker_errors"] == 2


def test_cluster(tmp_path):
    sizes = [5, 6, 7]
    A = np.zeros((18, 18))
    i = 0
    for s in sizes:
        A[i:i + s, i:i + s] = 1.0
        i += s
    csv = tmp_path / "a.csv"
    csv.write_bytes(write_affinity(A))
    out = tmp_path / "labels.json"
    assert main(["cluster", str(csv), "-o", str(out)]) == 0
    labels = parse_labels(out.read_bytes())
    assert len({tuple(l) for l in labels}) == 3
    flags = tmp_path / "f.json"
    flags.write_text(json.dumps([1] + [0] * 17))
    assert main(["cluster", str(csv), "--flags", str(flags), "-o", str(out)]) == 0
    assert len(parse_labels(out.read_bytes())[0]) == 2
    assert main(["cluster", str(csv), "--flags", str(tmp_path / "missing")]) == 2


def test_simulate_determinism_and_zero_overlap(tmp_path):
    utts = [Utterance(f"u{i}", f"spk{i % 7}", 10_000 + 997 * i) for i in range(120)]
    inv = tmp_path / "inv.jsonl"
    inv.write_bytes(write_inventory(utts))
    outs = []
    for n in range(2):
        r, m = tmp_path / f"{n}.rttm", tmp_path / f"{n}.jsonl"
        assert main(["simulate", str(inv), "--aimix", "--seed", "7", "--max-dur", "20",
                     "--rttm", str(r), "--manifest", str(m)]) == 0
        outs.append((r.read_bytes(), m.read_bytes()))
    assert outs[0] == outs[1]

    stats = ConversationStats(Histogram.from_samples([0.1]), Histogram.from_samples([0.3]),
                              Histogram.from_samples([1.0]), 0.0)
    sj = tmp_path / "stats.json"
    sj.write_text(json.dumps(stats.to_dict()))
    r = tmp_path / "z.rttm"
    assert main(["simulate", str(inv), "--stats", str(sj), "--rttm", str(r)]) == 0
    for tl in parse_rttm(r.read_bytes()):
        turns = tl.turns
        assert all(b.start >= a.end for a, b in zip(turns, turns[1:]))

    saved = tmp_path / "fit.json"
    assert main(["simulate", str(inv), "--fit", str(tmp_path / "0.rttm"),
                 "--save-stats", str(saved), "--rttm", str(tmp_path / "f.rttm")]) == 0
    assert ConversationStats.from_dict(json.loads(saved.read_text())).p_overlap > 0.5
    assert AIMIX_STATS.p_overlap == 0.8
