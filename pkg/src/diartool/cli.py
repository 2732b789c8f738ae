"""Command-line entry point: ``diartool <subcommand> ...``.

Exit codes: 0 success, 2 bad input or format, 3 resource budget refused,
4 internal invariant violated.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

from diartool.core import Timeline
from diartool.doverlap.combine import METHODS, CombineOptions, combine
from diartool.doverlap.local_search import DEFAULT_EPOCHS
from diartool.doverlap.mapping import DEFAULT_BUDGET
from diartool.errors import BudgetExceededError, FormatError, InputError, InvariantError
from diartool.io import (
    TranscriptSegment,
    parse_affinity,
    parse_rttm,
    parse_transcripts,
    write_labels,
    write_rttm,
)
from diartool.metrics.der import DerReport, compute_der
from diartool.metrics.wer import (
    MAX_ORC_CHANNELS,
    WderReport,
    WerReport,
    compute_cpwer,
    compute_orcwer,
    compute_wder,
    hypothesis_channels,
)
from diartool.simulate import (
    AIMIX_STATS,
    ConversationStats,
    fit_stats,
    parse_inventory,
    simulate,
    write_manifest,
)
from diartool import spectral

log = logging.getLogger("diartool")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_INVARIANT = 0, 2, 3, 4

T = TypeVar("T")
R = TypeVar("R")


def _default_jobs() -> int:
    raw = os.environ.get("DIARTOOL_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _read(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _write(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def _pmap(fn: Callable[[T], R], items: Sequence[T], jobs: int) -> list[R]:
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _report(sessions: dict, aggregate: dict, warnings: list[str]) -> bytes:
    doc = {
        "schema": SCHEMA_VERSION,
        "sessions": sessions,
        "aggregate": aggregate,
        "warnings": warnings,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _pair_sessions(
    ref_ids: Iterable[str], hyp_ids: Iterable[str], strict: bool
) -> tuple[list[str], list[str]]:
    ref_ids, hyp_ids = set(ref_ids), set(hyp_ids)
    warnings = []
    for sid in sorted(ref_ids - hyp_ids):
        warnings.append(f"session {sid!r} missing from hypothesis; scored as empty")
    for sid in sorted(hyp_ids - ref_ids):
        warnings.append(f"session {sid!r} missing from reference; scored as empty")
    if strict and warnings:
        raise InputError("; ".join(warnings))
    return sorted(ref_ids | hyp_ids), warnings


# -------------------------------------------------------------------- combine


def _combine_one(job: tuple[str, list[Timeline], CombineOptions]) -> tuple[Timeline, dict]:
    sid, hyps, options = job
    result = combine(hyps, options)
    summary = {
        "method": result.method,
        "weight": result.partition.weight,
        "total_weight": result.graph.total_weight,
        "rank_weights": list(result.weights.weights),
        "mapping": result.mapping,
    }
    return result.timeline, summary


def cmd_combine(args: argparse.Namespace) -> int:
    if len(args.rttm) < 2:
        raise InputError("combine needs at least two RTTM files")
    per_file = [{tl.session: tl for tl in parse_rttm(_read(p))} for p in args.rttm]
    sessions = sorted({sid for f in per_file for sid in f})
    options = CombineOptions(
        method=args.method,
        budget=args.budget,
        epochs=args.epochs,
        iterations=args.iters,
        seed=args.seed,
        rank_order=args.rank_order,
        max_speakers_per_region=args.max_speakers,
        jobs=1 if len(sessions) > 1 else args.jobs,
    )
    jobs, passthrough = [], {}
    for sid in sessions:
        hyps = [f[sid] for f in per_file if sid in f]
        if len(hyps) < 2:
            log.warning("session %r appears in one input only; copied unchanged", sid)
            passthrough[sid] = hyps[0]
        else:
            jobs.append((sid, hyps, options))
    results = dict(zip((j[0] for j in jobs), _pmap(_combine_one, jobs, args.jobs)))

    out, summaries = [], {}
    for sid in sessions:
        if sid in results:
            tl, summary = results[sid]
            out.append(tl)
            summaries[sid] = summary
        else:
            out.append(passthrough[sid])
            summaries[sid] = {"method": "passthrough"}
    _write(args.output, write_rttm(out))
    if args.dump_mapping:
        doc = {"schema": SCHEMA_VERSION, "sessions": summaries}
        Path(args.dump_mapping).write_text(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


# -------------------------------------------------------------------- scoring


def _der_one(job: tuple[Timeline, Timeline, float, bool]) -> DerReport:
    ref, hyp, collar, ignore_overlap = job
    return compute_der(ref, hyp, collar_seconds=collar, ignore_overlap=ignore_overlap)


def cmd_der(args: argparse.Namespace) -> int:
    refs = {tl.session: tl for tl in parse_rttm(_read(args.ref))}
    hyps = {tl.session: tl for tl in parse_rttm(_read(args.hyp))}
    sids, warnings = _pair_sessions(refs, hyps, args.strict)
    jobs = [
        (refs.get(sid, Timeline(sid)), hyps.get(sid, Timeline(sid)), args.collar, args.ignore_overlap)
        for sid in sids
    ]
    reports = _pmap(_der_one, jobs, args.jobs)
    total = DerReport(
        sum(r.missed for r in reports),
        sum(r.false_alarm for r in reports),
        sum(r.confusion for r in reports),
        sum(r.total_ref_speech for r in reports),
    )
    agg = total.to_dict()
    del agg["mapping"]
    _write(args.output, _report({s: r.to_dict() for s, r in zip(sids, reports)}, agg, warnings))
    return EXIT_OK


def _by_session(segments: Iterable[TranscriptSegment]) -> dict[str, list[TranscriptSegment]]:
    out: dict[str, list[TranscriptSegment]] = {}
    for seg in segments:
        out.setdefault(seg.session, []).append(seg)
    return out


def _wer_aggregate(reports: Sequence[WerReport]) -> dict:
    total = WerReport(
        sum(r.insertions for r in reports),
        sum(r.deletions for r in reports),
        sum(r.substitutions for r in reports),
        sum(r.ref_words for r in reports),
    )
    agg = total.to_dict()
    del agg["assignment"]
    return agg


def _cpwer_one(job: tuple[list, list]) -> WerReport:
    return compute_cpwer(*job)


def _orcwer_one(job: tuple[list, list, int]) -> WerReport:
    ref, hyp, max_channels = job
    ordered = sorted(ref, key=lambda s: (s.start, s.end))
    names, channels = hypothesis_channels(hyp)
    if len(names) > max_channels:
        raise InputError(
            f"hypothesis has {len(names)} channels, more than --channels {max_channels}"
        )
    if not channels:
        channels = [[]]
    report = compute_orcwer(ordered, [[w for w, _ in ch] for ch in channels])
    names = names or [None]
    return WerReport(
        report.insertions,
        report.deletions,
        report.substitutions,
        report.ref_words,
        assignment=[names[c] for c in report.assignment],
    )


def _wder_one(job: tuple[list, list]) -> WderReport:
    return compute_wder(*job)


def _score_words(args: argparse.Namespace, kind: str) -> int:
    refs = _by_session(parse_transcripts(_read(args.ref)))
    hyps = _by_session(parse_transcripts(_read(args.hyp)))
    sids, warnings = _pair_sessions(refs, hyps, args.strict)
    pairs = [(refs.get(s, []), hyps.get(s, [])) for s in sids]
    if kind == "cpwer":
        reports = _pmap(_cpwer_one, pairs, args.jobs)
        agg = _wer_aggregate(reports)
    elif kind == "orcwer":
        reports = _pmap(_orcwer_one, [(r, h, args.channels) for r, h in pairs], args.jobs)
        agg = _wer_aggregate(reports)
    else:
        reports = _pmap(_wder_one, pairs, args.jobs)
        correct = sum(r.correct_words for r in reports)
        errors = sum(r.speaker_errors for r in reports)
        agg = WderReport(correct, errors).to_dict()
    _write(args.output, _report({s: r.to_dict() for s, r in zip(sids, reports)}, agg, warnings))
    return EXIT_OK


# -------------------------------------------------------------------- cluster


def cmd_cluster(args: argparse.Namespace) -> int:
    flags = _read(args.flags) if args.flags else None
    data = parse_affinity(_read(args.affinity), flags)
    labels = spectral.cluster(
        data,
        k=args.k,
        p_min=args.p_min,
        p_max=args.p_max,
        tol=args.tol,
        max_iter=args.max_iter,
        max_speakers=args.max_speakers,
    )
    _write(args.output, write_labels(labels))
    return EXIT_OK


# ------------------------------------------------------------------- simulate


def _load_stats(args: argparse.Namespace) -> ConversationStats:
    if args.aimix:
        return AIMIX_STATS
    if args.stats:
        try:
            return ConversationStats.from_dict(json.loads(_read(args.stats)))
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.stats}: invalid JSON: {exc.msg}") from exc
    return fit_stats(parse_rttm(_read(args.fit)))


def cmd_simulate(args: argparse.Namespace) -> int:
    stats = _load_stats(args)
    if args.save_stats:
        Path(args.save_stats).write_text(json.dumps(stats.to_dict(), indent=2) + "\n")
    utterances = parse_inventory(_read(args.inventory))
    fixed = args.num_speakers
    sessions = simulate(
        utterances,
        stats,
        max_speakers=args.max_speakers,
        max_dur_per_speaker=args.max_dur,
        seed=args.seed,
        num_speakers=(lambda rng, K: fixed) if fixed else None,
        prefix=args.prefix,
    )
    _write(args.rttm, write_rttm(s.timeline for s in sessions))
    if args.manifest:
        Path(args.manifest).write_bytes(write_manifest(sessions))
    return EXIT_OK


# --------------------------------------------------------------------- parser


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diartool",
        description="Diarization scoring, hypothesis combination, clustering and simulation.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--jobs", type=_positive_int, default=_default_jobs(),
                       help="parallel sessions (default: $DIARTOOL_JOBS or 1)")
        p.add_argument("-o", "--output", help="output path (default: stdout)")

    p = sub.add_parser("combine", help="combine RTTM hypotheses with DOVER-Lap")
    p.add_argument("rttm", nargs="+", help="hypothesis RTTM files")
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--budget", type=_positive_int, default=DEFAULT_BUDGET,
                   help="max cost-tensor cells for the exponential mapping")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=_positive_int, default=DEFAULT_EPOCHS)
    p.add_argument("--iters", type=_positive_int, default=None,
                   help="RLS iterations per epoch (default 2K+1)")
    p.add_argument("--rank-order", choices=("descending", "ascending"), default="descending")
    p.add_argument("--max-speakers", type=_positive_int, default=2,
                   help="cap on speakers per voted region")
    p.add_argument("--dump-mapping", help="write per-session label mapping JSON here")
    common(p)
    p.set_defaults(func=cmd_combine)

    for name, helptext in (
        ("der", "diarization error rate between RTTM files"),
        ("cpwer", "concatenated minimum-permutation WER"),
        ("orcwer", "optimal reference combination WER"),
        ("wder", "word-level diarization error rate"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--ref", required=True)
        p.add_argument("--hyp", required=True)
        p.add_argument("--strict", action="store_true",
                       help="fail when a session is missing on either side")
        if name == "der":
            p.add_argument("--collar", type=float, default=0.0, help="seconds around ref boundaries")
            p.add_argument("--ignore-overlap", action="store_true")
            p.set_defaults(func=cmd_der)
        else:
            if name == "orcwer":
                p.add_argument("--channels", type=_positive_int, default=MAX_ORC_CHANNELS,
                               help="max hypothesis channels per session")
            p.set_defaults(func=lambda a, kind=name: _score_words(a, kind))
        common(p)

    p = sub.add_parser("cluster", help="overlap-aware spectral clustering of an affinity CSV")
    p.add_argument("affinity", help="square affinity matrix as CSV")
    p.add_argument("--flags", help="JSON array of 0/1 overlap flags per window")
    p.add_argument("--k", type=_positive_int, default=None, help="fix the cluster count")
    p.add_argument("--p-min", type=_positive_int, default=2)
    p.add_argument("--p-max", type=_positive_int, default=20)
    p.add_argument("--tol", type=float, default=spectral.DEFAULT_TOL)
    p.add_argument("--max-iter", type=_positive_int, default=spectral.DEFAULT_MAX_ITER)
    p.add_argument("--max-speakers", type=_positive_int, default=None,
                   help="upper bound on the estimated cluster count")
    p.add_argument("-o", "--output", help="labels JSON path (default: stdout)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("simulate", help="generate synthetic sessions from an utterance inventory")
    p.add_argument("inventory", help="JSONL with id, speaker, duration")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--fit", help="fit statistics from this reference RTTM")
    src.add_argument("--stats", help="statistics JSON")
    src.add_argument("--aimix", action="store_true", help="fixed pause/overlap constants")
    p.add_argument("--save-stats", help="write the statistics used to this JSON path")
    p.add_argument("--max-speakers", type=_positive_int, default=4)
    p.add_argument("--max-dur", type=float, default=60.0, help="seconds per speaker per session")
    p.add_argument("--num-speakers", type=_positive_int, default=None,
                   help="always draw this many speakers instead of uniform 1..max")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefix", default="sim", help="session id prefix")
    p.add_argument("--rttm", help="output RTTM path (default: stdout)")
    p.add_argument("--manifest", help="output placement manifest JSONL")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="diartool: %(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except (FormatError, InputError, OSError) as exc:
        print(f"diartool: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BudgetExceededError as exc:
        print(f"diartool: error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InvariantError as exc:
        print(f"diartool: internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
