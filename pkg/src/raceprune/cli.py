"""Command line front door.

Subcommands:

* ``analyze``     run the reduction pipeline, print per-access verdicts
* ``simulate``    enumerate or sample schedules, report concrete races
* ``verify``      check the reduction against every enumerated schedule
* ``gap``         compare the static keep set with dynamically observed sharing
* ``dump-facts``  print call graph, points-to, dominators, locksets as JSON
* ``gen``         emit seeded random programs

Exit codes: 0 success (and verify PASS), 1 bad input or bad flags,
2 verification FAIL.  Output depends only on (input, flags, seed).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path
from typing import Optional, TextIO

from .gen import DEFAULT_MAX_INSTRUCTIONS, generate_source
from .ir import FrontendError, parse_file
from .oracle import (
    Bounds,
    Event,
    Trace,
    detect_races_offline,
    enumerate_traces,
    instrumentation_gap,
    location_text,
    sample_traces,
    traced_shared_accesses,
    verify_safety,
    verify_weak_sufficiency,
)
from .pipeline import (
    AnalysisConfig,
    InstrumentationReport,
    emit_report,
    facts_payload,
    run_pipeline,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_FAIL = 2

KNOWN_FAULTS = (
    "stc.ignore_created",
    "swmr.ignore_mt_writers",
    "lo.ignore_unlock",
    "ea.ignore_store_escape",
    "de.ignore_release_like",
)


class _UsageError(Exception):
    pass


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--disable-stc", action="store_true",
                   help="skip the single-threaded-code analysis")
    p.add_argument("--disable-swmr", action="store_true",
                   help="skip the single-writer read analysis")
    p.add_argument("--disable-lo", action="store_true",
                   help="skip the lock-ownership analysis")
    p.add_argument("--disable-ea", action="store_true",
                   help="skip the escape analysis")
    p.add_argument("--no-de", action="store_true",
                   help="skip duplicate elimination entirely")
    p.add_argument("--no-de-postdom", action="store_true",
                   help="keep duplicate elimination but only its dominance phase")
    p.add_argument("--de-optimistic", action="store_true",
                   help="assume loops and calls between an access and a later "
                        "witness terminate (requires the post-dominance phase)")
    p.add_argument("--fault", action="append", default=[], metavar="NAME",
                   help="inject a named analysis bug (testing only); "
                        "may be repeated")


def _add_bounds_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-loop-iters", type=int, default=3, metavar="K",
                   help="per-activation block revisit bound (default 3)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raceprune",
        description="Reduce data-race instrumentation for mini-IR programs "
                    "and check the reduction against exhaustive scheduling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="run the reduction pipeline")
    p.add_argument("input", help="program file")
    _add_analysis_flags(p)
    p.add_argument("--json", action="store_true", help="JSON instead of text")
    p.add_argument("--dump-facts", metavar="PATH",
                   help="also write analysis internals as JSON to PATH")
    p.add_argument("--figure", metavar="PATH",
                   help="render a per-stage elimination chart to PATH")

    p = sub.add_parser("simulate", help="run schedules, report concrete races")
    p.add_argument("input", help="program file")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exhaustive", action="store_true",
                   help="enumerate every schedule (default)")
    g.add_argument("--samples", type=int, metavar="N",
                   help="random schedules instead of enumeration")
    p.add_argument("--seed", type=int, default=0, metavar="S",
                   help="sampling seed (default 0)")
    _add_bounds_flags(p)
    p.add_argument("--json", action="store_true", help="JSON instead of text")

    p = sub.add_parser("verify",
                       help="check the reduction on every enumerated schedule")
    p.add_argument("input", help="program file")
    _add_analysis_flags(p)
    _add_bounds_flags(p)

    p = sub.add_parser("gap",
                       help="instrumented accesses never observed shared")
    p.add_argument("input", help="program file")
    _add_analysis_flags(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exhaustive", action="store_true",
                   help="enumerate every schedule")
    g.add_argument("--samples", type=int, default=None, metavar="N",
                   help="random schedules (default 200)")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    _add_bounds_flags(p)
    p.add_argument("--json", action="store_true", help="JSON instead of text")
    p.add_argument("--figure", metavar="PATH",
                   help="render the comparison chart to PATH")

    p = sub.add_parser("dump-facts", help="print analysis internals as JSON")
    p.add_argument("input", help="program file")
    _add_analysis_flags(p)

    p = sub.add_parser("gen", help="emit seeded random programs")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--size", type=int, default=DEFAULT_MAX_INSTRUCTIONS,
                   metavar="N", help="instruction budget per program")
    p.add_argument("--count", type=int, default=1, metavar="K",
                   help="number of programs (consecutive seeds)")
    p.add_argument("--out", metavar="DIR",
                   help="write one .mini file per program instead of stdout")

    return parser


def _config(args: argparse.Namespace) -> AnalysisConfig:
    if args.de_optimistic and args.no_de_postdom:
        raise _UsageError("--de-optimistic needs the post-dominance phase; "
                          "drop --no-de-postdom")
    for name in args.fault:
        if name not in KNOWN_FAULTS:
            raise _UsageError(
                f"unknown fault {name!r}; known: {', '.join(KNOWN_FAULTS)}")
    return AnalysisConfig(
        enable_stc=not args.disable_stc,
        enable_swmr=not args.disable_swmr,
        enable_lo=not args.disable_lo,
        enable_ea=not args.disable_ea,
        enable_de=not args.no_de,
        de_postdom=not args.no_de_postdom,
        de_optimistic=args.de_optimistic,
        faults=frozenset(args.fault),
    )


def _event_line(e: Event) -> str:
    line = f"{e.seq} {e.tid} {e.func}:{e.block}:{e.index}:{e.kind}"
    if e.loc is not None:
        line += f" {location_text(e.loc)}"
    return line


def _trace_flags(t: Trace) -> list[str]:
    flags = []
    if t.terminated:
        flags.append("terminated")
    if t.deadlock:
        flags.append("deadlock")
    if t.bounded:
        flags.append("bounded")
    if t.faulted:
        flags.append("faulted")
    return flags


def _cmd_analyze(args: argparse.Namespace, out: TextIO) -> int:
    program = parse_file(args.input)
    report = run_pipeline(program, _config(args))
    out.write(emit_report(report, "json" if args.json else "text"))
    if args.dump_facts:
        Path(args.dump_facts).write_text(
            json.dumps(facts_payload(report), indent=2) + "\n")
    if args.figure:
        from .plotting import stage_figure

        stage_figure(report, args.figure)
    return EXIT_OK


def _collect_traces(args: argparse.Namespace, program) -> list[Trace]:
    bounds = Bounds(max_loop_iters=args.max_loop_iters)
    samples = getattr(args, "samples", None)
    if samples is not None and not getattr(args, "exhaustive", False):
        return list(sample_traces(program, samples, args.seed, bounds))
    return list(enumerate_traces(program, bounds))


def _cmd_simulate(args: argparse.Namespace, out: TextIO) -> int:
    program = parse_file(args.input)
    traces = _collect_traces(args, program)

    racing = 0
    locations: set[str] = set()
    first: Optional[tuple[Trace, dict]] = None
    for t in traces:
        rep = detect_races_offline(t)
        if not rep.has_race:
            continue
        racing += 1
        locations.update(location_text(loc) for loc in rep.first_pairs)
        if first is None:
            first = (t, dict(rep.first_pairs))

    counts = {
        "traces": len(traces),
        "terminated": sum(t.terminated for t in traces),
        "deadlocked": sum(t.deadlock for t in traces),
        "bounded": sum(t.bounded for t in traces),
        "faulted": sum(t.faulted for t in traces),
        "racing": racing,
    }

    if args.json:
        payload: dict = dict(counts)
        payload["locations"] = sorted(locations)
        if first is not None:
            t, pairs = first
            payload["counterexample"] = {
                "flags": _trace_flags(t),
                "events": [_event_line(e) for e in t.events],
                "races": [
                    {
                        "location": location_text(loc),
                        "first": t.events[i].access_id.text,
                        "second": t.events[j].access_id.text,
                    }
                    for loc, (i, j) in sorted(
                        pairs.items(), key=lambda kv: location_text(kv[0]))
                ],
            }
        out.write(json.dumps(payload, indent=2) + "\n")
        return EXIT_OK

    out.write(
        "traces {traces} terminated {terminated} deadlocked {deadlocked} "
        "bounded {bounded} faulted {faulted}\n".format(**counts))
    out.write(f"racing-traces {racing}"
              f" locations {' '.join(sorted(locations)) if locations else '-'}\n")
    if first is not None:
        t, pairs = first
        for loc, (i, j) in sorted(pairs.items(),
                                  key=lambda kv: location_text(kv[0])):
            a, b = t.events[i], t.events[j]
            out.write(
                f"race {location_text(loc)}: {a.access_id.text}"
                f" (seq {a.seq}, thread {a.tid}) vs {b.access_id.text}"
                f" (seq {b.seq}, thread {b.tid})\n")
        out.write("trace:\n")
        for e in t.events:
            out.write(_event_line(e) + "\n")
    return EXIT_OK


def _dump_violation(violation, out: TextIO) -> None:
    out.write(violation.describe() + "\n")
    out.write("trace:\n")
    for e in violation.trace.events:
        out.write(_event_line(e) + "\n")


def _cmd_verify(args: argparse.Namespace, out: TextIO) -> int:
    program = parse_file(args.input)
    report = run_pipeline(program, _config(args))
    bounds = Bounds(max_loop_iters=args.max_loop_iters)
    traces = list(enumerate_traces(program, bounds))

    saf = verify_safety(report, traces)
    out.write(f"safety {'PASS' if saf.ok else 'FAIL'}"
              f" traces {saf.traces} racing {saf.races}\n")
    if not saf.ok:
        _dump_violation(saf.violation, out)
        return EXIT_FAIL

    suf = verify_weak_sufficiency(report, traces)
    out.write(
        f"sufficiency {'PASS' if suf.ok else 'FAIL'}"
        f" redundant-races {suf.races_on_redundant} covered {suf.covered}"
        f" unresolved-bounded {suf.unresolved_bounded}\n")
    if not suf.ok:
        _dump_violation(suf.violation, out)
        return EXIT_FAIL
    return EXIT_OK


def _cmd_gap(args: argparse.Namespace, out: TextIO) -> int:
    program = parse_file(args.input)
    report = run_pipeline(program, _config(args))
    if not args.exhaustive and args.samples is None:
        args.samples = 200
    traces = _collect_traces(args, program)
    traced = traced_shared_accesses(traces)
    extra, ratio = instrumentation_gap(program, report.instrumented, traced)

    if args.json:
        payload = {
            "accesses": report.q_orig,
            "instrumented": len(report.instrumented),
            "traced": len(traced),
            "extra": sorted(a.text for a in extra),
            "ratio": ratio,
        }
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write(f"accesses {report.q_orig}"
                  f" instrumented {len(report.instrumented)}"
                  f" traced-shared {len(traced)}\n")
        out.write(f"never-traced {len(extra)} ratio {ratio:.4f}\n")
        for a in sorted(extra, key=lambda a: a.text):
            out.write(f"  {a.text}\n")
    if args.figure:
        from .plotting import gap_figure

        gap_figure(report.q_orig, len(report.instrumented), len(traced),
                   len(extra), args.figure)
    return EXIT_OK


def _cmd_dump_facts(args: argparse.Namespace, out: TextIO) -> int:
    program = parse_file(args.input)
    report = run_pipeline(program, _config(args))
    out.write(json.dumps(facts_payload(report), indent=2) + "\n")
    return EXIT_OK


def _cmd_gen(args: argparse.Namespace, out: TextIO) -> int:
    if args.count < 1:
        raise _UsageError("--count must be at least 1")
    if args.out:
        directory = Path(args.out)
        directory.mkdir(parents=True, exist_ok=True)
        for k in range(args.count):
            seed = args.seed + k
            path = directory / f"seed{seed:04d}.mini"
            path.write_text(generate_source(seed, args.size))
        out.write(f"wrote {args.count} programs to {directory}\n")
        return EXIT_OK
    for k in range(args.count):
        out.write(generate_source(args.seed + k, args.size))
    return EXIT_OK


_HANDLERS = {
    "analyze": _cmd_analyze,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
    "gap": _cmd_gap,
    "dump-facts": _cmd_dump_facts,
    "gen": _cmd_gen,
}


def main(
    argv: Optional[list[str]] = None,
    stdout: Optional[TextIO] = None,
    stderr: Optional[TextIO] = None,
) -> int:
    out = stdout if stdout is not None else sys.stdout
    err = stderr if stderr is not None else sys.stderr

    parser = build_parser()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = parser.parse_args(argv)
    except SystemExit as ex:
        return EXIT_OK if ex.code in (0, None) else EXIT_INPUT

    try:
        return _HANDLERS[args.command](args, out)
    except _UsageError as ex:
        print(f"error: {ex}", file=err)
        return EXIT_INPUT
    except FrontendError as ex:
        print(f"error: {args.input}: {ex}", file=err)
        return EXIT_INPUT
    except OSError as ex:
        print(f"error: {ex}", file=err)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
