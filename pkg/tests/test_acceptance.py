"""Acceptance gate.

Every criterion prints one visible line, pass or fail, with the
measured numbers it was judged on.  The 500-program corpus is generated
and enumerated exactly once; the safety, sufficiency, detector
agreement, and solver equivalence checks all share that single pass.
"""

from __future__ import annotations

import io
import random
import time
from dataclasses import dataclass, field

import pytest

from raceprune.analyses import compute_escape, compute_stc
from raceprune.cli import main as cli_main
from raceprune.facts import dominator_sets
from raceprune.gen import generate_program
from raceprune.ir import AccessId
from raceprune.oracle import (
    Bounds,
    detect_races_offline,
    detect_races_vc,
    enumerate_traces,
    instrumentation_gap,
    sample_traces,
    traced_shared_accesses,
    verify_safety,
    verify_weak_sufficiency,
)
from raceprune.pipeline import AnalysisConfig, run_pipeline

from conftest import PROGRAMS
from test_dominance import random_digraph, simple_paths_dominators


CORPUS_SIZE = 500
FAULTS = (
    "stc.ignore_created",
    "swmr.ignore_mt_writers",
    "lo.ignore_unlock",
    "ea.ignore_store_escape",
    "de.ignore_release_like",
)


def _report(capsys, n, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


# -- shared corpus pass ----------------------------------------------------


@dataclass
class CorpusSummary:
    programs: int = 0
    traces: int = 0
    racy_programs: int = 0
    safety_races: int = 0
    safety_failures: list[int] = field(default_factory=list)
    sufficiency_failures: list[int] = field(default_factory=list)
    redundant_races: int = 0
    covered: int = 0
    unresolved_bounded: int = 0
    detector_disagreements: list[int] = field(default_factory=list)
    solver_mismatches: list[int] = field(default_factory=list)
    elapsed: float = 0.0


_summary: CorpusSummary | None = None


def corpus() -> CorpusSummary:
    global _summary
    if _summary is not None:
        return _summary
    s = CorpusSummary()
    start = time.perf_counter()
    for seed in range(CORPUS_SIZE):
        program = generate_program(seed)
        report = run_pipeline(program)

        stc_w = compute_stc(program, report.callgraph)
        stc_k = compute_stc(program, report.callgraph, method="kleene")
        esc_k = compute_escape(
            program, report.callgraph, report.pointsto, method="kleene"
        )
        if (
            stc_w != stc_k
            or report.escape.escaped_regs != esc_k.escaped_regs
            or report.escape.escaped_cells != esc_k.escaped_cells
        ):
            s.solver_mismatches.append(seed)

        traces = list(enumerate_traces(program))
        s.programs += 1
        s.traces += len(traces)
        if any(detect_races_offline(t).has_race for t in traces):
            s.racy_programs += 1
        for t in traces:
            offline = detect_races_offline(t)
            vc = detect_races_vc(t)
            if offline.has_race != vc.has_race or offline.first_pairs != vc.first_pairs:
                s.detector_disagreements.append(seed)
                break

        safety = verify_safety(report, traces)
        s.safety_races += safety.races
        if not safety.ok:
            s.safety_failures.append(seed)

        sufficiency = verify_weak_sufficiency(report, traces)
        s.redundant_races += sufficiency.races_on_redundant
        s.covered += sufficiency.covered
        s.unresolved_bounded += sufficiency.unresolved_bounded
        if not sufficiency.ok:
            s.sufficiency_failures.append(seed)
    s.elapsed = time.perf_counter() - start
    _summary = s
    return s


# -- criteria ---------------------------------------------------------------


def test_criterion_1_showcase_reduction(capsys, showcase):
    start = time.perf_counter()
    report = run_pipeline(showcase)
    elapsed = time.perf_counter() - start
    by = {v.access.text: (v.verdict, v.by) for v in report.verdicts}
    golden = {
        "setup:b0:2:w": ("eliminated", "stc"),
        "bump_request:b0:0:r": ("eliminated", "ea"),
        "bump_request:b0:2:w": ("eliminated", "ea"),
        "worker:b0:2:r": ("eliminated", "lo"),
        "worker:b0:4:w": ("eliminated", "lo"),
        "worker:b0:7:r": ("eliminated", "swmr"),
        "worker:b0:12:w": ("instrumented", None),
        "worker:b0:14:w": ("instrumented", None),
        "worker:b0:17:w": ("instrumented", None),
        "worker:b1:0:r": ("eliminated", "de_dom"),
    }
    ok = by == golden and report.sir == 0.7 and elapsed < 1.0
    _report(
        capsys,
        1,
        ok,
        f"10 verdicts as expected, sir {report.sir}, {elapsed * 1000:.0f}ms",
    )


def test_criterion_2_diamond_phases(capsys, diamond):
    report = run_pipeline(diamond)
    kept_probe = {
        a.text for a in report.instrumented if a.func == "probe"
    }
    i2 = report.verdict_of(AccessId("probe", "b3", 0, "r"))
    i3 = report.verdict_of(AccessId("probe", "b4", 0, "r"))
    ok = (
        kept_probe == {"probe:b1:3:r", "probe:b5:0:r", "probe:b5:1:r"}
        and i2.verdict == "eliminated"
        and i2.by == "de_dom"
        and i2.witness == AccessId("probe", "b1", 3, "r")
        and i3.verdict == "eliminated"
        and i3.by == "de_postdom"
        and i3.witness == AccessId("probe", "b5", 1, "r")
    )
    _report(
        capsys,
        2,
        ok,
        "kept {I1,I4,I5}; I2 dominated by I1; I3 postdominated by I5",
    )


def test_criterion_3_no_races_on_eliminated(capsys):
    s = corpus()
    ok = (
        s.programs == CORPUS_SIZE
        and not s.safety_failures
        and s.elapsed < 600.0
    )
    _report(
        capsys,
        3,
        ok,
        f"{s.programs} programs, {s.traces} traces, {s.racy_programs} racy, "
        f"{len(s.safety_failures)} safety failures, {s.elapsed:.1f}s",
    )


def test_criterion_4_redundant_races_stay_covered(capsys):
    s = corpus()
    ok = s.programs == CORPUS_SIZE and not s.sufficiency_failures
    _report(
        capsys,
        4,
        ok,
        f"{s.redundant_races} races on redundant accesses, {s.covered} covered, "
        f"{s.unresolved_bounded} unresolved in truncated traces, "
        f"{len(s.sufficiency_failures)} failures",
    )


def test_criterion_5a_dominators_match_path_oracle(capsys):
    rng = random.Random(20260816)
    checked = 0
    bad = 0
    for _ in range(200):
        nodes, succs, entry = random_digraph(rng, max_nodes=8)
        expected = simple_paths_dominators(nodes, succs, entry)
        got = dominator_sets(nodes, succs, entry)
        if any(got.get(node) != doms for node, doms in expected.items()):
            bad += 1
        checked += 1
    _report(capsys, "5a", bad == 0, f"{checked} random graphs, {bad} mismatches")


def test_criterion_5b_detectors_agree_everywhere(capsys):
    s = corpus()
    ok = not s.detector_disagreements
    _report(
        capsys,
        "5b",
        ok,
        f"{s.traces} traces, first-pair and existence agreement, "
        f"{len(s.detector_disagreements)} disagreements",
    )


def test_criterion_5c_worklist_equals_kleene(capsys):
    s = corpus()
    ok = not s.solver_mismatches
    _report(
        capsys,
        "5c",
        ok,
        f"{s.programs} programs, sharing and escape fixpoints, "
        f"{len(s.solver_mismatches)} mismatches",
    )


def test_criterion_6_every_fault_is_falsified(capsys):
    found: dict[str, str] = {}
    for fault in FAULTS:
        config = AnalysisConfig(faults=frozenset({fault}))
        for seed in range(50):
            program = generate_program(seed)
            report = run_pipeline(program, config)
            traces = list(enumerate_traces(program))
            safety = verify_safety(report, traces)
            if not safety.ok:
                found[fault] = f"seed {seed} (safety)"
                break
            sufficiency = verify_weak_sufficiency(report, traces)
            if not sufficiency.ok:
                found[fault] = f"seed {seed} (sufficiency)"
                break
    ok = set(found) == set(FAULTS)
    detail = "; ".join(
        f"{fault}: {found.get(fault, 'no counterexample in 50 seeds')}"
        for fault in FAULTS
    )
    _report(capsys, 6, ok, detail)


def test_criterion_7_byte_identical_reruns(capsys):
    def run(*argv: str) -> tuple[int, str, str]:
        out, err = io.StringIO(), io.StringIO()
        code = cli_main(list(argv), stdout=out, stderr=err)
        return code, out.getvalue(), err.getvalue()

    showcase = str(PROGRAMS / "showcase.mini")
    analyze = [run("analyze", showcase) for _ in range(2)]
    simulate = [
        run("simulate", showcase, "--samples", "50", "--seed", "5")
        for _ in range(2)
    ]
    ok = (
        analyze[0] == analyze[1]
        and simulate[0] == simulate[1]
        and analyze[0][0] == 0
        and simulate[0][0] == 0
    )
    _report(capsys, 7, ok, "analyze and seeded simulate are reproducible")


def test_criterion_8_gap_is_strictly_positive(capsys, showcase):
    report = run_pipeline(showcase)
    traced = traced_shared_accesses(sample_traces(showcase, 300, seed=7))
    extra, ratio = instrumentation_gap(showcase, report.instrumented, traced)
    ok = ratio > 0.0 and extra == frozenset({AccessId("worker", "b0", 12, "w")})
    _report(
        capsys,
        8,
        ok,
        f"{len(extra)} instrumented access never traced shared, ratio {ratio}",
    )
