"""The analysis cascade and its report.

Stages run in a fixed order: single-threaded code, single-writer reads,
lock ownership, escape, then redundancy elimination over whatever is
still instrumented.  Each access is attributed to the first stage that
retires it.  Later stages see earlier facts (the single-writer rule
consults the thread-count classification even when that stage's own
retirements are switched off), so disabling a stage only disables its
retirements, never its contribution to soundness elsewhere.

Reports are byte-deterministic: accesses appear in declaration order and
every set is emitted sorted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .ir import AccessId, Program
from .facts import (
    CallGraph,
    PointsToInfo,
    build_callgraph,
    compute_points_to,
    loc_sort_key,
)
from .analyses import (
    EscapeResult,
    LockOwnership,
    StcResult,
    compute_escape,
    compute_lock_ownership,
    compute_stc,
    escape_safe_accesses,
    stc_safe_accesses,
    swmr_safe_reads,
)
from .de import DeConfig, RedundantSet, apply_de

STAGES = ("stc", "swmr", "lo", "ea", "de_dom", "de_postdom")


@dataclass(frozen=True)
class AnalysisConfig:
    enable_stc: bool = True
    enable_swmr: bool = True
    enable_lo: bool = True
    enable_ea: bool = True
    enable_de: bool = True
    de_postdom: bool = True
    de_optimistic: bool = False
    faults: frozenset[str] = frozenset()

    def de_config(self) -> DeConfig:
        return DeConfig(
            enable_postdom=self.de_postdom,
            optimistic_termination=self.de_optimistic,
            faults=self.faults,
        )

    def echo(self) -> dict:
        return {
            "stc": self.enable_stc,
            "swmr": self.enable_swmr,
            "lo": self.enable_lo,
            "ea": self.enable_ea,
            "de": self.enable_de,
            "de_postdom": self.de_postdom,
            "de_optimistic": self.de_optimistic,
            "faults": sorted(self.faults),
        }


@dataclass
class AccessVerdict:
    access: AccessId
    verdict: str  # "instrumented" | "eliminated"
    by: Optional[str] = None
    witness: Optional[AccessId] = None


@dataclass
class InstrumentationReport:
    program: Program
    config: AnalysisConfig
    verdicts: list[AccessVerdict]
    instrumented: frozenset[AccessId]
    q_orig: int
    q_opt: int
    sir: float
    callgraph: CallGraph = field(repr=False, default=None)
    pointsto: PointsToInfo = field(repr=False, default=None)
    stc: StcResult = field(repr=False, default=None)
    lockown: LockOwnership = field(repr=False, default=None)
    escape: EscapeResult = field(repr=False, default=None)
    redundant: Optional[RedundantSet] = field(repr=False, default=None)

    def verdict_of(self, access: AccessId) -> AccessVerdict:
        for v in self.verdicts:
            if v.access == access:
                return v
        raise KeyError(access.text)

    def eliminated_by(self, *stages: str) -> frozenset[AccessId]:
        return frozenset(
            v.access for v in self.verdicts if v.verdict == "eliminated" and v.by in stages
        )


def run_pipeline(
    program: Program, config: AnalysisConfig = AnalysisConfig()
) -> InstrumentationReport:
    cg = build_callgraph(program)
    pti = compute_points_to(program, cg)
    stc = compute_stc(program, cg, faults=config.faults)
    lo = compute_lock_ownership(program, cg, pti, stc, faults=config.faults)
    ea = compute_escape(program, cg, pti, faults=config.faults)

    retired: dict[AccessId, tuple[str, Optional[AccessId]]] = {}

    def retire(ids, stage: str) -> None:
        for a in sorted(ids):
            if a not in retired:
                retired[a] = (stage, None)

    if config.enable_stc:
        retire(stc_safe_accesses(program, stc), "stc")
    if config.enable_swmr:
        retire(swmr_safe_reads(program, pti, stc, config.faults), "swmr")
    if config.enable_lo:
        retire(lo.safe, "lo")
    if config.enable_ea:
        retire(escape_safe_accesses(program, pti, ea), "ea")

    redundant: Optional[RedundantSet] = None
    if config.enable_de:
        candidates = frozenset(
            a for a in program.access_ids() if a not in retired
        )
        redundant = apply_de(program, cg, pti, lo, candidates, config.de_config())
        for a, e in redundant.eliminated.items():
            retired[a] = (e.phase, e.witness)

    verdicts: list[AccessVerdict] = []
    instrumented: list[AccessId] = []
    for a in program.access_ids():
        if a in retired:
            stage, witness = retired[a]
            verdicts.append(AccessVerdict(a, "eliminated", stage, witness))
        else:
            verdicts.append(AccessVerdict(a, "instrumented"))
            instrumented.append(a)

    q_orig = len(verdicts)
    q_opt = len(instrumented)
    sir = 0.0 if q_orig == 0 else (q_orig - q_opt) / q_orig
    return InstrumentationReport(
        program=program,
        config=config,
        verdicts=verdicts,
        instrumented=frozenset(instrumented),
        q_orig=q_orig,
        q_opt=q_opt,
        sir=sir,
        callgraph=cg,
        pointsto=pti,
        stc=stc,
        lockown=lo,
        escape=ea,
        redundant=redundant,
    )


def report_payload(report: InstrumentationReport) -> dict:
    accesses = []
    for v in report.verdicts:
        entry: dict = {"id": v.access.text, "verdict": v.verdict}
        if v.by is not None:
            entry["by"] = v.by
        if v.witness is not None:
            entry["witness"] = v.witness.text
        accesses.append(entry)
    return {
        "accesses": accesses,
        "metrics": {
            "q_orig": report.q_orig,
            "q_opt": report.q_opt,
            "sir": report.sir,
        },
        "config": report.config.echo(),
    }


def emit_report(report: InstrumentationReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report_payload(report), indent=2) + "\n"
    if fmt == "text":
        lines = []
        for v in report.verdicts:
            lines.append(
                "\t".join(
                    (
                        v.access.text,
                        v.verdict,
                        v.by or "-",
                        v.witness.text if v.witness else "-",
                    )
                )
            )
        lines.append(f"q_orig\t{report.q_orig}")
        lines.append(f"q_opt\t{report.q_opt}")
        lines.append(f"sir\t{report.sir}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def facts_payload(report: InstrumentationReport) -> dict:
    """Analysis internals, for inspection and debugging."""
    cg = report.callgraph
    pti = report.pointsto
    lo = report.lockown
    ea = report.escape

    def pointee_text(p) -> str:
        return p.text if hasattr(p, "text") else f"&&{p.name}"

    return {
        "address_taken": sorted(cg.address_taken),
        "may_call": {
            f.name: sorted(cg.may_call(f.name)) for f in report.program.functions
        },
        "mt_functions": sorted(report.stc.mt_functions),
        "mt_main_blocks": sorted(report.stc.mt_main_blocks),
        "access_cells": {
            a.text: sorted(l.text for l in pti.locs(a))
            for a in report.program.access_ids()
        },
        "extern_exposed": sorted(
            l.text for l in sorted(pti.extern_exposed, key=loc_sort_key)
        ),
        "lock_entry": {f: sorted(s) for f, s in sorted(lo.entry.items())},
        "cell_owner": {
            l.text: sorted(s)
            for l, s in sorted(lo.owner.items(), key=lambda kv: loc_sort_key(kv[0]))
        },
        "escaped_cells": sorted(
            l.text for l in sorted(ea.escaped_cells, key=loc_sort_key)
        ),
        "escape_summaries": {
            f: list(bits) for f, bits in sorted(ea.summaries.items()) if bits
        },
    }
