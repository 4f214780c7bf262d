"""Checks that the reduced instrumentation set still catches every race.

Two obligations, checked trace by trace against the offline detector:

* Safety: no race in any explored trace touches an access that the
  sharing, single-writer, lock-ownership, or escape stage removed.
  Those stages claim the access cannot race at all, so one racing
  event is an outright refutation.
* Weak sufficiency: an access removed as redundant may race, but every
  trace in which it does must also exhibit a race on the same cell
  between two accesses that are still instrumented.  A detector
  watching only the reduced set then still reports the cell.

Redundancy comes in two shapes with different obligations on truncated
traces.  A dominating witness runs before the access, so even a
budget-truncated trace that contains the racy access already contains
the witness: those are checked strictly.  A postdominating witness runs
after the access and may fall beyond the truncation point, so an
uncovered race in a truncated trace is inconclusive; it is tallied as
unresolved rather than failed.  Deadlocked and faulted traces are
maximal, not truncated, and are held to the strict rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from ..ir import AccessId
from ..pipeline import InstrumentationReport
from .detectors import detect_races_offline
from .explore import Trace
from .interp import Event

STRONG_STAGES = ("stc", "swmr", "lo", "ea")
REDUNDANT_STAGES = ("de_dom", "de_postdom")


@dataclass(frozen=True)
class Violation:
    trace: Trace
    pair: tuple[Event, Event]
    access: AccessId
    stage: str

    def describe(self) -> str:
        a, b = self.pair
        flags = []
        if self.trace.bounded:
            flags.append("bounded")
        if self.trace.deadlock:
            flags.append("deadlock")
        if self.trace.faulted:
            flags.append("faulted")
        suffix = f" [{', '.join(flags)}]" if flags else ""
        return (
            f"race between {a.access_id.text} (seq {a.seq}, thread {a.tid}) and "
            f"{b.access_id.text} (seq {b.seq}, thread {b.tid}) hits access "
            f"{self.access.text} removed by {self.stage}{suffix}"
        )


@dataclass
class SafetyResult:
    ok: bool
    traces: int = 0
    races: int = 0
    violation: Optional[Violation] = None


@dataclass
class SufficiencyResult:
    ok: bool
    traces: int = 0
    races_on_redundant: int = 0
    covered: int = 0
    unresolved_bounded: int = 0
    violation: Optional[Violation] = None


def verify_safety(
    report: InstrumentationReport, traces: Iterable[Trace]
) -> SafetyResult:
    removed: dict[AccessId, str] = {}
    for stage in STRONG_STAGES:
        for a in report.eliminated_by(stage):
            removed[a] = stage
    result = SafetyResult(ok=True)
    for trace in traces:
        result.traces += 1
        races = detect_races_offline(trace)
        result.races += len(races.pairs)
        for i, j in races.pairs:
            for e in (trace.events[i], trace.events[j]):
                stage = removed.get(e.access_id)
                if stage is not None:
                    result.ok = False
                    result.violation = Violation(
                        trace=trace,
                        pair=(trace.events[i], trace.events[j]),
                        access=e.access_id,
                        stage=stage,
                    )
                    return result
    return result


def verify_weak_sufficiency(
    report: InstrumentationReport, traces: Iterable[Trace]
) -> SufficiencyResult:
    redundant: dict[AccessId, str] = {}
    for stage in REDUNDANT_STAGES:
        for a in report.eliminated_by(stage):
            redundant[a] = stage
    instrumented = report.instrumented
    result = SufficiencyResult(ok=True)
    for trace in traces:
        result.traces += 1
        if not redundant:
            continue
        races = detect_races_offline(trace)
        if not races.pairs:
            continue
        covered_cells = {
            trace.events[i].loc
            for i, j in races.pairs
            if trace.events[i].access_id in instrumented
            and trace.events[j].access_id in instrumented
        }
        for i, j in races.pairs:
            pair = (trace.events[i], trace.events[j])
            hits = [e for e in pair if e.access_id in redundant]
            if not hits:
                continue
            result.races_on_redundant += 1
            if pair[0].loc in covered_cells:
                result.covered += 1
                continue
            stages = {redundant[e.access_id] for e in hits}
            if trace.bounded and stages == {"de_postdom"}:
                result.unresolved_bounded += 1
                continue
            worst = hits[0] if redundant[hits[0].access_id] == "de_dom" else hits[-1]
            result.ok = False
            result.violation = Violation(
                trace=trace,
                pair=pair,
                access=worst.access_id,
                stage=redundant[worst.access_id],
            )
            return result
    return result
