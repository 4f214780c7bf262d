"""Single-writer/multiple-reader reads.

A read cannot race if every write that could touch the same cell sits in
single-threaded code: by the time a second thread exists, the cell's
value is frozen.  Cells reachable from extern calls are excluded, since
unknown code might write them at any point.  Writes are never retired
here; a racing write pairs with the other write, not with this read.
"""

from __future__ import annotations

from ..ir import AccessId, KIND_READ, Program
from ..facts import PointsToInfo
from .stc import StcResult, stc_safe_accesses


def swmr_safe_reads(
    program: Program,
    pti: PointsToInfo,
    stc: StcResult,
    faults: frozenset[str] = frozenset(),
) -> frozenset[AccessId]:
    check_writers = "swmr.ignore_mt_writers" not in faults
    stc_safe = stc_safe_accesses(program, stc)
    safe: list[AccessId] = []
    for access_id, instr, _fn in program.accesses():
        if instr.kind != KIND_READ:
            continue
        ok = True
        for loc in pti.locs(access_id):
            if loc in pti.extern_exposed:
                ok = False
                break
            if check_writers and any(
                w not in stc_safe for w in pti.writes_of(loc)
            ):
                ok = False
                break
        if ok:
            safe.append(access_id)
    return frozenset(safe)
