"""Lock-ownership inference.

Computes, for every access, the set of locks that must be held whenever
it executes, then assigns each memory cell an owner set: the locks held
at every multithreaded access of that cell.  A cell with a non-empty
owner is consistently protected, so races on it are impossible and all
its accesses can go uninstrumented.  Cells nobody touches from
multithreaded code are trivially safe.

Must-held sets live in the powerset of declared locks with intersection
as join; everything starts at the full set and descends.  Function entry
sets are the intersection over all call sites; a thread entry point, like ``main``,
starts with nothing held.  Calls subtract every lock the
callee might release on the caller's thread; spawned children release on
their own thread, and externs are assumed not to unlock anything
(nothing in their closed-world semantics can).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..ir import (
    AccessId,
    KIND_DYNAMIC_CALL,
    KIND_LOCK,
    KIND_STATIC_CALL,
    KIND_UNLOCK,
    Program,
)
from ..facts import CallGraph, Loc, PointsToInfo, loc_sort_key
from .stc import StcResult, stc_safe_accesses


@dataclass
class LockOwnership:
    entry: dict[str, frozenset[str]]
    must_held: dict[AccessId, frozenset[str]]
    held_at: dict[tuple[str, str, int], frozenset[str]]
    owner: dict[Loc, frozenset[str]]
    trivially_safe: frozenset[Loc]
    safe: frozenset[AccessId]


def _may_release(program: Program, cg: CallGraph) -> dict[str, frozenset[str]]:
    """Locks each function may release on its caller's thread, transitively
    over static and dynamic call edges.  Extern callbacks are excluded:
    externs themselves never unlock, and no call they could make does so
    on this thread under the closed-world semantics used here."""
    direct: dict[str, set[str]] = {f.name: set() for f in program.functions}
    edges: dict[str, set[str]] = {f.name: set() for f in program.functions}
    for fn in program.functions:
        for block in fn.blocks:
            for instr in block.instructions:
                if instr.kind == KIND_UNLOCK:
                    direct[fn.name].add(instr.lock)
    for site in cg.sites:
        if site.kind in ("static", "dynamic"):
            edges[site.caller].update(site.callees)
    rel = {f: set(locks) for f, locks in direct.items()}
    changed = True
    while changed:
        changed = False
        for f in rel:
            for g in edges[f]:
                if not rel[g] <= rel[f]:
                    rel[f] |= rel[g]
                    changed = True
    return {f: frozenset(locks) for f, locks in rel.items()}


def _transfer(
    instr,
    held: frozenset[str],
    releases: dict[str, frozenset[str]],
    cg: CallGraph,
    track_unlock: bool = True,
) -> frozenset[str]:
    kind = instr.kind
    if kind == KIND_LOCK:
        return held | {instr.lock}
    if kind == KIND_UNLOCK:
        return held - {instr.lock} if track_unlock else held
    if kind == KIND_STATIC_CALL:
        if instr.func in releases:
            return held - releases[instr.func]
        return held  # extern
    if kind == KIND_DYNAMIC_CALL:
        out = held
        for g in sorted(cg.address_taken):
            out = out - releases[g]
        return out
    return held


def compute_lock_ownership(
    program: Program,
    cg: CallGraph,
    pti: PointsToInfo,
    stc: StcResult,
    faults: frozenset[str] = frozenset(),
) -> LockOwnership:
    all_locks = frozenset(program.locks)
    track_unlock = "lo.ignore_unlock" not in faults
    releases = _may_release(program, cg)
    create_targets = {c.target for c in cg.create_sites}

    entry: dict[str, frozenset[str]] = {}
    for fn in program.functions:
        if fn.name == "main" or fn.name in create_targets:
            entry[fn.name] = frozenset()
        else:
            entry[fn.name] = all_locks

    # Held set just before each call instruction, keyed by site position.
    site_held: dict[tuple[str, str, int], frozenset[str]] = {}

    def run_function(fname: str) -> dict[tuple[str, int], frozenset[str]]:
        """Must-held set just before every instruction of `fname`."""
        fn = program.function(fname)
        block_in: dict[str, frozenset[str]] = {
            b.name: all_locks for b in fn.blocks
        }
        block_in[fn.entry.name] = entry[fname]
        block_out: dict[str, frozenset[str]] = {}
        preds: dict[str, list[str]] = {b.name: [] for b in fn.blocks}
        for b in fn.blocks:
            for s in b.successors:
                preds[s].append(b.name)
        at: dict[tuple[str, int], frozenset[str]] = {}
        changed = True
        while changed:
            changed = False
            for b in fn.blocks:
                held = entry[fname] if b.name == fn.entry.name else all_locks
                for p in preds[b.name]:
                    held &= block_out.get(p, all_locks)
                if b.name != fn.entry.name and not preds[b.name]:
                    held = all_locks  # unreachable: vacuous
                if held != block_in[b.name]:
                    block_in[b.name] = held
                    changed = True
                held = block_in[b.name]
                for i, instr in enumerate(b.instructions):
                    at[(b.name, i)] = held
                    held = _transfer(instr, held, releases, cg, track_unlock)
                if block_out.get(b.name) != held:
                    block_out[b.name] = held
                    changed = True
        return at

    # Entry sets depend on held sets at call sites in other functions and
    # vice versa; round-robin over functions until both stabilize.  The
    # lattice is finite and everything descends, so this terminates.
    order = [f.name for f in program.functions]
    while True:
        stable = True
        per_fn = {f: run_function(f) for f in order}
        for f in order:
            for site in cg.sites:
                if site.caller != f:
                    continue
                site_held[(site.caller, site.block, site.index)] = per_fn[f][
                    (site.block, site.index)
                ]
        for f in order:
            if f == "main" or f in create_targets:
                continue
            constraint = all_locks
            seen_site = False
            for site in cg.sites:
                if f in site.callees:
                    seen_site = True
                    constraint &= site_held[(site.caller, site.block, site.index)]
            new_entry = constraint if seen_site else all_locks
            if new_entry != entry[f]:
                entry[f] = new_entry
                stable = False
        if stable:
            break

    final = {f: run_function(f) for f in order}
    held_at = {
        (f, block, i): held
        for f, pts in final.items()
        for (block, i), held in pts.items()
    }
    must_held: dict[AccessId, frozenset[str]] = {}
    for access_id, _instr, fn in program.accesses():
        must_held[access_id] = final[fn.name][(access_id.block, access_id.index)]

    stc_safe = stc_safe_accesses(program, stc)
    owner: dict[Loc, frozenset[str]] = {}
    trivially: set[Loc] = set()
    for loc in sorted(pti.all_cells, key=loc_sort_key):
        mt_accessors = [a for a in pti.accessors.get(loc, ()) if a not in stc_safe]
        if not mt_accessors:
            trivially.add(loc)
            continue
        if loc in pti.extern_exposed:
            owner[loc] = frozenset()
            continue
        s = all_locks
        for a in mt_accessors:
            s &= must_held[a]
        owner[loc] = s

    safe: list[AccessId] = []
    for access_id, _instr, _fn in program.accesses():
        if access_id in stc_safe:
            continue
        locs = pti.locs(access_id)
        if all(loc in trivially or owner.get(loc) for loc in locs):
            safe.append(access_id)

    return LockOwnership(
        entry=entry,
        must_held=must_held,
        held_at=held_at,
        owner=owner,
        trivially_safe=frozenset(trivially),
        safe=frozenset(safe),
    )
