"""Single-threaded-code inference.

An access can only race if some other thread can run while it executes.
This analysis over-approximates the set of functions (and, within
``main``, the set of blocks) that may execute while more than one
thread is alive.  Everything outside that set is retired from
instrumentation.

Multithreaded functions ``MT``:
  * a non-main function containing a ``create``,
  * any address-taken function (a dynamic call or extern callback could
    run it on either side of a spawn),
  * a non-main function that may call, or be called by, an MT function,
  * a non-main function callable from an MT block of ``main``.

Multithreaded blocks of ``main``:
  * a block containing a ``create``,
  * a block that may call an MT function,
  * any successor of an MT block.

``main`` itself is judged block by block; its pre-spawn prefix stays
single-threaded.  If ``main``'s own address is taken, every one of its
blocks is treated as multithreaded.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..ir import AccessId, KIND_ADDR_OF_FUNC, KIND_CREATE, Program, iter_instructions
from ..facts import CallGraph


@dataclass(frozen=True)
class StcResult:
    mt_functions: frozenset[str]
    mt_main_blocks: frozenset[str]

    def block_is_mt(self, func: str, block: str) -> bool:
        if func == "main":
            return block in self.mt_main_blocks
        return func in self.mt_functions


def _block_callees(
    cg: CallGraph, func: str, block: str, track_creates: bool = True
) -> set[str]:
    out: set[str] = set()
    for site in cg.sites_in(func, block):
        out.update(site.callees)
    if track_creates:
        for c in cg.create_sites:
            if c.caller == func and c.block == block:
                out.add(c.target)
    return out


def compute_stc(
    program: Program,
    cg: CallGraph,
    method: str = "worklist",
    faults: frozenset[str] = frozenset(),
) -> StcResult:
    track_creates = "stc.ignore_created" not in faults
    if method == "worklist":
        return _stc_worklist(program, cg, track_creates)
    if method == "kleene":
        return _stc_kleene(program, cg, track_creates)
    raise ValueError(f"unknown method {method!r}")


def _creates_in(program: Program, fname: str) -> bool:
    for block in program.function(fname).blocks:
        for instr in block.instructions:
            if instr.kind == KIND_CREATE:
                return True
    return False


def _explicitly_taken(program: Program) -> frozenset[str]:
    out = set()
    for _fn, _blk, _i, instr in iter_instructions(program):
        if instr.kind == KIND_ADDR_OF_FUNC:
            out.add(instr.func)
    return frozenset(out)


def _seed(
    program: Program, cg: CallGraph, track_creates: bool
) -> tuple[set[str], set[str]]:
    # The "stc.ignore_created" fault models an implementation that is
    # blind to thread creation: spawned functions neither seed the
    # multithreaded set nor count as address-taken, and spawn edges
    # drop out of the call-neighborhood closure.
    taken = cg.address_taken if track_creates else _explicitly_taken(program)
    mt_f: set[str] = set()
    mt_b: set[str] = set()
    for fn in program.functions:
        if fn.name == "main":
            continue
        if fn.name in taken:
            mt_f.add(fn.name)
        elif track_creates and _creates_in(program, fn.name):
            mt_f.add(fn.name)
    main = program.function("main")
    if "main" in taken:
        mt_b.update(b.name for b in main.blocks)
    if track_creates:
        for block in main.blocks:
            if any(i.kind == KIND_CREATE for i in block.instructions):
                mt_b.add(block.name)
    return mt_f, mt_b


def _stc_worklist(program: Program, cg: CallGraph, track_creates: bool = True) -> StcResult:
    mt_f, mt_b = _seed(program, cg, track_creates)
    main = program.function("main")
    main_blocks = {b.name: b for b in main.blocks}
    block_calls = {
        b.name: _block_callees(cg, "main", b.name, track_creates)
        for b in main.blocks
    }
    neighbors_of = cg.may_call if track_creates else cg.same_thread_callees
    callers: dict[str, set[str]] = {f.name: set() for f in program.functions}
    for f in program.functions:
        for g in neighbors_of(f.name):
            callers[g].add(f.name)

    work: list[tuple[str, str]] = [("f", f) for f in sorted(mt_f)]
    work += [("b", b) for b in sorted(mt_b)]
    while work:
        tag, name = work.pop()
        if tag == "f":
            # Call neighbors in either direction become multithreaded.
            neighbors = set(neighbors_of(name)) | callers[name]
            for g in sorted(neighbors):
                if g != "main" and g not in mt_f:
                    mt_f.add(g)
                    work.append(("f", g))
            for bname, callees in sorted(block_calls.items()):
                if name in callees and bname not in mt_b:
                    mt_b.add(bname)
                    work.append(("b", bname))
        else:
            for g in sorted(block_calls[name]):
                if g != "main" and g not in mt_f:
                    mt_f.add(g)
                    work.append(("f", g))
            for succ in main_blocks[name].successors:
                if succ not in mt_b:
                    mt_b.add(succ)
                    work.append(("b", succ))
    return StcResult(frozenset(mt_f), frozenset(mt_b))


def _stc_kleene(program: Program, cg: CallGraph, track_creates: bool = True) -> StcResult:
    """Reapply every rule from scratch until nothing grows."""
    mt_f, mt_b = _seed(program, cg, track_creates)
    main = program.function("main")
    non_main = [f.name for f in program.functions if f.name != "main"]
    neighbors_of = cg.may_call if track_creates else cg.same_thread_callees
    while True:
        before = (len(mt_f), len(mt_b))
        for f in non_main:
            if f in mt_f:
                continue
            if neighbors_of(f) & mt_f:
                mt_f.add(f)
            elif any(f in neighbors_of(g) for g in mt_f):
                mt_f.add(f)
            elif any(
                f in _block_callees(cg, "main", b, track_creates) for b in mt_b
            ):
                mt_f.add(f)
        for block in main.blocks:
            if block.name in mt_b:
                for succ in block.successors:
                    mt_b.add(succ)
            elif _block_callees(cg, "main", block.name, track_creates) & mt_f:
                mt_b.add(block.name)
        if (len(mt_f), len(mt_b)) == before:
            return StcResult(frozenset(mt_f), frozenset(mt_b))


def stc_safe_accesses(program: Program, result: StcResult) -> frozenset[AccessId]:
    """Accesses whose enclosing code can never run beside another thread."""
    safe = [
        access_id
        for access_id, _instr, fn in program.accesses()
        if not result.block_is_mt(fn.name, access_id.block)
    ]
    return frozenset(safe)
