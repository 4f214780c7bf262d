"""Call structure of a program.

Call targets come in three precisions: static calls name their callee,
dynamic calls may reach any address-taken function, and extern calls
disappear into unanalyzed code that must be assumed to invoke any
address-taken function before returning.  Thread creation is kept as a
separate edge kind because several analyses care whether control stays
on the same thread (lock transfer, redundancy summaries) or moves to a
new one (multithreading inference).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..ir import (
    KIND_ADDR_OF_FUNC,
    KIND_CREATE,
    KIND_DYNAMIC_CALL,
    KIND_STATIC_CALL,
    Program,
    iter_instructions,
)


@dataclass(frozen=True)
class CallSite:
    """One call instruction.  ``callees`` lists the declared functions the
    site may invoke (empty for an extern call into a program with no
    address-taken functions); ``extern`` carries the extern's name when
    the site leaves analyzed code."""

    caller: str
    block: str
    index: int
    kind: str  # "static" | "dynamic" | "extern"
    callees: tuple[str, ...]
    extern: Optional[str] = None


@dataclass(frozen=True)
class CreateSite:
    caller: str
    block: str
    index: int
    target: str


@dataclass
class CallGraph:
    program: Program
    address_taken: frozenset[str]
    sites: tuple[CallSite, ...]
    create_sites: tuple[CreateSite, ...]
    call_edges: dict[str, frozenset[str]]
    spawn_edges: dict[str, frozenset[str]]
    calls_extern: frozenset[str]

    def may_call(self, func: str) -> frozenset[str]:
        """Functions `func` may pass control to, by call or by spawn."""
        return self.call_edges[func] | self.spawn_edges[func]

    def same_thread_callees(self, func: str) -> frozenset[str]:
        return self.call_edges[func]

    def sites_of(self, callee: str) -> list[CallSite]:
        return [s for s in self.sites if callee in s.callees]

    def sites_in(self, func: str, block: str) -> list[CallSite]:
        return [s for s in self.sites if s.caller == func and s.block == block]

    def is_create_target(self, func: str) -> bool:
        return any(c.target == func for c in self.create_sites)

    def transitive_same_thread(self, roots: frozenset[str] | set[str]) -> frozenset[str]:
        """Closure of ``roots`` under same-thread call edges (roots included)."""
        seen = set(roots)
        frontier = list(roots)
        while frontier:
            f = frontier.pop()
            for g in self.call_edges.get(f, ()):
                if g not in seen:
                    seen.add(g)
                    frontier.append(g)
        return frozenset(seen)


def build_callgraph(program: Program) -> CallGraph:
    fn_names = {f.name for f in program.functions}
    taken: set[str] = set()
    for _fn, _blk, _i, instr in iter_instructions(program):
        if instr.kind == KIND_ADDR_OF_FUNC:
            taken.add(instr.func)
        elif instr.kind == KIND_CREATE:
            taken.add(instr.func)
    address_taken = frozenset(taken)
    taken_sorted = tuple(sorted(address_taken))

    sites: list[CallSite] = []
    creates: list[CreateSite] = []
    call_edges: dict[str, set[str]] = {f.name: set() for f in program.functions}
    spawn_edges: dict[str, set[str]] = {f.name: set() for f in program.functions}
    calls_extern: set[str] = set()

    for fn, block, i, instr in iter_instructions(program):
        if instr.kind == KIND_STATIC_CALL:
            if instr.func in fn_names:
                sites.append(CallSite(fn.name, block.name, i, "static", (instr.func,)))
                call_edges[fn.name].add(instr.func)
            else:
                # Extern: unknown code that may call back into anything
                # whose address the program has taken.
                sites.append(
                    CallSite(
                        fn.name, block.name, i, "extern", taken_sorted, extern=instr.func
                    )
                )
                call_edges[fn.name].update(address_taken)
                calls_extern.add(fn.name)
        elif instr.kind == KIND_DYNAMIC_CALL:
            sites.append(CallSite(fn.name, block.name, i, "dynamic", taken_sorted))
            call_edges[fn.name].update(address_taken)
        elif instr.kind == KIND_CREATE:
            creates.append(CreateSite(fn.name, block.name, i, instr.func))
            spawn_edges[fn.name].add(instr.func)

    return CallGraph(
        program=program,
        address_taken=address_taken,
        sites=tuple(sites),
        create_sites=tuple(creates),
        call_edges={f: frozenset(s) for f, s in call_edges.items()},
        spawn_edges={f: frozenset(s) for f, s in spawn_edges.items()},
        calls_extern=frozenset(calls_extern),
    )
