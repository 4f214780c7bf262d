"""Core IR node types for the concurrent mini-language.

A program is a set of global variables, locks, extern declarations and
functions. Each function is a list of basic blocks; blocks hold straight-line
instructions and end either in a `return` instruction (exit block) or in an
edge list derived from `goto`/`branch` terminators. Branch guards are opaque
strings with no semantics; the interpreter treats a two-successor block as a
nondeterministic choice.

Registers are function-local virtual registers and can never have their
address taken. Locals (and globals) are addressable; aggregates expose a flat
field list. Every `read`/`write` instruction is a memory access and gets a
stable AccessId of the form ``func:block:index:mode``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Tuple

# Instruction kinds. `goto`/`branch` are not instructions: they only
# contribute block successors.
KIND_LOCK = "lock"
KIND_UNLOCK = "unlock"
KIND_STATIC_CALL = "static_call"
KIND_DYNAMIC_CALL = "dynamic_call"
KIND_RETURN = "return"
KIND_COMPUTE = "compute"
KIND_CREATE = "create"
KIND_READ = "read"
KIND_WRITE = "write"
KIND_ADDR_OF_VAR = "addr_of_var"
KIND_ADDR_OF_FIELD = "addr_of_field"
KIND_ADDR_OF_FUNC = "addr_of_func"

ACCESS_KINDS = (KIND_READ, KIND_WRITE)


class AccessId(NamedTuple):
    """Stable identity of one memory access instruction."""

    func: str
    block: str
    index: int
    mode: str  # "r" or "w"

    @property
    def text(self) -> str:
        return f"{self.func}:{self.block}:{self.index}:{self.mode}"

    @classmethod
    def parse(cls, text: str) -> "AccessId":
        func, block, index, mode = text.rsplit(":", 3)
        return cls(func, block, int(index), mode)


@dataclass(frozen=True)
class Instruction:
    """One IR instruction. Only the fields relevant to `kind` are set.

    kind            fields used
    lock/unlock     lock
    static_call     dst (optional), func, args
    dynamic_call    dst (optional), fn_reg, args
    return          src (optional)
    compute         dst, args
    create          func
    read            dst, addr
    write           addr, src
    addr_of_var     dst, var
    addr_of_field   dst, var, field
    addr_of_func    dst, func
    """

    kind: str
    dst: Optional[str] = None
    func: Optional[str] = None
    fn_reg: Optional[str] = None
    args: Tuple[str, ...] = ()
    lock: Optional[str] = None
    var: Optional[str] = None
    field_name: Optional[str] = None
    addr: Optional[str] = None
    src: Optional[str] = None
    line: int = field(default=0, compare=False)

    @property
    def is_access(self) -> bool:
        return self.kind in ACCESS_KINDS

    @property
    def is_call(self) -> bool:
        return self.kind in (KIND_STATIC_CALL, KIND_DYNAMIC_CALL)


@dataclass(frozen=True)
class VarDecl:
    """A global or local variable; `fields` is None for scalars."""

    name: str
    fields: Optional[Tuple[str, ...]] = None

    @property
    def is_aggregate(self) -> bool:
        return self.fields is not None


@dataclass
class BasicBlock:
    name: str
    instructions: list[Instruction] = field(default_factory=list)
    # Successor block names from goto/branch; empty for return blocks.
    successors: Tuple[str, ...] = ()
    guard: Optional[str] = None
    line: int = field(default=0, compare=False)

    @property
    def ends_with_return(self) -> bool:
        return bool(self.instructions) and self.instructions[-1].kind == KIND_RETURN


@dataclass
class Function:
    name: str
    formals: Tuple[str, ...] = ()
    regs: Tuple[str, ...] = ()  # declared via `regs`; formals are separate
    locals: Tuple[VarDecl, ...] = ()
    blocks: list[BasicBlock] = field(default_factory=list)
    line: int = field(default=0, compare=False)

    @property
    def entry(self) -> BasicBlock:
        return self.blocks[0]

    @property
    def all_regs(self) -> Tuple[str, ...]:
        return self.formals + self.regs

    def block(self, name: str) -> BasicBlock:
        for b in self.blocks:
            if b.name == name:
                return b
        raise KeyError(name)


@dataclass
class Program:
    globals: Tuple[VarDecl, ...] = ()
    locks: Tuple[str, ...] = ()
    externs: Tuple[str, ...] = ()
    functions: list[Function] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def function(self, name: str) -> Function:
        for f in self.functions:
            if f.name == name:
                return f
        raise KeyError(name)

    def has_function(self, name: str) -> bool:
        return any(f.name == name for f in self.functions)

    def global_decl(self, name: str) -> VarDecl:
        for g in self.globals:
            if g.name == name:
                return g
        raise KeyError(name)

    def accesses(self) -> Iterator[Tuple[AccessId, Instruction, Function]]:
        """All read/write instructions in declaration order."""
        for fn in self.functions:
            for blk in fn.blocks:
                for idx, instr in enumerate(blk.instructions):
                    if instr.is_access:
                        mode = "r" if instr.kind == KIND_READ else "w"
                        yield AccessId(fn.name, blk.name, idx, mode), instr, fn

    def access_ids(self) -> list[AccessId]:
        return [aid for aid, _, _ in self.accesses()]

    def access_instruction(self, aid: AccessId) -> Instruction:
        return self.function(aid.func).block(aid.block).instructions[aid.index]


class FrontendError(Exception):
    """Raised for syntax and validation errors; carries a source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def __str__(self) -> str:
        if self.line:
            return f"line {self.line}: {self.message}"
        return self.message
