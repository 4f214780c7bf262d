"""Canonical text emission for the mini-IR.

`print_program` emits surface syntax that `parse` accepts, and parsing
the output yields a program equal to the input (source positions aside).
"""

from __future__ import annotations

from .nodes import (
    BasicBlock,
    Function,
    Instruction,
    KIND_ADDR_OF_FIELD,
    KIND_ADDR_OF_FUNC,
    KIND_ADDR_OF_VAR,
    KIND_COMPUTE,
    KIND_CREATE,
    KIND_DYNAMIC_CALL,
    KIND_LOCK,
    KIND_READ,
    KIND_RETURN,
    KIND_STATIC_CALL,
    KIND_UNLOCK,
    KIND_WRITE,
    Program,
    VarDecl,
)


def _decl(v: VarDecl) -> str:
    if v.fields is None:
        return v.name
    return f"{v.name} {{ {', '.join(v.fields)} }}"


def print_instruction(instr: Instruction) -> str:
    kind = instr.kind
    if kind == KIND_LOCK:
        return f"lock {instr.lock};"
    if kind == KIND_UNLOCK:
        return f"unlock {instr.lock};"
    if kind == KIND_CREATE:
        return f"create {instr.func};"
    if kind == KIND_WRITE:
        return f"write *{instr.addr}, {instr.src};"
    if kind == KIND_READ:
        return f"{instr.dst} = read *{instr.addr};"
    if kind == KIND_ADDR_OF_VAR:
        return f"{instr.dst} = &{instr.var};"
    if kind == KIND_ADDR_OF_FIELD:
        return f"{instr.dst} = &{instr.var}.{instr.field_name};"
    if kind == KIND_ADDR_OF_FUNC:
        return f"{instr.dst} = &&{instr.func};"
    if kind == KIND_COMPUTE:
        args = ", ".join(instr.args)
        return f"{instr.dst} = op {args};".replace(" ;", ";")
    if kind in (KIND_STATIC_CALL, KIND_DYNAMIC_CALL):
        callee = instr.func if kind == KIND_STATIC_CALL else f"*{instr.fn_reg}"
        call = f"call {callee}({', '.join(instr.args)})"
        return f"{instr.dst} = {call};" if instr.dst is not None else f"{call};"
    if kind == KIND_RETURN:
        return f"return {instr.src};" if instr.src is not None else "return;"
    raise ValueError(f"cannot print instruction kind {kind!r}")


def _print_block(block: BasicBlock, out: list[str]) -> None:
    out.append(f"  {block.name}:")
    for instr in block.instructions:
        out.append(f"    {print_instruction(instr)}")
    if len(block.successors) == 1:
        out.append(f"    goto {block.successors[0]};")
    elif len(block.successors) == 2:
        guard = f"[{block.guard}] " if block.guard is not None else ""
        out.append(f"    branch {guard}{block.successors[0]} {block.successors[1]};")
    # A return block has no successors and already printed its terminator.


def _print_function(fn: Function, out: list[str]) -> None:
    out.append(f"fn {fn.name}({', '.join(fn.formals)}) {{")
    if fn.regs:
        out.append(f"  regs {', '.join(fn.regs)};")
    if fn.locals:
        out.append(f"  locals {', '.join(_decl(v) for v in fn.locals)};")
    for block in fn.blocks:
        _print_block(block, out)
    out.append("}")


def print_program(program: Program) -> str:
    out: list[str] = []
    for g in program.globals:
        out.append(f"global {_decl(g)};")
    for lk in program.locks:
        out.append(f"lock {lk};")
    for ex in program.externs:
        out.append(f"extern {ex};")
    if out:
        out.append("")
    for i, fn in enumerate(program.functions):
        if i:
            out.append("")
        _print_function(fn, out)
    return "\n".join(out) + "\n"
