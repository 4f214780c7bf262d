"""Mini-IR: types, text frontend, printer and CFG helpers."""

from .nodes import (
    ACCESS_KINDS,
    AccessId,
    BasicBlock,
    FrontendError,
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
from .parser import iter_instructions, parse, parse_file, tokenize
from .printer import print_instruction, print_program
from .cfg import CfgView, VIRTUAL_EXIT, build_cfg, reachable_blocks

__all__ = [
    "ACCESS_KINDS",
    "AccessId",
    "BasicBlock",
    "CfgView",
    "FrontendError",
    "Function",
    "Instruction",
    "KIND_ADDR_OF_FIELD",
    "KIND_ADDR_OF_FUNC",
    "KIND_ADDR_OF_VAR",
    "KIND_COMPUTE",
    "KIND_CREATE",
    "KIND_DYNAMIC_CALL",
    "KIND_LOCK",
    "KIND_READ",
    "KIND_RETURN",
    "KIND_STATIC_CALL",
    "KIND_UNLOCK",
    "KIND_WRITE",
    "Program",
    "VIRTUAL_EXIT",
    "VarDecl",
    "build_cfg",
    "iter_instructions",
    "parse",
    "parse_file",
    "print_instruction",
    "print_program",
    "reachable_blocks",
    "tokenize",
]
