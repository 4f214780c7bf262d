"""Control-flow graph views over functions.

Blocks already carry their successor labels; this module adds the
derived structure the analyses want: predecessor maps, a stable block
order, and a virtual exit node that closes over every return block so
post-dominance is well defined even with multiple returns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .nodes import BasicBlock, Function

#: Name of the synthetic exit node appended to every function's graph.
#: Block labels come from `parse`, which rejects punctuation in names,
#: so the angle brackets cannot collide with a real label.
VIRTUAL_EXIT = "<exit>"


@dataclass
class CfgView:
    """Successor/predecessor structure for one function.

    ``order`` lists real block names in declaration order followed by
    :data:`VIRTUAL_EXIT`.  Return blocks get the virtual exit as their
    only successor; the virtual exit has none.
    """

    function: Function
    order: list[str] = field(default_factory=list)
    succs: dict[str, tuple[str, ...]] = field(default_factory=dict)
    preds: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def entry(self) -> str:
        return self.function.entry.name

    def block(self, name: str) -> BasicBlock:
        return self.function.block(name)

    def real_blocks(self) -> list[str]:
        return self.order[:-1]


def build_cfg(fn: Function) -> CfgView:
    order = [b.name for b in fn.blocks] + [VIRTUAL_EXIT]
    succs: dict[str, tuple[str, ...]] = {}
    preds: dict[str, list[str]] = {name: [] for name in order}
    for block in fn.blocks:
        if block.successors:
            succs[block.name] = block.successors
        elif block.ends_with_return:
            succs[block.name] = (VIRTUAL_EXIT,)
        else:
            # The parser guarantees a terminator, so this only triggers on
            # hand-built functions.
            raise ValueError(
                f"block '{block.name}' of '{fn.name}' has no terminator"
            )
        for s in succs[block.name]:
            preds[s].append(block.name)
    succs[VIRTUAL_EXIT] = ()
    return CfgView(
        function=fn,
        order=order,
        succs=succs,
        preds={name: tuple(ps) for name, ps in preds.items()},
    )


def reachable_blocks(cfg: CfgView) -> set[str]:
    """Names of blocks reachable from the entry, excluding the virtual exit."""
    seen = {cfg.entry}
    frontier = [cfg.entry]
    while frontier:
        name = frontier.pop()
        for s in cfg.succs[name]:
            if s != VIRTUAL_EXIT and s not in seen:
                seen.add(s)
                frontier.append(s)
    return seen
