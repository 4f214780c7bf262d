"""Dominance and post-dominance over block graphs.

Uses the classic iterative set intersection: start every reachable node
at the full node set and shrink until stable.  Graphs here are at most a
few dozen blocks, so the simple algorithm is plenty and easy to trust.

Post-dominance runs the same computation on the reversed graph rooted at
the virtual exit.  Blocks with no path to the exit drop out of the
post-dominance map entirely (rather than receiving the vacuous "all
blocks" answer), and are listed separately as ``detached``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from ..ir import CfgView, VIRTUAL_EXIT


def dominator_sets(
    nodes: Sequence[str],
    succs: Mapping[str, Iterable[str]],
    entry: str,
) -> dict[str, frozenset[str]]:
    """Dominator sets for every node reachable from ``entry``.

    Nodes unreachable from the entry are omitted from the result.
    """
    reachable: set[str] = {entry}
    frontier = [entry]
    while frontier:
        n = frontier.pop()
        for s in succs.get(n, ()):
            if s not in reachable:
                reachable.add(s)
                frontier.append(s)

    preds: dict[str, list[str]] = {n: [] for n in nodes if n in reachable}
    for n in nodes:
        if n not in reachable:
            continue
        for s in succs.get(n, ()):
            if s in reachable:
                preds[s].append(n)

    order = [n for n in nodes if n in reachable]
    full = frozenset(order)
    dom: dict[str, frozenset[str]] = {
        n: frozenset({entry}) if n == entry else full for n in order
    }
    changed = True
    while changed:
        changed = False
        for n in order:
            if n == entry:
                continue
            new = full
            for p in preds[n]:
                new = new & dom[p]
            new = new | {n}
            if new != dom[n]:
                dom[n] = new
                changed = True
    return dom


def _immediate(dom: Mapping[str, frozenset[str]], root: str) -> dict[str, Optional[str]]:
    idom: dict[str, Optional[str]] = {}
    for n, ds in dom.items():
        if n == root:
            idom[n] = None
            continue
        strict = ds - {n}
        # Strict dominators are totally ordered; the immediate one has the
        # largest dominator set.
        idom[n] = max(strict, key=lambda m: len(dom[m]))
    return idom


def _tree(
    idom: Mapping[str, Optional[str]], decl_order: Sequence[str]
) -> dict[str, list[str]]:
    rank = {n: i for i, n in enumerate(decl_order)}
    children: dict[str, list[str]] = {n: [] for n in idom}
    for n, p in idom.items():
        if p is not None:
            children[p].append(n)
    for kids in children.values():
        kids.sort(key=lambda n: rank[n])
    return children


def _preorder(children: Mapping[str, list[str]], root: str) -> list[str]:
    out: list[str] = []
    stack = [root]
    while stack:
        n = stack.pop()
        out.append(n)
        stack.extend(reversed(children[n]))
    return out


@dataclass
class DominanceInfo:
    """Dominance facts for one function's CFG (virtual exit included)."""

    entry: str
    dom: dict[str, frozenset[str]]
    pdom: dict[str, frozenset[str]]
    idom: dict[str, Optional[str]]
    ipdom: dict[str, Optional[str]]
    dom_preorder: list[str]
    pdom_preorder: list[str]
    detached: list[str]

    def dominates(self, a: str, b: str) -> bool:
        return a in self.dom.get(b, frozenset())

    def postdominates(self, a: str, b: str) -> bool:
        return a in self.pdom.get(b, frozenset())

    def reaches_exit(self, block: str) -> bool:
        return block in self.pdom


def compute_dominance(cfg: CfgView) -> DominanceInfo:
    nodes = cfg.order
    dom = dominator_sets(nodes, cfg.succs, cfg.entry)
    pdom = dominator_sets(nodes, cfg.preds, VIRTUAL_EXIT)
    idom = _immediate(dom, cfg.entry)
    ipdom = _immediate(pdom, VIRTUAL_EXIT)
    dom_children = _tree(idom, nodes)
    pdom_children = _tree(ipdom, nodes)
    detached = [n for n in nodes if n in dom and n not in pdom]
    return DominanceInfo(
        entry=cfg.entry,
        dom=dom,
        pdom=pdom,
        idom=idom,
        ipdom=ipdom,
        dom_preorder=_preorder(dom_children, cfg.entry),
        pdom_preorder=_preorder(pdom_children, VIRTUAL_EXIT),
        detached=detached,
    )
