"""Program-wide facts shared by the analyses: call structure,
points-to sets, and dominance."""

from .callgraph import CallGraph, CallSite, CreateSite, build_callgraph
from .dominance import DominanceInfo, compute_dominance, dominator_sets
from .pointsto import (
    FuncTarget,
    Loc,
    Pointee,
    PointsToInfo,
    compute_points_to,
    decl_cells,
    loc_sort_key,
)

__all__ = [
    "CallGraph",
    "CallSite",
    "CreateSite",
    "DominanceInfo",
    "FuncTarget",
    "Loc",
    "Pointee",
    "PointsToInfo",
    "build_callgraph",
    "compute_dominance",
    "compute_points_to",
    "decl_cells",
    "dominator_sets",
    "loc_sort_key",
]
