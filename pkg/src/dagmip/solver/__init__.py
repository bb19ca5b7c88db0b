"""Branch-and-bound with outer approximation for the layered-network program."""

from .bnb import (
    GAP_REACHED,
    OPTIMAL,
    TIME_LIMIT,
    BnbNode,
    DegenerateColumn,
    SolveConfig,
    SolveReport,
    branch_and_bound,
    gap_target,
    greedy_incumbent,
    rescale_to_trace,
    write_event_log,
)
from .oa import CutPool, OaCut, oa_cut_at, solve_integer_log_program
from .parentsets import ParentSetTable, TooManyParents
from .relaxation import InfeasibleNode, SubsolverStall, solve_node_relaxation

__all__ = [
    "BnbNode",
    "CutPool",
    "DegenerateColumn",
    "GAP_REACHED",
    "InfeasibleNode",
    "OPTIMAL",
    "OaCut",
    "ParentSetTable",
    "SolveConfig",
    "SolveReport",
    "SubsolverStall",
    "TIME_LIMIT",
    "TooManyParents",
    "branch_and_bound",
    "gap_target",
    "greedy_incumbent",
    "oa_cut_at",
    "rescale_to_trace",
    "solve_integer_log_program",
    "solve_node_relaxation",
    "write_event_log",
]
