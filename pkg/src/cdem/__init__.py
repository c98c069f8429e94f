"""Exact conditional tests of the common diagonal effect model.

Two-way tables are tested for a common diagonal effect against
quasi-independence by a Metropolis-Hastings walk over the tables that
share the row sums, column sums and diagonal sum, using an explicit
Markov basis for that fiber.
"""
from ._backend import has_compiled
from .basis import MarkovBasis, classify_move, generate_basis
from .errors import DimensionError, FitError, NegativeCellError, ResourceLimitError, TableFormatError
from .fiber import (
    Fiber,
    FiberGraph,
    check_distance_reduction,
    count_fiber,
    enumerate_fiber,
    is_connected,
    verify_connectivity,
)
from .fit import (
    FitResult,
    chi2_sf,
    fit_cdem,
    fit_independence,
    fit_qi,
    g2,
    pearson_chi2,
    test_df,
)
from .mcmc import (
    ChainConfig,
    ChainResult,
    conditional_log_weight,
    exact_conditional_p,
    histogram,
    mh_step,
    run_chain,
    run_chains,
)
from .table import (
    Move,
    MoveType,
    SufficientStat,
    Table,
    apply_move,
    is_applicable,
    is_move,
    l1_distance,
    parse_table,
    read_table,
    suff_stat,
)

__all__ = [
    "Fiber",
    "FiberGraph",
    "check_distance_reduction",
    "count_fiber",
    "enumerate_fiber",
    "is_connected",
    "verify_connectivity",
    "FitResult",
    "chi2_sf",
    "fit_cdem",
    "fit_independence",
    "fit_qi",
    "g2",
    "pearson_chi2",
    "test_df",
    "ChainConfig",
    "ChainResult",
    "conditional_log_weight",
    "exact_conditional_p",
    "histogram",
    "mh_step",
    "run_chain",
    "run_chains",
    "Move",
    "MoveType",
    "SufficientStat",
    "Table",
    "apply_move",
    "is_applicable",
    "is_move",
    "l1_distance",
    "parse_table",
    "read_table",
    "suff_stat",
    "has_compiled",
    "MarkovBasis",
    "classify_move",
    "generate_basis",
    "DimensionError",
    "FitError",
    "NegativeCellError",
    "ResourceLimitError",
    "TableFormatError",
]

__version__ = "0.1.0"
