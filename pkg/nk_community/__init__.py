from .community import (
    Partition,
    WeightedGraph,
    WeightMode,
    brute_force_max_modularity,
    graph_from_correlation,
    louvain,
    modularity,
)
from .errors import (
    CapacityError,
    InsufficientDataError,
    InvariantViolation,
    NkCommunityError,
    ParameterError,
    ParseError,
)
from .logging_config import configure_logger, get_logger
from .nk_model import (
    EpistasisMatrix,
    Mode,
    NkModel,
    TableMode,
    build_epistasis,
    fitness,
    goedel_index,
    table_value,
    trait_value,
)
from .splitmix import mix64
from .sweep import SweepConfig, SweepRecord, SweepResult, derive_seed, run_cell, run_sweep
from .trait_stats import (
    CorrelationMatrix,
    TraitMoments,
    correlation,
    enumerate_moments,
    mean_squared_correlation,
    sample_moments,
)

__all__ = [
    "CapacityError",
    "CorrelationMatrix",
    "EpistasisMatrix",
    "InsufficientDataError",
    "InvariantViolation",
    "Mode",
    "NkCommunityError",
    "NkModel",
    "ParameterError",
    "ParseError",
    "Partition",
    "SweepConfig",
    "SweepRecord",
    "SweepResult",
    "TableMode",
    "TraitMoments",
    "WeightMode",
    "WeightedGraph",
    "brute_force_max_modularity",
    "build_epistasis",
    "configure_logger",
    "correlation",
    "derive_seed",
    "enumerate_moments",
    "fitness",
    "get_logger",
    "goedel_index",
    "graph_from_correlation",
    "louvain",
    "mean_squared_correlation",
    "mix64",
    "modularity",
    "run_cell",
    "run_sweep",
    "sample_moments",
    "table_value",
    "trait_value",
]
