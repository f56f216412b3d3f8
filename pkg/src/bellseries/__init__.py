"""Two-station outcome-series toolkit.

Fixed-length recorded runs of paired measurements, the counting
statistics and efficiency bounds defined on them, an identity check on
each station's outcome series across the distant station's settings,
the rearrangement/condensation/completion machinery that identity
supports, exhaustive sweeps over all small tables, and a seeded
simulator for quantum and locally deterministic sources.
"""

from .errors import (
    BellSeriesError,
    BudgetExceeded,
    DomainError,
    ParseError,
    PreconditionError,
    StructuralError,
)
from .model import (
    MINUS,
    PAIRINGS,
    PLUS,
    ZERO,
    ASetting,
    BSetting,
    Pairing,
    RecordedRun,
    Schedule,
    SeriesTable,
    block_halves,
    custom_schedule,
    derive_schedule,
    pairing_blocks,
    project_table,
    random_per_slot,
    run_from_table,
    table_from_run,
    validate,
)
from .oracle import (
    EnumSpec,
    census_complete_tables,
    max_chsh,
    max_clauser_horne,
    max_s_eta,
    sweep_cardinality_bound,
)
from .sica import (
    CompleteTable,
    CondensedTable,
    apply_plan,
    build_complete_table,
    check_sica,
    condense,
    enumerate_complete_tables,
    fill_counterfactual,
    normalize_to_block_halves,
    reorder_to_sica,
)
from .simulate import DEFAULT_ANGLES, SourceConfig, expected_chsh, replay, simulate
from .stats import (
    cardinality_bound,
    chsh,
    chsh_detail,
    clauser_horne_j,
    correlation,
    correlation_report,
    detector_efficiencies,
    efficiency_bound,
    overlap_fraction,
    set_stats,
    station_retention,
    table_eta,
)

__version__ = "0.1.0"

__all__ = [
    "ASetting",
    "BSetting",
    "BellSeriesError",
    "BudgetExceeded",
    "CompleteTable",
    "CondensedTable",
    "DEFAULT_ANGLES",
    "DomainError",
    "EnumSpec",
    "MINUS",
    "PAIRINGS",
    "PLUS",
    "Pairing",
    "ParseError",
    "PreconditionError",
    "RecordedRun",
    "Schedule",
    "SeriesTable",
    "SourceConfig",
    "StructuralError",
    "ZERO",
    "apply_plan",
    "block_halves",
    "build_complete_table",
    "cardinality_bound",
    "census_complete_tables",
    "check_sica",
    "chsh",
    "chsh_detail",
    "clauser_horne_j",
    "condense",
    "correlation",
    "correlation_report",
    "custom_schedule",
    "derive_schedule",
    "detector_efficiencies",
    "efficiency_bound",
    "enumerate_complete_tables",
    "expected_chsh",
    "fill_counterfactual",
    "max_chsh",
    "max_clauser_horne",
    "max_s_eta",
    "normalize_to_block_halves",
    "overlap_fraction",
    "pairing_blocks",
    "project_table",
    "random_per_slot",
    "replay",
    "reorder_to_sica",
    "run_from_table",
    "set_stats",
    "simulate",
    "station_retention",
    "sweep_cardinality_bound",
    "table_eta",
    "table_from_run",
    "validate",
]
