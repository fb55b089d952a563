"""Sequential source-task selection over guidance hold durations.

Core pieces: the performance landscape and linear-gap model, the greedy,
coarse-to-fine, random, and exhaustive selectors, closed-form coverage
bounds with a brute-force certification oracle, pluggable task evaluators,
and a single-lane ring micro-simulation as a real task backend.
"""

from .landscape import (
    GapModel,
    GridAlignmentError,
    HoldRange,
    Landscape,
    Segment,
    SlopeClass,
    aggregate_area,
    apply_transfer,
    gap,
    segments,
    symmetric_model,
)
from .selectors import (
    SelectionError,
    SelectionState,
    SelectorKind,
    cttl_schedule,
    find_greedy_transfer_point,
    run_cttl,
    run_exhaustive,
    run_gttl,
    run_rttl,
    run_selector,
)
from .theory import (
    BoundReport,
    UnsupportedAssumptionError,
    cttl_optimal_area,
    ghost_cell_lower_bound,
    optimal_pick_and_gain,
    steps_to_cover,
    suboptimality_bound,
)
from .oracle import CombinatorialGuardError, OracleResult, exhaustive_best, greedy_vs_oracle
from .trainers import (
    CsvFormatError,
    CsvReplayTrainer,
    DecayingTrainer,
    EvaluatorResult,
    IdealTrainer,
    MissingDataError,
    NoisyTrainer,
    RingTrainer,
    TrainingError,
    load_csv_landscape,
    make_trainer,
)
from .ringsim import (
    CollisionError,
    GuidanceParams,
    IdmParams,
    RingConfig,
    RingState,
    equilibrium_speed,
    rollout_measure,
    simulate,
    step,
    train_and_measure,
)

__all__ = [name for name in dir() if not name.startswith("_")]
